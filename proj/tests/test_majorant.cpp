#include <wglab/majorant.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace wglab;

namespace {

const WTrickContext& ctx16()
{
    static const WTrickContext c(compute_W(2, 2), 2);
    return c;
}

} // namespace

TEST(Subset, Generators)
{
    const auto all = gen_subset(SubsetSpec::all(), 10000);
    EXPECT_DOUBLE_EQ(all.measured_density(), 1.0);
    EXPECT_EQ(all.size(), 1229u);

    const auto half = gen_subset(SubsetSpec::bernoulli(0.5, 42), 10000);
    EXPECT_GE(half.measured_density(), 0.45);
    EXPECT_LE(half.measured_density(), 0.55);

    const auto drop = gen_subset(SubsetSpec::drop_class(40, 3), 100000);
    EXPECT_NEAR(drop.measured_density(), 15.0 / 16.0, 0.01);
    EXPECT_DOUBLE_EQ(*drop.spec().intended_density(), 15.0 / 16.0);
    drop.for_each([](u64 p) { ASSERT_NE(p % 40, 3u); });

    EXPECT_EQ(gen_subset(SubsetSpec::none(), 1000).size(), 0u);
    EXPECT_THROW(gen_subset(SubsetSpec::all(), 99), std::invalid_argument);
}

TEST(Subset, SubsetOfPrimesAndDeterministic)
{
    const auto a = gen_subset(SubsetSpec::bernoulli(0.3, 5), 50000);
    const auto b = gen_subset(SubsetSpec::bernoulli(0.3, 5), 50000);
    EXPECT_EQ(a.members(), b.members());
    a.for_each([](u64 p) { ASSERT_TRUE(is_prime_trial(p)); });
    const auto c = gen_subset(SubsetSpec::bernoulli(0.3, 6), 50000);
    EXPECT_FALSE(a.members() == c.members());
}

TEST(Subset, WindowDropReportsPrefixMinimum)
{
    const auto s = gen_subset(SubsetSpec::window_drop({{1000, 5000}}), 20000);
    EXPECT_LT(s.min_prefix_density(), s.measured_density());
    EXPECT_DOUBLE_EQ(s.reported_density(), s.min_prefix_density());
    EXPECT_FALSE(s.spec().intended_density().has_value());
}

TEST(Subset, ParseRoundTrip)
{
    for (const std::string text : {"all", "none", "bernoulli:0.8:7", "classes:40:1,7,9", "prefix:1000", "windows:10-20,30-40"}) {
        EXPECT_EQ(SubsetSpec::parse(text).describe(), text);
    }
    EXPECT_EQ(SubsetSpec::parse("dropclass:8:3").describe(), "classes:8:0,1,2,4,5,6,7");
    EXPECT_THROW(SubsetSpec::parse("bogus"), std::invalid_argument);
    EXPECT_THROW(SubsetSpec::parse("bernoulli:x:1"), std::invalid_argument);
    EXPECT_THROW(SubsetSpec::parse("bernoulli:1.5:1"), std::invalid_argument);
}

TEST(Nu, Examples)
{
    const auto nu = build_nu(ctx16(), 1, 4096);
    EXPECT_NEAR(nu(18), (8.0 / (16.0 * 4.0)) * 2.0 * 17.0 * std::log(17.0), 1e-12);
    EXPECT_NEAR(nu(18), 12.04, 0.005);
    EXPECT_EQ(nu(1), 0.0);
    EXPECT_EQ(nu(5), 0.0);
    EXPECT_EQ(nu.meta().Y, iroot(16 * 4096 + 1, 2));
    EXPECT_THROW(build_nu(ctx16(), 3, 100), std::invalid_argument);
    EXPECT_THROW(build_nu(ctx16(), 4, 100), std::invalid_argument);
}

TEST(Nu, MeanAtLargeN)
{
    const auto nu = build_nu(ctx16(), 1, u64{1} << 17);
    EXPECT_GE(nu.mean(), 0.75);
    EXPECT_LE(nu.mean(), 1.25);
}

TEST(Nu, SupportIsPrimePowers)
{
    for (u64 b : ctx16().table.unit_residues()) {
        const auto nu = build_nu(ctx16(), b, 20000);
        for (u64 n = 1; n <= nu.size(); ++n) {
            const u64 x = 16 * n + b;
            const u64 r = iroot(x, 2);
            const bool prime_power = r * r == x && is_prime_trial(r);
            ASSERT_EQ(nu(n) > 0.0, prime_power) << n;
            if (prime_power) {
                ASSERT_NEAR(nu(n), ctx16().weight_scale(b) * 2.0 * r * std::log(static_cast<double>(r)), 1e-9);
            }
        }
    }
}

TEST(Nu, MeanTrendAcrossResidues)
{
    const WTrickContext ctx(compute_W(3, 2), 2);
    int improved = 0;
    const u64 bs[] = {1, 25, 49};
    for (u64 b : bs) {
        ASSERT_TRUE(ctx.table.in_Z(b));
        const double small = std::abs(build_nu(ctx, b, u64{1} << 12).mean() - 1.0);
        const double large = std::abs(build_nu(ctx, b, u64{1} << 17).mean() - 1.0);
        improved += large < small;
    }
    EXPECT_GE(improved, 2);
}

TEST(F, SubsetRestriction)
{
    const u64 N = 4096;
    const auto nu = build_nu(ctx16(), 1, N);
    const u64 lim = std::max<u64>(100, ctx16().Y(N, 1));
    const auto all = build_f(ctx16(), 1, N, gen_subset(SubsetSpec::all(), lim));
    EXPECT_EQ(all.values(), nu.values());

    const auto no17 = build_f(ctx16(), 1, N, gen_subset(SubsetSpec::window_drop({{17, 17}}), lim));
    EXPECT_EQ(no17(18), 0.0);
    EXPECT_GT(nu(18), 0.0);
}

TEST(F, ThinningRatioAndDomination)
{
    const u64 N = u64{1} << 16;
    const auto sub = gen_subset(SubsetSpec::bernoulli(0.8, 7), std::max<u64>(100, ctx16().Y(N, 1)));
    const auto nu = build_nu(ctx16(), 1, N);
    const auto f = build_f(ctx16(), 1, N, sub);
    const double ratio = f.sum() / nu.sum();
    EXPECT_GE(ratio, 0.6);
    EXPECT_LE(ratio, 0.95);
    for (u64 n = 1; n <= N; ++n) ASSERT_LE(f(n), nu(n));
    EXPECT_EQ(f.meta().kind, SequenceKind::f);
}

TEST(Mu, ExamplesAndPsi)
{
    const u64 N = 4096;
    const auto mb = build_mu(ctx16(), 1, N);
    EXPECT_DOUBLE_EQ(mb.mu(18), 8.5);
    EXPECT_DOUBLE_EQ(mb.mu(5), 4.5);
    const auto nu = build_nu(ctx16(), 1, N);
    EXPECT_EQ(nu(5), 0.0);
    EXPECT_NEAR(mb.L, 0.5 * std::log(16.0 * 4096 + 16), 1e-12);
    const auto psi = mb.psi_of(nu);
    EXPECT_NEAR(psi(18), nu(18) / mb.L, 1e-12);
    EXPECT_NEAR(psi(18), 2.17, 0.01);
    for (u64 n = 1; n <= N; ++n) ASSERT_LE(psi(n), mb.mu(n));
    EXPECT_EQ(psi.meta().kind, SequenceKind::psi);
}

TEST(Mu, PsiViolationIsDiagnosed)
{
    const auto mb = build_mu(ctx16(), 1, 100);
    EXPECT_THROW(mb.psi_of(WeightedSequence::spike(100, 2, 1.0)), std::logic_error);
}

TEST(MeanG, Examples)
{
    const u64 N = u64{1} << 16;
    const u64 lim = iroot(16 * N + 16, 2) + 1;
    const auto none = mean_g(ctx16(), N, gen_subset(SubsetSpec::none(), std::max<u64>(100, lim)));
    for (const auto& [b, g] : none.g) EXPECT_EQ(g, 0.0);

    const auto all = mean_g(ctx16(), N, gen_subset(SubsetSpec::all(), lim));
    EXPECT_GE(all.aggregate, 0.75);
    EXPECT_LE(all.aggregate, 1.25);
    EXPECT_NEAR(all.g.at(1), build_nu(ctx16(), 1, N).mean(), 1e-12);

    const auto b8 = mean_g(ctx16(), N, gen_subset(SubsetSpec::bernoulli(0.8, 7), lim));
    EXPECT_NEAR(b8.density_margin, 0.6, 1e-12);
    EXPECT_NEAR(b8.mean_floor, 0.9 * 0.8, 1e-12);
    EXPECT_GE(b8.aggregate, 0.6 - 0.15);
}

TEST(MeanG, BooksBalance)
{
    for (auto [w, k] : {std::pair<u64, unsigned>{2, 2}, {3, 2}, {2, 3}}) {
        const WTrickContext ctx(compute_W(w, k), k);
        for (u64 N : {u64{1000}, u64{1} << 14}) {
            const auto sub = gen_subset(SubsetSpec::bernoulli(0.7, 3), std::max<u64>(100, iroot(ctx.W.value() * N + ctx.W.value(), k)));
            const auto means = mean_g(ctx, N, sub);
            double lhs = 0.0;
            for (const auto& [b, g] : means.g) lhs += g * static_cast<double>(N) / ctx.weight_scale(b);
            const double rhs = prime_power_mass(ctx, N, sub);
            EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(1.0, rhs)) << w << " " << k << " " << N;
        }
    }
}

TEST(Serialization, BinaryRoundTrip)
{
    const auto nu = build_nu(ctx16(), 9, 3000);
    std::stringstream ss;
    write_binary(ss, nu);
    EXPECT_EQ(ss.str().size(), 5 * 8 + 3000 * 8u);
    const auto back = read_binary_sequence(ss);
    EXPECT_EQ(back.values(), nu.values());
    EXPECT_EQ(back.meta().kind, SequenceKind::nu);
    EXPECT_EQ(back.meta().W, 16u);
    EXPECT_EQ(back.meta().b, 9u);
    EXPECT_EQ(back.meta().k, 2u);
    EXPECT_EQ(back.meta().N, 3000u);
}

TEST(Serialization, Csv)
{
    std::ostringstream os;
    write_csv(os, WeightedSequence::spike(10, 3, 1.0 / 3.0));
    EXPECT_EQ(os.str(), "n,value\n3,0.333333333333\n");
}
