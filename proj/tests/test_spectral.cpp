#include <wglab/spectral.hpp>

#include <gtest/gtest.h>

#include <numbers>
#include <random>
#include <sstream>

using namespace wglab;

namespace {

const WTrickContext& ctx16()
{
    static const WTrickContext c(compute_W(2, 2), 2);
    return c;
}

cplx geometric(u64 N, u64 j, u64 M)
{
    const cplx r = e_of(static_cast<long double>(j) / M);
    return r * (e_of(static_cast<long double>(j) * N / M) - 1.0) / (r - 1.0);
}

double parseval_gap(const Spectrum& s, const WeightedSequence& seq)
{
    double lhs = 0.0, rhs = 0.0;
    for (const auto& v : s.values) lhs += std::norm(v);
    lhs /= static_cast<double>(s.M);
    for (double v : seq.values()) rhs += v * v;
    return std::abs(lhs - rhs) / std::max(1.0, rhs);
}

} // namespace

TEST(Spectrum, IndicatorClosedForm)
{
    const u64 N = 1000, M = 4096;
    const auto s = dft_spectrum(WeightedSequence::indicator(N), M);
    EXPECT_NEAR(s.at(0).real(), 1000.0, 1e-9);
    EXPECT_NEAR(s.at(0).imag(), 0.0, 1e-9);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
        const u64 j = 1 + rng() % (M - 1);
        EXPECT_LT(std::abs(s.at(j) - geometric(N, j, M)), 1e-8) << j;
    }
}

TEST(Spectrum, ParsevalAndSymmetry)
{
    for (u64 N : {u64{1000}, u64{4096}}) {
        const auto nu = build_nu(ctx16(), 9, N);
        const auto s = dft_spectrum(nu, default_grid(N));
        EXPECT_LT(parseval_gap(s, nu), 1e-9);
        EXPECT_NEAR(s.at(0).real(), nu.sum(), 1e-9 * nu.sum());
        for (u64 j = 1; j < s.M; ++j) ASSERT_LT(std::abs(s.values[s.M - j] - std::conj(s.values[j])), 1e-9 * nu.sum());
    }
}

TEST(Spectrum, GridMatchesDirectEvaluation)
{
    const u64 N = 2000, M = 8192;
    const auto nu = build_nu(ctx16(), 1, N);
    const auto s = dft_spectrum(nu, M);
    for (u64 j : {u64{1}, u64{77}, u64{2048}, u64{4096}, u64{8000}}) {
        const u64 g = std::gcd(j, M);
        EXPECT_LT(std::abs(s.at(j) - evaluate_at_rational(nu, j / g, M / g)), 1e-8 * nu.sum());
        EXPECT_LT(std::abs(s.at(j) - evaluate_at(nu, static_cast<double>(j) / M)), 1e-7 * nu.sum());
    }
}

TEST(Spectrum, RejectsSmallGrid)
{
    EXPECT_THROW(dft_spectrum(WeightedSequence::indicator(100), 199), std::invalid_argument);
    EXPECT_NO_THROW(dft_spectrum(WeightedSequence::indicator(100), 200));
}

TEST(Spectrum, Export)
{
    const auto s = dft_spectrum(build_nu(ctx16(), 1, 64), 128);
    std::stringstream bin;
    write_binary(bin, s);
    EXPECT_EQ(bin.str().size(), 5 * 8 + 128 * 16u);
    const auto back = read_binary_spectrum(bin);
    EXPECT_EQ(back.M, 128u);
    EXPECT_EQ(back.source.W, 16u);
    EXPECT_EQ(back.values, s.values);
    std::ostringstream csv;
    write_csv(csv, s);
    EXPECT_EQ(csv.str().substr(0, 9), "j,re,im\n0");
}

TEST(Arcs, ParamsRejectDegenerate)
{
    EXPECT_THROW(ArcParams::make(4.0, 2.0, 16, 4096, 2), std::invalid_argument);
    const auto p = ArcParams::make(2.0, 1.0, 16, 4096, 2);
    EXPECT_NEAR(p.L, 0.5 * std::log(16.0 * 4096 + 16), 1e-12);
    EXPECT_NEAR(p.P, p.L * p.L, 1e-9);
    EXPECT_NEAR(p.Q, 16.0 * 4096 / p.P, 1e-6);
    EXPECT_LT(p.P, p.Q);
}

TEST(Arcs, Examples)
{
    const auto p = ArcParams::make(2.0, 1.0, 16, 4096, 2);
    ASSERT_GE(p.P, 3.0);
    const auto half = arc_decompose(p, 0.5);
    EXPECT_EQ(half.classification, ArcClass::major);
    EXPECT_EQ(half.q, 2u);
    EXPECT_EQ(half.a, 1);
    const auto third = arc_decompose(p, 1.0 / 3.0);
    EXPECT_EQ(third.classification, ArcClass::major);
    EXPECT_EQ(third.q, 3u);
    EXPECT_EQ(third.a, 1);

    const auto small = ArcParams::make(1.0, 1.0, 16, u64{1} << 20, 2);
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    EXPECT_EQ(arc_decompose(small, golden).classification, ArcClass::minor);
}

TEST(Arcs, ConsistentWithScan)
{
    const auto p = ArcParams::make(1.5, 1.0, 16, u64{1} << 17, 2);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int majors = 0;
    for (int i = 0; i < 1000; ++i) {
        // half the samples sit near low-denominator rationals
        double alpha = U(rng);
        if (i % 2 == 0) {
            const u64 q = 1 + rng() % 25, a = rng() % q;
            alpha = static_cast<double>(a) / q + (U(rng) - 0.5) * 4.0 / p.Q;
            alpha -= std::floor(alpha);
        }
        const auto arc = arc_decompose(p, alpha);
        ASSERT_EQ(arc.classification, classify_by_scan(p, alpha)) << alpha;
        ASSERT_GE(arc.q, 1u);
        if (arc.classification == ArcClass::major) {
            ++majors;
            ASSERT_LE(static_cast<double>(arc.q), p.P);
            ASSERT_LE(arc.distance, 1.0 / p.Q);
            ASSERT_TRUE(arc.q == 1 || std::gcd(static_cast<u64>(arc.a), arc.q) == 1);
        } else {
            ASSERT_LE(static_cast<double>(arc.q), p.Q);
            ASSERT_LE(arc.distance, 1.0 / (static_cast<double>(arc.q) * std::floor(p.Q)) + 1e-15);
        }
    }
    EXPECT_GT(majors, 100);
}

TEST(ExpSums, SstarExamples)
{
    EXPECT_LT(std::abs(exp_sum_Sstar(1, 0, 16, 2, 1, 1).value - 1.0), 1e-12);
    EXPECT_LT(std::abs(exp_sum_Sstar(3, 1, 16, 2, 1, 1).value - 2.0), 1e-12);
    EXPECT_THROW(exp_sum_Sstar(3, 1, 16, 2, 1, 3), std::invalid_argument);
    EXPECT_THROW(exp_sum_Sstar(4, 2, 16, 2, 1, 1), std::invalid_argument);
    EXPECT_THROW(exp_sum_Sstar(3, 1, 16, 2, 1, 2), std::invalid_argument);
}

TEST(ExpSums, SstarSumVanishesForK4)
{
    const u64 W = 256;
    const auto t = power_residues(FactoredModulus::factor(W), 4);
    for (u64 b : t.unit_residues())
        for (u64 q : {2u, 4u})
            for (u64 a = 1; a < q; a += 2) {
                cplx total = 0.0;
                for (u64 z = 1; z < W; ++z)
                    if (z % 2 == 1 && powmod(z, 4, W) == b) total += exp_sum_Sstar(q, a, W, 4, b, z).value;
                EXPECT_LT(std::abs(total), 1e-6) << "b=" << b << " q=" << q;
            }
}

TEST(ExpSums, TrivialBound)
{
    std::mt19937_64 rng(8);
    for (int i = 0; i < 300; ++i) {
        const u64 q = 1 + rng() % 200;
        u64 a = rng() % q;
        while (std::gcd(a, q) != 1) a = (a + 1) % q;
        u64 z = 1 + 2 * (rng() % 8);
        const u64 b = powmod(z, 2, 16);
        EXPECT_LE(std::abs(exp_sum_Sstar(q, a, 16, 2, b, z).value), static_cast<double>(q) + 1e-9);
    }
}

TEST(ExpSums, FactorizationIdentity)
{
    const auto W = FactoredModulus::factor(1296);
    const auto one = exp_sum_factor(1, 0, W, 2, 5);
    EXPECT_LT(std::abs(one.direct - 1.0), 1e-12);
    EXPECT_LT(std::abs(one.product - 1.0), 1e-12);

    std::mt19937_64 rng(13);
    for (int i = 0; i < 100; ++i) {
        const u64 q = (i < 10) ? 15 : 1 + rng() % 1000;
        u64 a = rng() % q;
        while (q > 1 && std::gcd(a, q) != 1) a = (a + 1) % q;
        u64 z = 1 + rng() % 1295;
        while (std::gcd(z, u64{1296}) != 1) ++z;
        const auto r = exp_sum_factor(q, a, W, 2, z);
        EXPECT_EQ(r.u * r.v, q);
        EXPECT_LT(std::abs(r.direct - r.product), 1e-9) << q << " " << a << " " << z;
    }
}

TEST(ExpSums, VanishingLaw)
{
    const auto W = FactoredModulus::factor(1296);
    const auto r8 = exp_sum_factor(8, 3, W, 2, 5);
    EXPECT_EQ(r8.h, 8u);
    EXPECT_FALSE(r8.h_divides_k);
    EXPECT_LT(std::abs(r8.s_u), 1e-9);
    EXPECT_EQ(r8.local_law, cplx(0.0));

    int vanishing = 0, divisible = 0;
    for (u64 Wv : {u64{2}, u64{6}, u64{16}, u64{36}, u64{1296}})
        for (unsigned k : {2u, 3u, 4u}) {
            const auto Wf = FactoredModulus::factor(Wv);
            for (u64 u = 2; u <= 200; ++u) {
                const auto [smooth, rough] = FactoredModulus::factor(u).split([&](u64 p) { return Wf.exponent_of(p) > 0; });
                if (rough.value() != 1) continue;
                for (u64 a = 1; a < u; a += 2) {
                    if (std::gcd(a, u) != 1) continue;
                    for (u64 z = 1; z < std::min<u64>(Wv, 12); ++z) {
                        if (std::gcd(z, Wv) != 1) continue;
                        const auto r = exp_sum_factor(u, a, Wf, k, z);
                        ASSERT_LT(std::abs(r.local_law - r.direct), 1e-9) << Wv << " " << k << " " << u << " " << a << " " << z;
                        if (r.h_divides_k) {
                            ++divisible;
                        } else {
                            ++vanishing;
                            ASSERT_LT(std::abs(r.direct), 1e-9);
                        }
                    }
                }
            }
        }
    EXPECT_GT(vanishing, 100);
    EXPECT_GT(divisible, 100);
}

TEST(Integral, ClosedForm)
{
    const u64 N = 1000;
    EXPECT_EQ(integral_I(0.0, N), cplx(1000.0));
    EXPECT_LT(std::abs(integral_I(1.0 / N, N)), 1e-9);
    EXPECT_NEAR(std::abs(integral_I(0.5 / N, N)), 2.0 * N / std::numbers::pi, 1e-9);
    // midpoint-rule oracle at an arbitrary beta
    const double beta = 0.0123;
    cplx acc = 0.0;
    const int steps = 200000;
    for (int i = 0; i < steps; ++i) acc += e_of(beta * (i + 0.5) * N / steps);
    acc *= static_cast<double>(N) / steps;
    EXPECT_LT(std::abs(acc - integral_I(beta, N)), 1e-6);
}

TEST(MajorArcModel, Examples)
{
    const u64 N = 4096;
    EXPECT_LT(std::abs(major_arc_model(1, 0, 0.0, ctx16(), 1, N) - static_cast<double>(N)), 1e-9);
    EXPECT_LT(std::abs(major_arc_model(2, 1, 0.0, ctx16(), 1, N)), 1e-9);
    const cplx m0 = major_arc_model(3, 1, 0.0, ctx16(), 1, N);
    ASSERT_GT(std::abs(m0), 1e-6);
    for (double beta : {1e-4, 3e-4, -2e-4}) {
        const cplx mb = major_arc_model(3, 1, beta, ctx16(), 1, N);
        EXPECT_LT(std::abs(mb / m0 - integral_I(beta, N) / static_cast<double>(N)), 1e-12);
    }
    EXPECT_THROW(major_arc_model(2, 1, 0.0, ctx16(), 3, N), std::invalid_argument);
}

TEST(Gauge, Examples)
{
    const u64 N = 4096, M = 8 * N;
    EXPECT_LT(pseudorandom_gauge(WeightedSequence::indicator(N), M).D, 1e-9);
    const auto spike = pseudorandom_gauge(WeightedSequence::spike(N, 1, static_cast<double>(N)), M);
    EXPECT_GE(spike.D, 1.0 - 1e-9);
    EXPECT_LE(spike.D, 2.0);
    EXPECT_FALSE(spike.arc.has_value());
    const auto p = ArcParams::make(2.0, 1.0, 16, N, 2);
    const auto g = pseudorandom_gauge(build_nu(ctx16(), 1, N), M, p);
    ASSERT_TRUE(g.arc.has_value());
    EXPECT_EQ(g.alpha, static_cast<double>(g.argmax) / M);
    EXPECT_THROW(pseudorandom_gauge(WeightedSequence::indicator(N), N), std::invalid_argument);
    const nlohmann::json j = g;
    EXPECT_TRUE(j.contains("value"));
    EXPECT_TRUE(j["arc"].is_object());
}

TEST(Restriction, Rejections)
{
    EXPECT_THROW(restriction_norm(WeightedSequence::indicator(100), 2.0, 400), std::invalid_argument);
    EXPECT_THROW(restriction_norm(WeightedSequence::indicator(100), 6.5, 399), std::invalid_argument);
}

TEST(Restriction, IndicatorAndSpike)
{
    EXPECT_NEAR(l2_reference_norm(WeightedSequence::indicator(4096), 4 * 4096).K, 1.0, 1e-9);
    double kmin = 1e300, kmax = 0.0;
    for (u64 e = 12; e <= 16; ++e) {
        const u64 N = u64{1} << e;
        const double K = restriction_norm(WeightedSequence::indicator(N), 6.5, default_grid(N)).K;
        kmin = std::min(kmin, K);
        kmax = std::max(kmax, K);
        const double Ks = restriction_norm(WeightedSequence::spike(N, 1, static_cast<double>(N)), 6.5, default_grid(N)).K;
        EXPECT_NEAR(Ks / std::pow(static_cast<double>(N), 1.0 / 6.5), 1.0, 1e-9);
    }
    EXPECT_LE(kmax / kmin, 1.5);
}

TEST(Restriction, GridRefinementConverges)
{
    const u64 N = 4096;
    const auto f = build_nu(ctx16(), 1, N);
    const double k1 = restriction_norm(f, 6.5, 4 * N).K;
    const double k2 = restriction_norm(f, 6.5, 8 * N).K;
    const double k3 = restriction_norm(f, 6.5, 16 * N).K;
    EXPECT_LE(std::abs(k3 - k2), std::abs(k2 - k1) + 1e-12);
    EXPECT_LT(std::abs(k3 - k2) / k3, 0.02);
}
