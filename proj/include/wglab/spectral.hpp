#pragma once

/// @file spectral.hpp
/// Circle-method numerics: grid spectra of weighted sequences, the
/// major/minor arc decomposition, the local exponential sums S_q^* and
/// S_q^diamond with their smooth/rough factorization, the major-arc model
/// for nu_b, the pseudorandomness gauge, and L^p restriction norms.

#include "core_arith.hpp"
#include "fft.hpp"
#include "majorant.hpp"

#include <json.hpp>

#include <cmath>
#include <complex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace wglab {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// e(x) = exp(2 pi i x).
inline cplx e_of(long double x)
{
    const long double frac = x - std::floor(x);
    const double theta = static_cast<double>(kTwoPi * frac);
    return {std::cos(theta), std::sin(theta)};
}

// ---------------------------------------------------------------------------
// Spectra
// ---------------------------------------------------------------------------

/// Samples of sum_n seq(n) e(n j / M) for j = 0..M-1.
struct Spectrum {
    u64 M = 0;
    std::vector<cplx> values;
    SequenceMeta source;

    const cplx& at(u64 j) const { return values.at(j % M); }
    double frequency(u64 j) const noexcept { return static_cast<double>(j) / static_cast<double>(M); }
};

inline std::vector<cplx> detail_transform(const WeightedSequence& seq, u64 M)
{
    std::vector<cplx> data(M, 0.0);
    for (u64 n = 1; n <= seq.size(); ++n) data[n % M] += seq(n);
    dft_positive(data);
    return data;
}

inline Spectrum dft_spectrum(const WeightedSequence& seq, u64 M)
{
    if (M < 2 * seq.size()) throw std::invalid_argument("dft_spectrum: grid size M must be >= 2N");
    return {M, detail_transform(seq, M), seq.meta()};
}

/// Default grid: 8 * next_pow2(N).
inline u64 default_grid(u64 N, u64 factor = 8) { return factor * next_pow2(N); }

/// Direct evaluation of the trigonometric polynomial at a/q, with the phase
/// n a mod q reduced exactly.
inline cplx evaluate_at_rational(const WeightedSequence& seq, u64 a, u64 q)
{
    cplx s = 0.0;
    for (u64 n = 1; n <= seq.size(); ++n) {
        const double v = seq(n);
        if (v != 0.0) s += v * unit_root(mulmod(n % q, a % q, q), q);
    }
    return s;
}

/// Direct evaluation at a real alpha.
inline cplx evaluate_at(const WeightedSequence& seq, double alpha)
{
    cplx s = 0.0;
    for (u64 n = 1; n <= seq.size(); ++n) {
        const double v = seq(n);
        if (v != 0.0) s += v * e_of(static_cast<long double>(n) * alpha);
    }
    return s;
}

/// j,re,im rows.
inline void write_csv(std::ostream& os, const Spectrum& s)
{
    os << "j,re,im\n";
    for (u64 j = 0; j < s.M; ++j) os << j << "," << detail::fmt12(s.values[j].real()) << "," << detail::fmt12(s.values[j].imag()) << "\n";
}

/// Same header layout as a WeightedSequence dump with M in the length slot,
/// followed by interleaved (re, im) float64 pairs.
inline void write_binary(std::ostream& os, const Spectrum& s)
{
    for (u64 v : {static_cast<u64>(s.source.kind), s.source.W, s.source.b, s.source.k, s.M}) detail::write_u64(os, v);
    for (const auto& c : s.values) {
        detail::write_f64(os, c.real());
        detail::write_f64(os, c.imag());
    }
}

inline Spectrum read_binary_spectrum(std::istream& is)
{
    Spectrum s;
    s.source.kind = static_cast<SequenceKind>(detail::read_u64(is));
    s.source.W = detail::read_u64(is);
    s.source.b = detail::read_u64(is);
    s.source.k = detail::read_u64(is);
    s.M = detail::read_u64(is);
    s.values.resize(s.M);
    for (auto& c : s.values) {
        const double re = detail::read_f64(is);
        c = {re, detail::read_f64(is)};
    }
    return s;
}

// ---------------------------------------------------------------------------
// Arcs
// ---------------------------------------------------------------------------

/// L = log(WN+W)/k, P = L^sigma, Q = WN / L^sigma. Requires P < Q.
struct ArcParams {
    double sigma = 4.0;
    double sigma0 = 2.0;
    u64 W = 1, N = 1, k = 1;
    double L = 0.0, P = 0.0, Q = 0.0;

    static ArcParams make(double sigma, double sigma0, u64 W, u64 N, u64 k)
    {
        if (!(sigma > 0.0) || !(sigma0 > 0.0)) throw std::invalid_argument("ArcParams: sigma and sigma0 must be positive");
        ArcParams p{sigma, sigma0, W, N, k};
        p.L = std::log(static_cast<double>(W) * static_cast<double>(N) + static_cast<double>(W)) / static_cast<double>(k);
        p.P = std::pow(p.L, sigma);
        p.Q = static_cast<double>(W) * static_cast<double>(N) / p.P;
        if (!(p.P < p.Q))
            throw std::invalid_argument("ArcParams: degenerate decomposition, P = " + std::to_string(p.P) + " >= Q = " + std::to_string(p.Q));
        return p;
    }
};

enum class ArcClass { major, minor };

struct Arc {
    u64 q = 1;
    i64 a = 0;
    double center = 0.0;
    double halfwidth = 0.0;
    double distance = 0.0; ///< ||alpha - a/q|| on the circle
    ArcClass classification = ArcClass::minor;
};

inline double circle_distance(double x, double y)
{
    double d = std::fmod(std::abs(x - y), 1.0);
    return std::min(d, 1.0 - d);
}

/// Classifies alpha: major iff some a/q with q <= P, (a, q) = 1 lies within
/// 1/Q. The Dirichlet witness with denominator bound Q is tried first; when it
/// is not major the denominators q <= P are scanned so overlapping arcs are
/// not missed. Minor results carry the Dirichlet witness.
inline Arc arc_decompose(const ArcParams& params, double alpha)
{
    alpha -= std::floor(alpha);
    if (alpha >= 1.0) alpha = 0.0;
    const u64 Qint = std::max<u64>(1, static_cast<u64>(std::floor(params.Q)));
    const Rational r = rational_approx(alpha, Qint);
    Arc arc;
    arc.q = r.q;
    arc.a = r.a % static_cast<i64>(r.q);
    arc.center = static_cast<double>(arc.a) / static_cast<double>(arc.q);
    arc.halfwidth = 1.0 / params.Q;
    arc.distance = circle_distance(alpha, arc.center);
    if (static_cast<double>(r.q) <= params.P && arc.distance <= arc.halfwidth) {
        arc.classification = ArcClass::major;
        return arc;
    }
    const u64 Pint = static_cast<u64>(std::floor(params.P));
    for (u64 q = 1; q <= Pint; ++q) {
        const i64 a = static_cast<i64>(std::llround(alpha * static_cast<double>(q))) % static_cast<i64>(q);
        if (std::gcd(static_cast<u64>(a), q) != 1 && !(q == 1 && a == 0)) continue;
        const double c = static_cast<double>(a) / static_cast<double>(q);
        const double d = circle_distance(alpha, c);
        if (d <= arc.halfwidth) return Arc{q, a, c, arc.halfwidth, d, ArcClass::major};
    }
    return arc;
}

/// Reference classifier: scans every q <= P and every a coprime to q.
inline ArcClass classify_by_scan(const ArcParams& params, double alpha)
{
    alpha -= std::floor(alpha);
    const u64 Pint = static_cast<u64>(std::floor(params.P));
    for (u64 q = 1; q <= Pint; ++q)
        for (u64 a = 0; a < q; ++a) {
            if (std::gcd(a, q) != 1) continue;
            if (circle_distance(alpha, static_cast<double>(a) / static_cast<double>(q)) <= 1.0 / params.Q) return ArcClass::major;
        }
    return ArcClass::minor;
}

// ---------------------------------------------------------------------------
// Exponential sums
// ---------------------------------------------------------------------------

struct ExpSumValue {
    u64 q, a, z, W, k, b;
    cplx value;
};

namespace detail {

inline void require_coprime(u64 a, u64 q, const char* who)
{
    if (q == 0) throw std::invalid_argument(std::string(who) + ": q must be >= 1");
    if (q > 1 && std::gcd(a % q, q) != 1) throw std::invalid_argument(std::string(who) + ": (a, q) must be 1");
}

/// ((z + W r)^k - c) / W mod q, exactly, assuming (z + W r)^k = c (mod W).
inline u64 reduced_exponent(u64 z, u64 r, u64 W, u64 k, u64 c, u64 q)
{
    const u128 Wq = static_cast<u128>(W) * q;
    if (Wq >= (u128{1} << 63)) throw std::overflow_error("exp sum: W q exceeds 63 bits");
    const u64 m = static_cast<u64>(Wq);
    const u64 x = static_cast<u64>((static_cast<u128>(z) + static_cast<u128>(W) * r) % m);
    const u64 num = (powmod(x, k, m) + m - c % m) % m;
    return num / W % q;
}

} // namespace detail

/// S_q^*(a, z) = sum_{r < q, (z + W r, W q) = 1} e_q(a ((z + W r)^k - b) / W).
inline ExpSumValue exp_sum_Sstar(u64 q, u64 a, u64 W, u64 k, u64 b, u64 z)
{
    detail::require_coprime(a, q, "exp_sum_Sstar");
    if (std::gcd(z, W) != 1) throw std::invalid_argument("exp_sum_Sstar: (z, W) must be 1");
    if (powmod(z, k, W) != b % W) throw std::invalid_argument("exp_sum_Sstar: z^k != b (mod W), exponent is not an integer");
    cplx s = 0.0;
    for (u64 r = 0; r < q; ++r) {
        const u128 x = static_cast<u128>(z) + static_cast<u128>(W) * r;
        if (std::gcd(static_cast<u64>(x % (static_cast<u128>(W) * q)), W * q) != 1) continue;
        s += unit_root(mulmod(a % q, detail::reduced_exponent(z, r, W, k, b, q), q), q);
    }
    return {q, a, z, W, k, b, s};
}

/// S_q^diamond(a, z) via the binomial polynomial
/// sum_{l=1..k} C(k,l) W^(l-1) z^(k-l) r^l, reduced mod q coefficientwise.
inline cplx exp_sum_diamond(u64 q, u64 a, u64 W, u64 k, u64 z)
{
    if (q == 1) return 1.0;
    std::vector<u64> coeff(k + 1, 0);
    std::vector<u128> c(k + 1, 1);
    for (u64 l = 1; l <= k; ++l) c[l] = c[l - 1] * (k - l + 1) / l;
    for (u64 l = 1; l <= k; ++l)
        coeff[l] = mulmod(mulmod(static_cast<u64>(c[l] % q), powmod(W, l - 1, q), q), powmod(z, k - l, q), q);
    cplx s = 0.0;
    for (u64 r = 0; r < q; ++r) {
        const u128 x = static_cast<u128>(z) + static_cast<u128>(W) * r;
        if (std::gcd(static_cast<u64>(x % q), q) != 1) continue;
        u64 poly = 0;
        for (u64 l = k; l >= 1; --l) poly = (mulmod(poly, r, q) + coeff[l]) % q;
        poly = mulmod(poly, r, q);
        s += unit_root(mulmod(a % q, poly, q), q);
    }
    return s;
}

struct FactorizationCheck {
    u64 q, u, v, a1, a2, h, u_prime;
    cplx direct;      ///< S_q^diamond(a, z)
    cplx product;     ///< S_u^diamond(a1, z) * S_v^diamond(a2, z)
    cplx s_u, s_v;
    bool h_divides_k;
    cplx local_law;   ///< exact 0 when h does not divide k, else h sum_{r < u/h} e_u(a1 P(r))
};

/// Smooth/rough factorization of S_q^diamond: q = u v with u built from the
/// primes of W, a1 = a vbar (mod u), a2 = a ubar (mod v), u ubar + v vbar = 1.
inline FactorizationCheck exp_sum_factor(u64 q, u64 a, const FactoredModulus& W, u64 k, u64 z)
{
    detail::require_coprime(a, q, "exp_sum_factor");
    const u64 Wv = W.value();
    if (std::gcd(z, Wv) != 1) throw std::invalid_argument("exp_sum_factor: (z, W) must be 1");
    const auto [U, V] = FactoredModulus::factor(q).split([&](u64 p) { return W.exponent_of(p) > 0; });
    FactorizationCheck out{};
    out.q = q;
    out.u = U.value();
    out.v = V.value();
    const auto [g, x, y] = extended_gcd(static_cast<i64>(out.u), static_cast<i64>(out.v));
    (void)g;
    const i64 ubar = x, vbar = y;
    auto reduce = [](i64 val, u64 m) -> u64 {
        if (m == 1) return 0;
        const i64 mm = static_cast<i64>(m);
        return static_cast<u64>(((val % mm) + mm) % mm);
    };
    out.a1 = mulmod(a % out.u, reduce(vbar, out.u), out.u);
    out.a2 = mulmod(a % out.v, reduce(ubar, out.v), out.v);
    if (out.u == 1) out.a1 = 0;
    if (out.v == 1) out.a2 = 0;
    out.direct = exp_sum_diamond(q, a, Wv, k, z);
    out.s_u = exp_sum_diamond(out.u, out.a1, Wv, k, z);
    out.s_v = exp_sum_diamond(out.v, out.a2, Wv, k, z);
    out.product = out.s_u * out.s_v;
    out.h = std::gcd(out.u, Wv);
    out.u_prime = out.u / out.h;
    out.h_divides_k = k % out.h == 0;
    if (!out.h_divides_k) {
        out.local_law = 0.0;
    } else {
        // Terms of S_u^diamond depend only on r mod u' when h | k.
        cplx s = 0.0;
        std::vector<u128> c(k + 1, 1);
        for (u64 l = 1; l <= k; ++l) c[l] = c[l - 1] * (k - l + 1) / l;
        for (u64 r = 0; r < out.u_prime; ++r) {
            u64 poly = 0;
            for (u64 l = 1; l <= k; ++l) {
                const u64 term = mulmod(mulmod(static_cast<u64>(c[l] % out.u), powmod(Wv, l - 1, out.u), out.u),
                                        mulmod(powmod(z, k - l, out.u), powmod(r, l, out.u), out.u), out.u);
                poly = (poly + term) % out.u;
            }
            s += unit_root(mulmod(out.a1, poly, out.u), out.u);
        }
        out.local_law = static_cast<double>(out.h) * s;
    }
    return out;
}

/// I(beta) = integral_0^N e(beta t) dt.
inline cplx integral_I(double beta, u64 N)
{
    const double n = static_cast<double>(N);
    if (std::abs(beta) < 1e-15) return n;
    const cplx i(0.0, 1.0);
    return (e_of(static_cast<long double>(beta) * N) - 1.0) / (kTwoPi * beta * i);
}

/// Main term of nu_b-hat near a/q:
/// phi(W) / (phi(Wq) sigma(b)) * sum_{z in [W], z^k = b} S_q^*(a, z) * I(beta).
inline cplx major_arc_model(u64 q, u64 a, double beta, const WTrickContext& ctx, u64 b, u64 N)
{
    ctx.require_unit(b, "major_arc_model");
    detail::require_coprime(a, q, "major_arc_model");
    const u64 W = ctx.W.value();
    cplx zsum = 0.0;
    for (u64 z = 1; z <= W; ++z) {
        if (std::gcd(z, W) != 1 || powmod(z, ctx.k, W) != b) continue;
        zsum += exp_sum_Sstar(q, a, W, ctx.k, b, z).value;
    }
    const double phiW = static_cast<double>(ctx.phi);
    const double phiWq = static_cast<double>((ctx.W * FactoredModulus::factor(q)).phi());
    return phiW / (phiWq * static_cast<double>(ctx.sigma(b))) * zsum * integral_I(beta, N);
}

// ---------------------------------------------------------------------------
// Pseudorandomness gauge and restriction norms
// ---------------------------------------------------------------------------

struct GaugeReport {
    u64 N = 0, M = 0;
    double D = 0.0;      ///< max_j |nu-hat(j/M) - 1_[N]-hat(j/M)| / N
    u64 argmax = 0;
    double alpha = 0.0;
    std::optional<Arc> arc;
};

/// Grid maximum of |nu-hat - 1_[N]-hat| / N; the argmax is classified when
/// arc parameters are supplied.
inline GaugeReport pseudorandom_gauge(const WeightedSequence& nu, u64 M, const std::optional<ArcParams>& arcs = std::nullopt)
{
    const u64 N = nu.size();
    if (M < 2 * N) throw std::invalid_argument("pseudorandom_gauge: grid size M must be >= 2N");
    std::vector<double> diff(nu.values());
    for (auto& v : diff) v -= 1.0;
    const auto spec = detail_transform(WeightedSequence(nu.meta(), std::move(diff)), M);
    GaugeReport r{N, M, 0.0, 0, 0.0, std::nullopt};
    for (u64 j = 0; j < M; ++j) {
        const double m = std::abs(spec[j]);
        if (m > r.D) {
            r.D = m;
            r.argmax = j;
        }
    }
    r.D /= static_cast<double>(N);
    r.alpha = static_cast<double>(r.argmax) / static_cast<double>(M);
    if (arcs) r.arc = arc_decompose(*arcs, r.alpha);
    return r;
}

struct RestrictionNorm {
    u64 N = 0, M = 0;
    double exponent = 0.0;
    double norm = 0.0; ///< ((1/M) sum_j |f-hat(j/M)|^p)^(1/p)
    double K = 0.0;    ///< norm / N^(1 - 1/p)
};

inline RestrictionNorm grid_lp_norm(const WeightedSequence& seq, double exponent, u64 M)
{
    const u64 N = seq.size();
    if (M < 4 * N) throw std::invalid_argument("restriction_norm: grid size M must be >= 4N");
    const auto spec = detail_transform(seq, M);
    long double acc = 0.0L;
    for (const auto& c : spec) acc += std::pow(static_cast<long double>(std::abs(c)), static_cast<long double>(exponent));
    RestrictionNorm r{N, M, exponent};
    r.norm = static_cast<double>(std::pow(acc / static_cast<long double>(M), 1.0L / exponent));
    r.K = r.norm / std::pow(static_cast<double>(N), 1.0 - 1.0 / exponent);
    return r;
}

/// Restriction constant for exponents above 2.
inline RestrictionNorm restriction_norm(const WeightedSequence& seq, double exponent, u64 M)
{
    if (!(exponent > 2.0)) throw std::invalid_argument("restriction_norm: exponent must exceed 2");
    return grid_lp_norm(seq, exponent, M);
}

/// Exponent-2 reference mode (Parseval).
inline RestrictionNorm l2_reference_norm(const WeightedSequence& seq, u64 M) { return grid_lp_norm(seq, 2.0, M); }

inline void to_json(nlohmann::json& j, const GaugeReport& r)
{
    j = nlohmann::json{{"N", r.N}, {"M", r.M}, {"value", r.D}, {"argmax_j", r.argmax}, {"alpha", r.alpha}, {"arc", nullptr}};
    if (r.arc)
        j["arc"] = {{"q", r.arc->q},
                    {"a", r.arc->a},
                    {"distance", r.arc->distance},
                    {"class", r.arc->classification == ArcClass::major ? "major" : "minor"}};
}

inline void to_json(nlohmann::json& j, const RestrictionNorm& r)
{
    j = nlohmann::json{{"N", r.N}, {"M", r.M}, {"exponent", r.exponent}, {"norm", r.norm}, {"value", r.K}};
}

} // namespace wglab
