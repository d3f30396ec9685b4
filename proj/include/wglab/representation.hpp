#pragma once

/// @file representation.hpp
/// Ordered counts of n = p_1^k + ... + p_s^k over a prime subset, congruence
/// admissibility, windowed coverage probes, and the s-fold convolution gauge.

#include "core_arith.hpp"
#include "fft.hpp"
#include "local_structure.hpp"
#include "majorant.hpp"
#include "parallel.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace wglab {

/// n = s (mod R_k).
inline bool admissible_filter(u64 n, u64 s, unsigned k)
{
    const u64 R = compute_Rk(k).value();
    return n % R == s % R;
}

enum class CountMethod { brute, fft, bitset };

inline const char* to_string(CountMethod m)
{
    switch (m) {
    case CountMethod::brute: return "brute";
    case CountMethod::fft: return "fft";
    case CountMethod::bitset: return "bitset";
    }
    return "?";
}

inline CountMethod parse_count_method(const std::string& s)
{
    if (s == "brute") return CountMethod::brute;
    if (s == "fft") return CountMethod::fft;
    if (s == "bitset") return CountMethod::bitset;
    throw std::invalid_argument("unknown count method '" + s + "' (expected brute|fft|bitset)");
}

/// Thrown when an FFT count cannot be recovered exactly.
struct rounding_overflow_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CountLimits {
    u64 brute_max_s = 3;
    u64 brute_max_n = 100000;
    u64 fft_max_grid = 1000000000; ///< bound on s * hi
    u64 fft_max_alloc = u64{1} << 27; ///< transform length, memory guard
};

/// counts[i] is the number of ordered s-tuples for n = lo + i. Bitset results
/// hold 1 for representable n and 0 otherwise.
struct RepresentationCounts {
    CountMethod method = CountMethod::brute;
    unsigned k = 2;
    u64 s = 1, lo = 0, hi = 0;
    u64 generators = 0; ///< number of primes p in the subset with p^k <= hi
    std::vector<u64> counts;

    u64 at(u64 n) const { return counts.at(n - lo); }
};

namespace detail {

inline u64 inline_checked_power(u64 p, unsigned k, u64 bound)
{
    u128 x = 1;
    for (unsigned i = 0; i < k; ++i) {
        x *= p;
        if (x > bound) return bound + 1;
    }
    return static_cast<u64>(x);
}

/// Sorted p^k <= hi for p in the subset.
inline std::vector<u64> prime_powers_upto(const PrimeSubset& subset, unsigned k, u64 hi)
{
    if (k == 0) throw std::invalid_argument("k must be >= 1");
    const u64 root = iroot(hi, k);
    if (subset.limit() < root)
        throw std::invalid_argument("prime subset limit " + std::to_string(subset.limit()) + " is below " + std::to_string(root) +
                                    " = floor(hi^(1/k))");
    std::vector<u64> out;
    subset.for_each([&](u64 p) {
        const u64 x = inline_checked_power(p, k, hi);
        if (x <= hi) out.push_back(x);
    });
    return out;
}

inline void brute_recurse(const std::vector<u64>& powers, u64 depth, u64 partial, u64 lo, u64 hi, std::vector<u64>& counts)
{
    if (depth == 0) {
        if (partial >= lo) ++counts[partial - lo];
        return;
    }
    for (u64 x : powers) {
        if (partial + x > hi) break;
        brute_recurse(powers, depth - 1, partial + x, lo, hi, counts);
    }
}

/// Exact ordered counts on [0, top] via one transform of length >= top + 1.
inline std::vector<u64> fft_power_counts(const std::vector<u64>& powers, u64 s, u64 top, const CountLimits& lim)
{
    const u64 M = next_pow2(top + 1);
    if (M > lim.fft_max_alloc)
        throw resource_limit_error("fft counts: transform length " + std::to_string(M) + " exceeds cap " + std::to_string(lim.fft_max_alloc));
    std::vector<cplx> data(M, 0.0);
    for (u64 x : powers) data[x] += 1.0;
    dft_negative(data);
    for (auto& c : data) c = std::pow(c, static_cast<int>(s));
    dft_positive(data);
    constexpr double guard = 4503599627370496.0; // 2^52
    std::vector<u64> out(top + 1);
    for (u64 n = 0; n <= top; ++n) {
        const double v = data[n].real() / static_cast<double>(M);
        if (std::abs(v) >= guard)
            throw rounding_overflow_error("fft counts: magnitude at n = " + std::to_string(n) +
                                          " reaches 2^52; use the brute or bitset method");
        const double r = std::nearbyint(v);
        if (std::abs(v - r) > 0.25 || r < 0.0)
            throw rounding_overflow_error("fft counts: value at n = " + std::to_string(n) + " is not recoverable as an integer");
        out[n] = static_cast<u64>(r);
    }
    return out;
}

/// Truncated s-fold sumset of a sparse generator set, as a bitset on [0, hi].
inline Bitset sumset_reach(const std::vector<u64>& powers, u64 s, u64 hi, unsigned threads = 1)
{
    Bitset gen(hi + 1);
    for (u64 x : powers) gen.set(x);
    Bitset cur(hi + 1);
    cur.set(0);
    // Square-and-multiply on the sumset, with shifts always taken over the
    // sparser operand.
    auto add = [&](const Bitset& a, const Bitset& b) {
        const Bitset& sparse = a.count() <= b.count() ? a : b;
        const Bitset& dense = &sparse == &a ? b : a;
        std::vector<u64> shifts;
        sparse.for_each_set([&](std::size_t i) { shifts.push_back(i); });
        const std::size_t nw = dense.words().size();
        const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(64, nw / 1024));
        Bitset out(hi + 1);
        // Each chunk owns a disjoint word range of the output.
        parallel_chunks(nw, chunks, threads, [&](std::size_t, std::size_t wlo, std::size_t whi) {
            auto& ow = out.words();
            const auto& dw = dense.words();
            for (u64 sh : shifts) {
                const std::size_t ws = sh >> 6, bs = sh & 63;
                for (std::size_t i = std::max(wlo, ws); i < whi; ++i) {
                    u64 v = dw[i - ws] << bs;
                    if (bs != 0 && i > ws) v |= dw[i - ws - 1] >> (64 - bs);
                    ow[i] |= v;
                }
            }
        });
        if ((hi + 1) % 64 != 0) out.words().back() &= (u64{1} << ((hi + 1) % 64)) - 1;
        return out;
    };
    Bitset base = gen;
    for (u64 e = s; e > 0; e >>= 1) {
        if (e & 1) cur = add(cur, base);
        if (e > 1) base = add(base, base);
    }
    return cur;
}

} // namespace detail

/// Ordered representation counts for n in [lo, hi].
inline RepresentationCounts count_representations(const PrimeSubset& subset, unsigned k, u64 s, u64 lo, u64 hi, CountMethod method,
                                                  const CountLimits& lim = {}, unsigned threads = 1)
{
    if (s == 0) throw std::invalid_argument("count_representations: s must be >= 1");
    if (lo > hi) throw std::invalid_argument("count_representations: empty range");
    RepresentationCounts r{method, k, s, lo, hi, 0, {}};
    const auto powers = detail::prime_powers_upto(subset, k, hi);
    r.generators = powers.size();
    switch (method) {
    case CountMethod::brute: {
        if (s > lim.brute_max_s || hi > lim.brute_max_n)
            throw resource_limit_error("brute counts: need s <= " + std::to_string(lim.brute_max_s) + " and n <= " + std::to_string(lim.brute_max_n));
        r.counts.assign(hi - lo + 1, 0);
        detail::brute_recurse(powers, s, 0, lo, hi, r.counts);
        break;
    }
    case CountMethod::fft: {
        if (static_cast<u128>(s) * hi > lim.fft_max_grid)
            throw resource_limit_error("fft counts: s * hi exceeds " + std::to_string(lim.fft_max_grid));
        // cyclic length must exceed s * hi to avoid wraparound
        const auto all = detail::fft_power_counts(powers, s, s * hi, lim);
        r.counts.assign(all.begin() + static_cast<std::ptrdiff_t>(lo), all.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
        break;
    }
    case CountMethod::bitset: {
        const Bitset reach = detail::sumset_reach(powers, s, hi, threads);
        r.counts.assign(hi - lo + 1, 0);
        for (u64 n = lo; n <= hi; ++n) r.counts[n - lo] = reach.test(n) ? 1 : 0;
        break;
    }
    }
    return r;
}

/// Counts over the whole support [0, s * hi] of the s-fold convolution of
/// {p^k <= hi}; the entries sum to generators^s.
inline RepresentationCounts full_range_counts(const PrimeSubset& subset, unsigned k, u64 s, u64 hi, const CountLimits& lim = {})
{
    if (s == 0) throw std::invalid_argument("full_range_counts: s must be >= 1");
    if (static_cast<u128>(s) * hi > lim.fft_max_grid) throw resource_limit_error("fft counts: s * hi exceeds grid cap");
    const auto powers = detail::prime_powers_upto(subset, k, hi);
    RepresentationCounts r{CountMethod::fft, k, s, 0, s * hi, 0, {}};
    r.generators = powers.size();
    r.counts = detail::fft_power_counts(powers, s, s * hi, lim);
    return r;
}

// ---------------------------------------------------------------------------
// Coverage
// ---------------------------------------------------------------------------

struct CoverageReport {
    unsigned k = 2;
    u64 s = 1;
    std::string subset = "all";
    double subset_density = 1.0;
    u64 lo = 0, hi = 0;
    bool filtered = true;
    u64 modulus = 1;        ///< R_k when filtered, else 1
    u64 admissible = 0;
    u64 represented = 0;
    std::vector<u64> exceptions;
    Bitset reach;           ///< representable n on [0, hi]

    bool is_admissible(u64 n) const noexcept { return !filtered || n % modulus == s % modulus; }
};

/// Marks representable n <= hi by truncated sumset doubling, then scans the
/// admissible n in [lo, hi].
inline CoverageReport coverage_probe(const PrimeSubset& subset, unsigned k, u64 s, u64 lo, u64 hi, bool use_filter = true,
                                     unsigned threads = 1)
{
    if (s == 0) throw std::invalid_argument("coverage_probe: s must be >= 1");
    if (lo > hi) throw std::invalid_argument("coverage_probe: empty window");
    CoverageReport r;
    r.k = k;
    r.s = s;
    r.subset = subset.spec().describe();
    r.subset_density = subset.reported_density();
    r.lo = lo;
    r.hi = hi;
    r.filtered = use_filter;
    r.modulus = use_filter ? compute_Rk(k).value() : 1;
    r.reach = detail::sumset_reach(detail::prime_powers_upto(subset, k, hi), s, hi, threads);
    for (u64 n = lo; n <= hi; ++n) {
        if (!r.is_admissible(n)) continue;
        ++r.admissible;
        if (r.reach.test(n))
            ++r.represented;
        else
            r.exceptions.push_back(n);
    }
    return r;
}

inline void to_json(nlohmann::json& j, const CoverageReport& r)
{
    j = nlohmann::json{{"k", r.k},
                       {"s", r.s},
                       {"subset", r.subset},
                       {"subset_density", r.subset_density},
                       {"window", {r.lo, r.hi}},
                       {"filtered", r.filtered},
                       {"modulus", r.modulus},
                       {"admissible", r.admissible},
                       {"represented", r.represented},
                       {"exception_count", r.exceptions.size()},
                       {"exceptions", r.exceptions}};
}

/// n,admissible,represented for every n in the window.
inline void write_csv(std::ostream& os, const CoverageReport& r)
{
    os << "n,admissible,represented\n";
    for (u64 n = r.lo; n <= r.hi; ++n) os << n << "," << (r.is_admissible(n) ? 1 : 0) << "," << (r.reach.test(n) ? 1 : 0) << "\n";
}

inline void write_exceptions(std::ostream& os, const CoverageReport& r)
{
    for (u64 n : r.exceptions) os << n << "\n";
}

// ---------------------------------------------------------------------------
// Convolution gauge
// ---------------------------------------------------------------------------

struct ConvolutionProfile {
    u64 s = 0, N = 0, M = 0;
    double epsilon = 0.1;
    double kappa = 0.0;
    u64 window_lo = 0, window_hi = 0; ///< integers strictly inside the open window
    std::vector<double> values;       ///< (f_1 * ... * f_s)(n) / N^(s-1), n = window_lo..window_hi
    double min_gauge = 0.0;
    u64 argmin = 0;
    std::vector<double> means;
    bool sum_hypothesis = false;      ///< sum of means > s (1 + eps) / 2
    bool each_hypothesis = false;     ///< every mean > eps / 2
    std::optional<std::string> warning;

    bool hypotheses_hold() const noexcept { return sum_hypothesis && each_hypothesis; }
    double at(u64 n) const { return values.at(n - window_lo); }
};

/// Convolution of f_1..f_s on the window ((1 - kappa^2) s N / 2, (1 + kappa) s N / 2),
/// kappa = eps / 32, computed from the spectra of f_i / N.
inline ConvolutionProfile transference_gauge(const std::vector<WeightedSequence>& fs, double epsilon = 0.1, const CountLimits& lim = {})
{
    if (fs.size() < 2) throw std::invalid_argument("transference_gauge: need s >= 2 sequences");
    if (!(epsilon > 0.0)) throw std::invalid_argument("transference_gauge: epsilon must be positive");
    const u64 N = fs.front().size();
    if (N == 0) throw std::invalid_argument("transference_gauge: empty sequences");
    for (const auto& f : fs)
        if (f.size() != N) throw std::invalid_argument("transference_gauge: all sequences must have length N");
    const u64 s = fs.size();
    ConvolutionProfile p;
    p.s = s;
    p.N = N;
    p.epsilon = epsilon;
    p.kappa = epsilon / 32.0;
    p.M = next_pow2(s * N + 1);
    if (p.M > lim.fft_max_alloc) throw resource_limit_error("transference_gauge: transform length exceeds cap");

    const double Nd = static_cast<double>(N);
    double total = 0.0;
    p.each_hypothesis = true;
    for (const auto& f : fs) {
        const double m = f.mean();
        p.means.push_back(m);
        total += m;
        if (!(m > epsilon / 2.0)) p.each_hypothesis = false;
    }
    p.sum_hypothesis = total > static_cast<double>(s) * (1.0 + epsilon) / 2.0;

    std::vector<cplx> prod(p.M, 1.0);
    std::vector<cplx> buf(p.M);
    for (const auto& f : fs) {
        std::fill(buf.begin(), buf.end(), 0.0);
        for (u64 n = 1; n <= N; ++n) buf[n] = f(n) / Nd;
        dft_negative(buf);
        for (u64 j = 0; j < p.M; ++j) prod[j] *= buf[j];
    }
    dft_positive(prod);

    const double sN2 = static_cast<double>(s) * Nd / 2.0;
    const double a = (1.0 - p.kappa * p.kappa) * sN2, b = (1.0 + p.kappa) * sN2;
    p.window_lo = static_cast<u64>(std::floor(a)) + 1;
    p.window_hi = static_cast<u64>(std::ceil(b)) - 1;
    if (p.window_hi < p.window_lo) throw std::invalid_argument("transference_gauge: window contains no integers; increase N");

    double peak = 0.0;
    for (const auto& c : prod) peak = std::max(peak, std::abs(c.real()) / static_cast<double>(p.M));
    p.min_gauge = std::numeric_limits<double>::infinity();
    for (u64 n = p.window_lo; n <= p.window_hi; ++n) {
        // conv(n) = N^s g(n), reported as conv(n) / N^(s-1)
        const double g = prod[n].real() / static_cast<double>(p.M);
        const double v = std::max(0.0, g * Nd);
        p.values.push_back(v);
        if (v < p.min_gauge) {
            p.min_gauge = v;
            p.argmin = n;
        }
    }
    const double floor_v = p.min_gauge / Nd;
    if (peak > 0.0 && (floor_v <= 0.0 || std::log10(peak / floor_v) > 6.0))
        p.warning = "numeric degradation: window values sit more than 6 decimal digits below the transform peak";
    return p;
}

/// Number of (n_1..n_s) in [1, N]^s with sum n:
/// sum_j (-1)^j C(s, j) C(n - j N - 1, s - 1).
inline double indicator_convolution(u64 s, u64 N, u64 n)
{
    auto binom = [](double top, u64 r) {
        if (top < static_cast<double>(r)) return 0.0;
        double v = 1.0;
        for (u64 i = 0; i < r; ++i) v = v * (top - static_cast<double>(i)) / static_cast<double>(i + 1);
        return v;
    };
    double total = 0.0;
    for (u64 j = 0; j <= s; ++j) {
        const double top = static_cast<double>(n) - static_cast<double>(j * N) - 1.0;
        if (top < 0.0) break;
        const double term = binom(static_cast<double>(s), j) * binom(top, s - 1);
        total += (j % 2 == 0) ? term : -term;
    }
    return total;
}

inline void to_json(nlohmann::json& j, const ConvolutionProfile& p)
{
    j = nlohmann::json{{"s", p.s},
                       {"N", p.N},
                       {"M", p.M},
                       {"epsilon", p.epsilon},
                       {"kappa", p.kappa},
                       {"window", {p.window_lo, p.window_hi}},
                       {"min_gauge", p.min_gauge},
                       {"argmin", p.argmin},
                       {"means", p.means},
                       {"sum_hypothesis", p.sum_hypothesis},
                       {"each_hypothesis", p.each_hypothesis},
                       {"warning", p.warning ? nlohmann::json(*p.warning) : nlohmann::json(nullptr)}};
}

/// Mean-driven choice of b_1..b_s followed by the convolution gauge of the
/// corresponding f_{b_i}.
struct TransferRun {
    MeanReport means;
    std::map<u64, double> weights; ///< max(0, (g - eps/2) / (1 + eps)), kept below 1
    u64 clamped = 0;               ///< residues whose weight had to be pulled under 1
    u64 target = 0;                ///< n mod W
    LocalDecompositionResult local;
    std::optional<ConvolutionProfile> profile;
};

inline TransferRun run_transfer(const WTrickContext& ctx, u64 N, const PrimeSubset& subset, u64 s, u64 target, double epsilon = 0.1,
                                const CountLimits& lim = {})
{
    TransferRun run;
    run.means = mean_g(ctx, N, subset, epsilon);
    run.target = target % ctx.W.value();
    const double below_one = std::nextafter(1.0, 0.0);
    for (const auto& [b, g] : run.means.g) {
        double f = std::max(0.0, (g - epsilon / 2.0) / (1.0 + epsilon));
        if (f >= 1.0) {
            f = below_one;
            ++run.clamped;
        }
        run.weights[b] = f;
    }
    run.local = local_decompose(ctx.table, s, run.target, run.weights);
    if (!run.local.success) return run;
    std::vector<WeightedSequence> fs;
    for (u64 b : run.local.decomposition->parts) fs.push_back(build_f(ctx, b, N, subset));
    run.profile = transference_gauge(fs, epsilon, lim);
    return run;
}

inline void to_json(nlohmann::json& j, const TransferRun& r)
{
    nlohmann::json w = nlohmann::json::object();
    for (const auto& [b, v] : r.weights) w[std::to_string(b)] = v;
    j = nlohmann::json{{"means", r.means}, {"weights", w}, {"clamped", r.clamped}, {"target", r.target},
                       {"local_success", r.local.success}, {"local_optimum", r.local.optimum}, {"parts", nullptr}, {"profile", nullptr}};
    if (r.local.decomposition) j["parts"] = r.local.decomposition->parts;
    if (r.profile) j["profile"] = *r.profile;
}

// ---------------------------------------------------------------------------
// Thresholds
// ---------------------------------------------------------------------------

struct SummandThresholds {
    unsigned k = 2;
    unsigned omega = 0;
    u64 s_min = 0;  ///< smallest s with s > max(16 k w(k) + 4k + 3, k^2 + k)
    u64 s_min_local = 0;    ///< 8 k w(k) + 2k + 2
    u64 s_min_decompose = 0;    ///< 16 k w(k) + 4k + 4
    u64 delta_num = 0, delta_den = 1; ///< 1 - 1/(2k)

    double delta() const noexcept { return static_cast<double>(delta_num) / static_cast<double>(delta_den); }
};

inline SummandThresholds summand_thresholds(unsigned k)
{
    if (k < 2) throw std::invalid_argument("summand_thresholds: k must be >= 2");
    SummandThresholds t;
    t.k = k;
    t.omega = static_cast<unsigned>(omega(k));
    const u64 kk = k, w = t.omega;
    t.s_min = std::max(16 * kk * w + 4 * kk + 3, kk * kk + kk) + 1;
    t.s_min_local = 8 * kk * w + 2 * kk + 2;
    t.s_min_decompose = 16 * kk * w + 4 * kk + 4;
    t.delta_num = 2 * kk - 1;
    t.delta_den = 2 * kk;
    return t;
}

inline void to_json(nlohmann::json& j, const SummandThresholds& t)
{
    j = nlohmann::json{{"k", t.k},
                       {"omega", t.omega},
                       {"s_min", t.s_min},
                       {"s_min_local", t.s_min_local},
                       {"s_min_decompose", t.s_min_decompose},
                       {"delta_threshold", std::to_string(t.delta_num) + "/" + std::to_string(t.delta_den)}};
}

} // namespace wglab
