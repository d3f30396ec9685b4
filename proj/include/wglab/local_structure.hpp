#pragma once

/// @file local_structure.hpp
/// Congruence structure modulo W and prime powers: k-th power residue tables,
/// the multiplicities sigma(b), s-fold sumsets modulo q, Waring-pair checks and
/// the weighted local decomposition dynamic program.

#include "core_arith.hpp"
#include "parallel.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace wglab {

inline constexpr u64 kDefaultEnumerationCap = 10'000'000;

// ---------------------------------------------------------------------------
// Power residues
// ---------------------------------------------------------------------------

/// {t^k mod m : t in Z_m} with multiplicities, plus the unit subset Z(m).
class PowerResidueTable {
public:
    PowerResidueTable(FactoredModulus m, unsigned k, std::vector<std::uint32_t> mult)
        : modulus_(std::move(m)), k_(k), multiplicity_(std::move(mult))
    {
        const u64 mv = modulus_.value();
        for (u64 r = 0; r < mv; ++r) {
            if (multiplicity_[r] == 0) continue;
            all_.push_back(r);
            if (std::gcd(r, mv) == 1) units_.push_back(r);
        }
    }

    const FactoredModulus& modulus() const noexcept { return modulus_; }
    unsigned k() const noexcept { return k_; }

    /// #{z in [m] : z^k = r (mod m)}; 0 for non-residues.
    std::uint32_t multiplicity(u64 r) const noexcept { return multiplicity_[r % modulus_.value()]; }
    bool is_residue(u64 r) const noexcept { return multiplicity(r) != 0; }
    bool in_Z(u64 r) const noexcept { return is_residue(r) && std::gcd(r % modulus_.value(), modulus_.value()) == 1; }

    const std::vector<u64>& all_residues() const noexcept { return all_; }
    /// Z(m), sorted.
    const std::vector<u64>& unit_residues() const noexcept { return units_; }

private:
    FactoredModulus modulus_;
    unsigned k_;
    std::vector<std::uint32_t> multiplicity_;
    std::vector<u64> all_, units_;
};

inline PowerResidueTable power_residues(const FactoredModulus& m, unsigned k, u64 cap = kDefaultEnumerationCap)
{
    if (m.value() < 2) throw std::invalid_argument("power_residues: modulus must be >= 2");
    if (k == 0) throw std::invalid_argument("power_residues: k must be >= 1");
    if (m.value() > cap)
        throw resource_limit_error("power_residues: modulus " + std::to_string(m.value()) + " exceeds enumeration cap " +
                                   std::to_string(cap));
    const u64 mv = m.value();
    std::vector<std::uint32_t> mult(mv, 0);
    for (u64 t = 0; t < mv; ++t) ++mult[powmod(t, k, mv)];
    return PowerResidueTable(m, k, std::move(mult));
}

/// sigma(b) = #{z in [W] : z^k = b (mod W)}, cross-checked against phi(W)/|Z(W)|.
inline u64 sigma_b(const PowerResidueTable& table, u64 b)
{
    if (!table.in_Z(b)) throw std::invalid_argument("sigma_b: b = " + std::to_string(b) + " is not in Z(W)");
    const u64 counted = table.multiplicity(b);
    const u64 phi = table.modulus().phi();
    const u64 nz = table.unit_residues().size();
    if (phi % nz != 0 || phi / nz != counted)
        throw std::logic_error("sigma_b: enumerated multiplicity " + std::to_string(counted) + " differs from phi(W)/|Z(W)| = " +
                               std::to_string(phi) + "/" + std::to_string(nz));
    return counted;
}

inline u64 sigma_b(const FactoredModulus& W, unsigned k, u64 b) { return sigma_b(power_residues(W, k), b); }

inline u64 lift_closed_form(u64 p, unsigned k) { return checked_pow(p, 2 * k - 1 - tau(k, p)); }

/// Counts k-th power residues b mod p^(2k) with b = a (mod p), by enumeration,
/// and checks the count against p^(2k-1-tau(k,p)).
inline u64 lift_count(u64 p, unsigned k, u64 a, u64 cap = kDefaultEnumerationCap)
{
    if (p <= 2 || !is_prime_trial(p)) throw std::invalid_argument("lift_count: p must be an odd prime");
    const auto base = power_residues(FactoredModulus::from_factors({{p, 1}}), k);
    if (!base.in_Z(a)) throw std::invalid_argument("lift_count: a is not in Z(p)");
    const u64 pk = checked_pow(p, 2 * k);
    if (pk > cap) throw resource_limit_error("lift_count: p^(2k) = " + std::to_string(pk) + " exceeds enumeration cap");
    const auto table = power_residues(FactoredModulus::from_factors({{p, 2 * k}}), k, cap);
    u64 count = 0;
    for (u64 r : table.all_residues())
        if (r % p == a % p) ++count;
    const u64 expected = lift_closed_form(p, k);
    if (count != expected)
        throw std::logic_error("lift_count: enumeration " + std::to_string(count) + " != closed form " + std::to_string(expected));
    return count;
}

// ---------------------------------------------------------------------------
// Sumsets modulo q
// ---------------------------------------------------------------------------

namespace detail {

/// out = A + B (mod q) on q-bit cyclic bitsets. Iterates over the sparser operand.
inline void cyclic_sumset(const Bitset& A, const Bitset& B, std::size_t q, Bitset& out)
{
    const bool a_sparse = A.count() <= B.count();
    const Bitset& it = a_sparse ? A : B;
    const Bitset& other = a_sparse ? B : A;
    out.clear();
    it.for_each_set([&](std::size_t a) {
        if (a == 0) {
            out.or_shifted_left(other, 0);
            return;
        }
        out.or_shifted_left(other, a);      // elements x + a < q
        out.or_shifted_right(other, q - a); // elements x + a - q
    });
}

/// Linear sumset truncated to [0, size).
inline void linear_sumset(const Bitset& A, const Bitset& B, Bitset& out)
{
    const bool a_sparse = A.count() <= B.count();
    const Bitset& it = a_sparse ? A : B;
    const Bitset& other = a_sparse ? B : A;
    out.clear();
    it.for_each_set([&](std::size_t a) { out.or_shifted_left(other, a); });
}

/// s-fold sumset by binary doubling: O(log s) pairwise sumsets.
template <typename Combine>
Bitset sumset_power(const Bitset& base_set, u64 s, Combine&& combine)
{
    if (s == 0) throw std::invalid_argument("sumset_power: s must be >= 1");
    Bitset base = base_set, acc, tmp(base_set.size());
    bool have_acc = false;
    while (true) {
        if (s & 1U) {
            if (!have_acc) {
                acc = base;
                have_acc = true;
            } else {
                combine(acc, base, tmp);
                std::swap(acc, tmp);
            }
        }
        s >>= 1;
        if (s == 0) break;
        combine(base, base, tmp);
        std::swap(base, tmp);
    }
    return acc;
}

} // namespace detail

/// s-fold sumset sB modulo q.
inline Bitset cyclic_sumset_power(const Bitset& B, std::size_t q, u64 s)
{
    return detail::sumset_power(B, s, [q](const Bitset& x, const Bitset& y, Bitset& out) { detail::cyclic_sumset(x, y, q, out); });
}

/// s-fold sumset of a subset of [0, n) truncated to [0, n).
inline Bitset linear_sumset_power(const Bitset& B, u64 s)
{
    return detail::sumset_power(B, s, [](const Bitset& x, const Bitset& y, Bitset& out) { detail::linear_sumset(x, y, out); });
}

struct SumsetCoverage {
    bool covered = false;
    u64 target_modulus = 1;        ///< gcd(R_k, q)
    u64 target_residue = 0;        ///< s mod gcd(R_k, q)
    std::vector<u64> uncovered;    ///< targets missing from sB
    std::vector<u64> unexpected;   ///< members of sB outside the target class
};

namespace detail {

inline SumsetCoverage compare_with_targets(const Bitset& sum, u64 q, u64 target_mod, u64 s)
{
    SumsetCoverage out;
    out.target_modulus = target_mod;
    out.target_residue = s % target_mod;
    for (u64 a = 0; a < q; ++a) {
        const bool target = a % target_mod == out.target_residue;
        const bool hit = sum.test(a);
        if (target && !hit) out.uncovered.push_back(a);
        if (!target && hit) out.unexpected.push_back(a);
    }
    out.covered = out.uncovered.empty() && out.unexpected.empty();
    return out;
}

} // namespace detail

/// Checks sB == {a in Z_q : a = s (mod gcd(R_k, q))}.
inline SumsetCoverage sumset_cover_check(const PowerResidueTable& table, u64 s, std::span<const u64> B)
{
    const u64 q = table.modulus().value();
    if (B.empty()) throw std::invalid_argument("sumset_cover_check: B must be nonempty");
    Bitset bits(q);
    for (u64 b : B) {
        if (!table.in_Z(b)) throw std::invalid_argument("sumset_cover_check: " + std::to_string(b) + " is not in Z(q)");
        bits.set(b % q);
    }
    const u64 target_mod = compute_Rk(table.k()).gcd(table.modulus()).value();
    return detail::compare_with_targets(cyclic_sumset_power(bits, q, s), q, target_mod, s);
}

inline SumsetCoverage sumset_cover_check(const FactoredModulus& q, unsigned k, u64 s, std::span<const u64> B)
{
    return sumset_cover_check(power_residues(q, k), s, B);
}

// ---------------------------------------------------------------------------
// Waring pairs
// ---------------------------------------------------------------------------

enum class PairStrategy { exhaustive, sampled, structured };
enum class PairVerdict { pair, not_pair, no_violation_found };

inline const char* to_string(PairStrategy s)
{
    switch (s) {
    case PairStrategy::exhaustive: return "exhaustive";
    case PairStrategy::sampled: return "sampled";
    case PairStrategy::structured: return "structured";
    }
    return "?";
}

inline const char* to_string(PairVerdict v)
{
    switch (v) {
    case PairVerdict::pair: return "pair";
    case PairVerdict::not_pair: return "not-pair";
    case PairVerdict::no_violation_found: return "no-violation-found";
    }
    return "?";
}

struct PairWitness {
    std::vector<u64> subset; ///< sorted
    u64 uncovered;
};

struct WaringPairReport {
    FactoredModulus q;
    unsigned k = 0;
    u64 s = 0;
    PairStrategy strategy = PairStrategy::exhaustive;
    PairVerdict verdict = PairVerdict::no_violation_found;
    std::optional<PairWitness> witness;
    u64 trials = 0;
};

inline void to_json(nlohmann::json& j, const WaringPairReport& r)
{
    j = nlohmann::json{{"q", r.q.value()},
                       {"k", r.k},
                       {"s", r.s},
                       {"strategy", to_string(r.strategy)},
                       {"verdict", to_string(r.verdict)},
                       {"witness", nullptr},
                       {"trials", r.trials}};
    if (r.witness) j["witness"] = {{"B", r.witness->subset}, {"uncovered", r.witness->uncovered}};
}

struct WaringPairOptions {
    u64 exhaustive_budget = u64{1} << 25;
    u64 trials = 100'000;
    u64 seed = 0;
    unsigned threads = 0;
    std::size_t max_structured_subgroups = 256;
};

namespace detail {

inline u64 binomial_capped(u64 n, u64 r, u64 cap)
{
    if (r > n) return 0;
    r = std::min(r, n - r);
    u128 c = 1;
    for (u64 i = 1; i <= r; ++i) {
        c = c * (n - r + i) / i;
        if (c > cap) return cap + 1;
    }
    return static_cast<u64>(c);
}

/// Lexicographic rank -> combination of r indices out of n.
inline std::vector<u64> unrank_combination(u64 rank, u64 n, u64 r)
{
    std::vector<u64> out;
    u64 x = 0;
    for (u64 i = 0; i < r; ++i) {
        while (true) {
            const u64 c = binomial_capped(n - x - 1, r - i - 1, UINT64_MAX - 1);
            if (rank < c) break;
            rank -= c;
            ++x;
        }
        out.push_back(x++);
    }
    return out;
}

inline bool next_combination(std::vector<u64>& idx, u64 n)
{
    const std::size_t r = idx.size();
    std::size_t i = r;
    while (i > 0 && idx[i - 1] == n - r + i - 1) --i;
    if (i == 0) return false;
    ++idx[i - 1];
    for (std::size_t j = i; j < r; ++j) idx[j] = idx[j - 1] + 1;
    return true;
}

/// Reusable buffers for checking many subsets against one modulus.
class PairChecker {
public:
    PairChecker(const PowerResidueTable& table, u64 s)
        : q_(table.modulus().value()), s_(s), target_mod_(compute_Rk(table.k()).gcd(table.modulus()).value()), bits_(q_)
    {
    }

    /// Returns the first uncovered target residue, if sB misses one.
    std::optional<u64> first_gap(std::span<const u64> B)
    {
        bits_.clear();
        for (u64 b : B) bits_.set(b);
        const Bitset sum = cyclic_sumset_power(bits_, q_, s_);
        for (u64 a = s_ % target_mod_; a < q_; a += target_mod_)
            if (!sum.test(a)) return a;
        return std::nullopt;
    }

private:
    u64 q_, s_, target_mod_;
    Bitset bits_;
};

inline u64 splitmix64(u64 x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Adversarial majority subsets of Z(q): residue windows, unions of cosets of
/// subgroups, unions of power-residue classes, and classes modulo divisors of q.
inline std::vector<std::vector<u64>> structured_families(const PowerResidueTable& table, std::size_t max_subgroups)
{
    const auto& Z = table.unit_residues();
    const u64 q = table.modulus().value();
    const std::size_t n = Z.size(), m = n / 2 + 1;
    std::set<std::vector<u64>> out;

    auto emit = [&](std::vector<u64> B) {
        std::sort(B.begin(), B.end());
        B.erase(std::unique(B.begin(), B.end()), B.end());
        if (B.size() >= m) out.insert(std::move(B));
    };

    // Unions of classes taken in a rotating order, whole and trimmed to exactly m.
    auto from_partition = [&](const std::vector<std::vector<u64>>& classes) {
        if (classes.size() < 2) return;
        for (std::size_t start = 0; start < classes.size(); ++start) {
            std::vector<u64> B;
            for (std::size_t i = 0; i < classes.size() && B.size() < m; ++i) {
                const auto& c = classes[(start + i) % classes.size()];
                B.insert(B.end(), c.begin(), c.end());
            }
            emit(B);
            if (B.size() > m) {
                B.resize(m);
                emit(B);
            }
        }
    };

    // Residue windows in sorted order (cyclic).
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<u64> B;
        for (std::size_t j = 0; j < m; ++j) B.push_back(Z[(i + j) % n]);
        emit(B);
    }

    auto cosets_of = [&](const std::vector<u64>& H) {
        std::vector<std::vector<u64>> classes;
        std::set<u64> seen;
        for (u64 z : Z) {
            if (seen.count(z)) continue;
            std::vector<u64> c;
            for (u64 h : H) {
                const u64 x = mulmod(z, h, q);
                if (seen.insert(x).second) c.push_back(x);
            }
            classes.push_back(std::move(c));
        }
        return classes;
    };

    // Cyclic subgroups <g> of the unit group, intersected with Z(q).
    std::set<std::vector<u64>> subgroups;
    for (u64 g = 1; g < q && subgroups.size() < max_subgroups; ++g) {
        if (std::gcd(g, q) != 1) continue;
        std::vector<u64> H;
        u64 x = 1;
        do {
            if (table.in_Z(x)) H.push_back(x);
            x = mulmod(x, g, q);
        } while (x != 1);
        std::sort(H.begin(), H.end());
        if (H.size() > 1 && H.size() < n) subgroups.insert(std::move(H));
    }
    // Power-residue classes: cosets of {z^j : z in Z(q)}.
    for (u64 j = 2; j <= 12; ++j) {
        std::vector<u64> H;
        for (u64 z : Z) H.push_back(powmod(z, j, q));
        std::sort(H.begin(), H.end());
        H.erase(std::unique(H.begin(), H.end()), H.end());
        if (H.size() > 1 && H.size() < n) subgroups.insert(std::move(H));
    }
    for (const auto& H : subgroups) from_partition(cosets_of(H));

    // Classes modulo proper divisors of q.
    for (u64 d = 2; d < q; ++d) {
        if (q % d != 0) continue;
        std::map<u64, std::vector<u64>> by;
        for (u64 z : Z) by[z % d].push_back(z);
        std::vector<std::vector<u64>> classes;
        for (auto& [r, c] : by) classes.push_back(std::move(c));
        from_partition(classes);
    }
    return {out.begin(), out.end()};
}

} // namespace detail

/// Tests the Waring-pair property of (q, s). Only minimal-size subsets
/// (floor(|Z(q)|/2) + 1 elements) need checking: sumsets are monotone in B.
inline WaringPairReport waring_pair_check(const PowerResidueTable& table, u64 s, PairStrategy strategy,
                                          const WaringPairOptions& opt = {})
{
    const auto& Z = table.unit_residues();
    const u64 n = Z.size(), m = n / 2 + 1;
    WaringPairReport report;
    report.q = table.modulus();
    report.k = table.k();
    report.s = s;
    report.strategy = strategy;
    if (s == 0) throw std::invalid_argument("waring_pair_check: s must be >= 1");

    auto record = [&](std::vector<u64> B, u64 gap) {
        std::sort(B.begin(), B.end());
        report.witness = PairWitness{std::move(B), gap};
        report.verdict = PairVerdict::not_pair;
    };

    // Each chunk reports its first violation; the lowest chunk wins so the
    // result is independent of the number of worker threads.
    struct Hit {
        std::vector<u64> B;
        u64 gap;
    };

    switch (strategy) {
    case PairStrategy::exhaustive: {
        const u64 total = detail::binomial_capped(n, m, opt.exhaustive_budget);
        if (total > opt.exhaustive_budget)
            throw resource_limit_error("waring_pair_check: C(" + std::to_string(n) + "," + std::to_string(m) +
                                       ") exceeds exhaustive budget " + std::to_string(opt.exhaustive_budget));
        const std::size_t chunks = std::min<u64>(total, 64);
        std::vector<std::optional<Hit>> hits(chunks);
        std::vector<u64> checked(chunks, 0);
        parallel_chunks(total, chunks, opt.threads, [&](std::size_t c, std::size_t lo, std::size_t hi) {
            if (lo >= hi) return;
            detail::PairChecker checker(table, s);
            auto idx = detail::unrank_combination(lo, n, m);
            std::vector<u64> B(m);
            for (std::size_t r = lo; r < hi; ++r) {
                for (std::size_t i = 0; i < m; ++i) B[i] = Z[idx[i]];
                ++checked[c];
                if (auto gap = checker.first_gap(B)) {
                    hits[c] = Hit{B, *gap};
                    return;
                }
                detail::next_combination(idx, n);
            }
        });
        for (u64 c : checked) report.trials += c;
        report.verdict = PairVerdict::pair;
        for (auto& h : hits)
            if (h) {
                record(h->B, h->gap);
                break;
            }
        break;
    }
    case PairStrategy::sampled: {
        const std::size_t chunks = std::max<u64>(1, std::min<u64>(opt.trials, 64));
        std::vector<std::optional<Hit>> hits(chunks);
        std::vector<u64> checked(chunks, 0);
        parallel_chunks(opt.trials, chunks, opt.threads, [&](std::size_t c, std::size_t lo, std::size_t hi) {
            detail::PairChecker checker(table, s);
            std::vector<u64> pool(Z.begin(), Z.end());
            for (std::size_t t = lo; t < hi; ++t) {
                std::mt19937_64 rng(detail::splitmix64(opt.seed ^ detail::splitmix64(t)));
                for (u64 i = 0; i < m; ++i) {
                    const u64 j = i + rng() % (n - i);
                    std::swap(pool[i], pool[j]);
                }
                std::vector<u64> B(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
                ++checked[c];
                if (auto gap = checker.first_gap(B)) {
                    hits[c] = Hit{std::move(B), *gap};
                    return;
                }
            }
        });
        for (u64 c : checked) report.trials += c;
        for (auto& h : hits)
            if (h) {
                record(h->B, h->gap);
                break;
            }
        break;
    }
    case PairStrategy::structured: {
        const auto families = detail::structured_families(table, opt.max_structured_subgroups);
        detail::PairChecker checker(table, s);
        for (const auto& B : families) {
            ++report.trials;
            if (auto gap = checker.first_gap(B)) {
                record(B, *gap);
                break;
            }
        }
        break;
    }
    }
    return report;
}

inline WaringPairReport waring_pair_check(const FactoredModulus& q, unsigned k, u64 s, PairStrategy strategy,
                                          const WaringPairOptions& opt = {})
{
    return waring_pair_check(power_residues(q, k), s, strategy, opt);
}

/// Independently re-derives a not-pair witness: |B| > |Z(q)|/2, B within Z(q),
/// and the uncovered residue is a target that sB misses.
inline bool verify_witness(const PowerResidueTable& table, u64 s, const PairWitness& w)
{
    const std::size_t nz = table.unit_residues().size();
    if (2 * w.subset.size() <= nz) return false;
    for (u64 b : w.subset)
        if (!table.in_Z(b)) return false;
    const auto cov = sumset_cover_check(table, s, w.subset);
    if (w.uncovered % cov.target_modulus != cov.target_residue) return false;
    return std::find(cov.uncovered.begin(), cov.uncovered.end(), w.uncovered) != cov.uncovered.end();
}

// ---------------------------------------------------------------------------
// Local decomposition (weighted local problem)
// ---------------------------------------------------------------------------

struct LocalDecomposition {
    u64 target;
    std::vector<u64> parts;
    std::vector<double> values;
    double total;
};

struct LocalDecompositionResult {
    bool success = false;
    bool reachable = false;
    double optimum = -std::numeric_limits<double>::infinity();
    std::optional<LocalDecomposition> decomposition;
};

inline constexpr u64 kDefaultDpCap = 60'000'000;

/// Maximizes f(b_1)+...+f(b_s) over b_i in supp(f) with sum b_i = n (mod W).
/// Succeeds iff the optimum exceeds s/2. Ties go to the smallest residue.
inline LocalDecompositionResult local_decompose(const PowerResidueTable& table, u64 s, u64 n, const std::map<u64, double>& f,
                                                u64 cap = kDefaultDpCap)
{
    const u64 W = table.modulus().value();
    const auto& Z = table.unit_residues();
    if (s == 0) throw std::invalid_argument("local_decompose: s must be >= 1");
    if (f.size() != Z.size()) throw std::invalid_argument("local_decompose: f must be defined on all of Z(W)");
    for (const auto& [b, v] : f) {
        if (!table.in_Z(b)) throw std::invalid_argument("local_decompose: f defined outside Z(W) at " + std::to_string(b));
        if (!(v >= 0.0 && v < 1.0)) throw std::invalid_argument("local_decompose: f values must lie in [0,1)");
    }
    if (s * W > cap) throw resource_limit_error("local_decompose: s*W exceeds DP cap");

    std::vector<u64> support;
    std::vector<double> weight;
    for (const auto& [b, v] : f)
        if (v > 0.0) {
            support.push_back(b);
            weight.push_back(v);
        }

    constexpr double kNeg = -std::numeric_limits<double>::infinity();
    constexpr double kTieTol = 1e-12;
    constexpr std::uint32_t kNone = UINT32_MAX;
    std::vector<double> prev(W, kNeg), cur(W);
    std::vector<std::uint32_t> choice(s * W, kNone);
    prev[0] = 0.0;
    for (u64 r = 1; r <= s; ++r) {
        std::fill(cur.begin(), cur.end(), kNeg);
        auto* ch = &choice[(r - 1) * W];
        for (u64 x = 0; x < W; ++x) {
            double best = kNeg;
            std::uint32_t arg = kNone;
            for (std::size_t i = 0; i < support.size(); ++i) {
                const u64 from = (x + W - support[i]) % W;
                if (prev[from] == kNeg) continue;
                const double cand = prev[from] + weight[i];
                if (arg == kNone || cand > best + kTieTol) {
                    best = cand;
                    arg = static_cast<std::uint32_t>(i);
                }
            }
            cur[x] = best;
            ch[x] = arg;
        }
        std::swap(prev, cur);
    }

    LocalDecompositionResult out;
    const u64 target = n % W;
    if (prev[target] == kNeg) return out;
    out.reachable = true;
    out.optimum = prev[target];
    if (!(out.optimum > static_cast<double>(s) / 2.0)) return out;

    LocalDecomposition d{target, {}, {}, 0.0};
    u64 x = target;
    for (u64 r = s; r >= 1; --r) {
        const std::uint32_t i = choice[(r - 1) * W + x];
        d.parts.push_back(support[i]);
        d.values.push_back(weight[i]);
        x = (x + W - support[i]) % W;
    }
    for (double v : d.values) d.total += v;
    out.success = true;
    out.decomposition = std::move(d);
    return out;
}

/// Re-checks a decomposition without the DP: parts in Z(W) with f > 0, the
/// congruence, and that total matches the listed values.
inline bool verify_decomposition(const PowerResidueTable& table, const std::map<u64, double>& f, const LocalDecomposition& d)
{
    const u64 W = table.modulus().value();
    if (d.parts.size() != d.values.size()) return false;
    u64 sum = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < d.parts.size(); ++i) {
        const auto it = f.find(d.parts[i]);
        if (it == f.end() || !table.in_Z(d.parts[i])) return false;
        if (!(it->second > 0.0) || it->second != d.values[i]) return false;
        sum = (sum + d.parts[i]) % W;
        total += d.values[i];
    }
    return sum == d.target % W && std::abs(total - d.total) <= 1e-9 * std::max(1.0, std::abs(total));
}

} // namespace wglab
