#pragma once

/// @file majorant.hpp
/// W-tricked weighted prime-power sequences over [N]: the majorant nu_b, its
/// restrictions f_b to dense prime subsets, the k-th power measure mu with the
/// rescaling psi = phi / L, and the mean values g(b, N).

#include "core_arith.hpp"
#include "local_structure.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace wglab {

// ---------------------------------------------------------------------------
// Prime subsets
// ---------------------------------------------------------------------------

struct Interval {
    u64 lo, hi; ///< closed
};

/// Description of a subset of the primes. Generators are deterministic in
/// (kind, parameters, seed).
struct SubsetSpec {
    enum class Kind { all, none, bernoulli, residue_classes, prefix_drop, window_drop };

    Kind kind = Kind::all;
    double delta = 1.0;          ///< bernoulli keep-probability
    u64 seed = 0;                ///< bernoulli
    u64 modulus = 1;             ///< residue_classes
    std::vector<u64> allowed;    ///< residue_classes: kept residues mod `modulus`, sorted
    u64 x0 = 0;                  ///< prefix_drop: primes < x0 removed
    std::vector<Interval> windows;

    static SubsetSpec all() { return {}; }
    static SubsetSpec none()
    {
        SubsetSpec s;
        s.kind = Kind::none;
        return s;
    }
    static SubsetSpec bernoulli(double d, u64 seed)
    {
        if (!(d >= 0.0 && d <= 1.0)) throw std::invalid_argument("SubsetSpec: bernoulli density must lie in [0,1]");
        SubsetSpec s;
        s.kind = Kind::bernoulli;
        s.delta = d;
        s.seed = seed;
        return s;
    }
    static SubsetSpec residue_classes(u64 m, std::vector<u64> allowed)
    {
        if (m == 0) throw std::invalid_argument("SubsetSpec: modulus must be >= 1");
        for (auto& a : allowed) a %= m;
        std::sort(allowed.begin(), allowed.end());
        allowed.erase(std::unique(allowed.begin(), allowed.end()), allowed.end());
        SubsetSpec s;
        s.kind = Kind::residue_classes;
        s.modulus = m;
        s.allowed = std::move(allowed);
        return s;
    }
    /// Every residue class mod m except `dropped`.
    static SubsetSpec drop_class(u64 m, u64 dropped)
    {
        std::vector<u64> keep;
        for (u64 r = 0; r < m; ++r)
            if (r != dropped % m) keep.push_back(r);
        return residue_classes(m, std::move(keep));
    }
    static SubsetSpec prefix_drop(u64 x0)
    {
        SubsetSpec s;
        s.kind = Kind::prefix_drop;
        s.x0 = x0;
        return s;
    }
    static SubsetSpec window_drop(std::vector<Interval> windows)
    {
        SubsetSpec s;
        s.kind = Kind::window_drop;
        s.windows = std::move(windows);
        return s;
    }

    bool contains(u64 p) const noexcept
    {
        switch (kind) {
        case Kind::all: return true;
        case Kind::none: return false;
        case Kind::bernoulli: {
            const u64 h = detail::splitmix64(seed ^ detail::splitmix64(p));
            return static_cast<double>(h >> 11) * 0x1.0p-53 < delta;
        }
        case Kind::residue_classes: return std::binary_search(allowed.begin(), allowed.end(), p % modulus);
        case Kind::prefix_drop: return p >= x0;
        case Kind::window_drop:
            for (const auto& w : windows)
                if (p >= w.lo && p <= w.hi) return false;
            return true;
        }
        return false;
    }

    /// Relative density where it is known analytically (Dirichlet for residue classes).
    std::optional<double> intended_density() const
    {
        switch (kind) {
        case Kind::all:
        case Kind::prefix_drop: return 1.0;
        case Kind::none: return 0.0;
        case Kind::bernoulli: return delta;
        case Kind::residue_classes: {
            u64 units = 0, kept = 0;
            for (u64 r = 0; r < modulus; ++r) {
                if (std::gcd(r, modulus) != 1) continue;
                ++units;
                if (std::binary_search(allowed.begin(), allowed.end(), r)) ++kept;
            }
            return static_cast<double>(kept) / static_cast<double>(units);
        }
        case Kind::window_drop: return std::nullopt;
        }
        return std::nullopt;
    }

    /// Textual form accepted by parse(): all | none | bernoulli:D:SEED |
    /// classes:M:R1,R2,... | dropclass:M:R | prefix:X0 | windows:A-B,C-D
    std::string describe() const
    {
        std::ostringstream os;
        switch (kind) {
        case Kind::all: os << "all"; break;
        case Kind::none: os << "none"; break;
        case Kind::bernoulli: os << "bernoulli:" << delta << ":" << seed; break;
        case Kind::residue_classes:
            os << "classes:" << modulus << ":";
            for (std::size_t i = 0; i < allowed.size(); ++i) os << (i ? "," : "") << allowed[i];
            break;
        case Kind::prefix_drop: os << "prefix:" << x0; break;
        case Kind::window_drop:
            os << "windows:";
            for (std::size_t i = 0; i < windows.size(); ++i) os << (i ? "," : "") << windows[i].lo << "-" << windows[i].hi;
            break;
        }
        return os.str();
    }

    static SubsetSpec parse(const std::string& text)
    {
        auto fields = [](const std::string& s, char sep) {
            std::vector<std::string> out;
            std::string cur;
            std::istringstream is(s);
            while (std::getline(is, cur, sep)) out.push_back(cur);
            return out;
        };
        auto num = [&](const std::string& s) -> u64 {
            std::size_t pos = 0;
            const u64 v = std::stoull(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("subset: bad integer '" + s + "'");
            return v;
        };
        const auto f = fields(text, ':');
        if (f.empty()) throw std::invalid_argument("subset: empty specification");
        try {
            if (f[0] == "all" && f.size() == 1) return all();
            if (f[0] == "none" && f.size() == 1) return none();
            if (f[0] == "bernoulli" && f.size() == 3) return bernoulli(std::stod(f[1]), num(f[2]));
            if (f[0] == "dropclass" && f.size() == 3) return drop_class(num(f[1]), num(f[2]));
            if (f[0] == "classes" && f.size() == 3) {
                std::vector<u64> a;
                for (const auto& r : fields(f[2], ',')) a.push_back(num(r));
                return residue_classes(num(f[1]), std::move(a));
            }
            if (f[0] == "prefix" && f.size() == 2) return prefix_drop(num(f[1]));
            if (f[0] == "windows" && f.size() == 2) {
                std::vector<Interval> w;
                for (const auto& iv : fields(f[1], ',')) {
                    const auto ends = fields(iv, '-');
                    if (ends.size() != 2) throw std::invalid_argument("subset: bad window '" + iv + "'");
                    w.push_back({num(ends[0]), num(ends[1])});
                }
                return window_drop(std::move(w));
            }
        } catch (const std::logic_error& e) {
            throw std::invalid_argument(std::string("subset '") + text + "': " + e.what());
        }
        throw std::invalid_argument("subset: unrecognized specification '" + text + "'");
    }
};

/// A concrete subset of the primes up to `limit`, with its measured density.
class PrimeSubset {
public:
    PrimeSubset(SubsetSpec spec, std::shared_ptr<const PrimeSet> primes, Bitset members)
        : spec_(std::move(spec)), primes_(std::move(primes)), members_(std::move(members))
    {
        std::size_t kept = 0, total = 0;
        min_prefix_ = 1.0;
        bool any = false;
        primes_->for_each([&](u64 p) {
            ++total;
            if (members_.test(p)) ++kept;
            if (p >= 100) {
                const double r = static_cast<double>(kept) / static_cast<double>(total);
                min_prefix_ = any ? std::min(min_prefix_, r) : r;
                any = true;
            }
        });
        density_ = total ? static_cast<double>(kept) / static_cast<double>(total) : 0.0;
        if (!any) min_prefix_ = density_;
        size_ = kept;
    }

    const SubsetSpec& spec() const noexcept { return spec_; }
    u64 limit() const noexcept { return primes_->limit(); }
    const PrimeSet& primes() const noexcept { return *primes_; }
    std::shared_ptr<const PrimeSet> shared_primes() const noexcept { return primes_; }
    bool contains(u64 p) const noexcept { return p <= limit() && members_.test(p); }
    std::size_t size() const noexcept { return size_; }
    const Bitset& members() const noexcept { return members_; }

    /// |A cap [limit]| / |P cap [limit]|.
    double measured_density() const noexcept { return density_; }
    /// Minimum of the prefix ratio over prime prefixes x >= 100.
    double min_prefix_density() const noexcept { return min_prefix_; }
    /// The observable proxy used for liminf-style generators.
    double reported_density() const noexcept { return spec_.kind == SubsetSpec::Kind::window_drop ? min_prefix_ : density_; }

    template <typename F>
    void for_each(F&& f) const
    {
        members_.for_each_set([&](std::size_t p) { f(static_cast<u64>(p)); });
    }

private:
    SubsetSpec spec_;
    std::shared_ptr<const PrimeSet> primes_;
    Bitset members_;
    double density_ = 0.0, min_prefix_ = 0.0;
    std::size_t size_ = 0;
};

inline PrimeSubset gen_subset(const SubsetSpec& spec, std::shared_ptr<const PrimeSet> primes)
{
    Bitset members(primes->limit() + 1);
    primes->for_each([&](u64 p) {
        if (spec.contains(p)) members.set(p);
    });
    return PrimeSubset(spec, std::move(primes), std::move(members));
}

inline PrimeSubset gen_subset(const SubsetSpec& spec, u64 limit)
{
    if (limit < 100) throw std::invalid_argument("gen_subset: limit must be >= 100");
    return gen_subset(spec, std::make_shared<const PrimeSet>(sieve_primes(limit)));
}

// ---------------------------------------------------------------------------
// Weighted sequences
// ---------------------------------------------------------------------------

enum class SequenceKind : u64 { nu = 0, f = 1, bold_f = 2, mu = 3, psi = 4, other = 5 };

inline const char* to_string(SequenceKind k)
{
    switch (k) {
    case SequenceKind::nu: return "nu";
    case SequenceKind::f: return "f";
    case SequenceKind::bold_f: return "bold-f";
    case SequenceKind::mu: return "mu";
    case SequenceKind::psi: return "psi";
    case SequenceKind::other: return "other";
    }
    return "?";
}

struct SequenceMeta {
    SequenceKind kind = SequenceKind::other;
    u64 W = 1, b = 0, k = 1, N = 0;
    std::string subset = "all";
    u64 Y = 0;      ///< floor((WN+b)^(1/k))
    double L = 0.0; ///< log(WN+W)/k
};

/// Nonnegative weights on n = 1..N.
class WeightedSequence {
public:
    WeightedSequence() = default;
    WeightedSequence(SequenceMeta meta, std::vector<double> values) : meta_(std::move(meta)), values_(std::move(values))
    {
        meta_.N = values_.size();
    }

    /// 1_[N].
    static WeightedSequence indicator(u64 N) { return {SequenceMeta{}, std::vector<double>(N, 1.0)}; }

    /// mass at a single n.
    static WeightedSequence spike(u64 N, u64 n, double mass)
    {
        std::vector<double> v(N, 0.0);
        v.at(n - 1) = mass;
        return {SequenceMeta{}, std::move(v)};
    }

    const SequenceMeta& meta() const noexcept { return meta_; }
    SequenceMeta& meta() noexcept { return meta_; }
    u64 size() const noexcept { return values_.size(); }
    /// 1-based.
    double operator()(u64 n) const { return values_.at(n - 1); }
    const std::vector<double>& values() const noexcept { return values_; }
    std::vector<double>& values() noexcept { return values_; }

    double sum() const noexcept
    {
        double s = 0.0;
        for (double v : values_) s += v;
        return s;
    }
    double mean() const noexcept { return values_.empty() ? 0.0 : sum() / static_cast<double>(values_.size()); }

private:
    SequenceMeta meta_;
    std::vector<double> values_;
};

/// Per-modulus data reused across builders: Z(W) table, phi(W), sigma.
struct WTrickContext {
    FactoredModulus W;
    unsigned k;
    PowerResidueTable table;
    u64 phi;

    WTrickContext(const FactoredModulus& w_mod, unsigned k_, u64 cap = kDefaultEnumerationCap)
        : W(w_mod), k(k_), table(power_residues(w_mod, k_, cap)), phi(w_mod.phi())
    {
    }

    u64 sigma(u64 b) const { return sigma_b(table, b); }

    /// phi(W) / (W sigma(b)).
    double weight_scale(u64 b) const
    {
        return static_cast<double>(phi) / (static_cast<double>(W.value()) * static_cast<double>(sigma(b)));
    }

    /// floor((WN + b)^(1/k)).
    u64 Y(u64 N, u64 b) const { return iroot(W.value() * N + b, k); }

    double L(u64 N) const { return std::log(static_cast<double>(W.value() * N + W.value())) / static_cast<double>(k); }

    void require_unit(u64 b, const char* who) const
    {
        if (b >= W.value() || !table.in_Z(b)) throw std::invalid_argument(std::string(who) + ": b = " + std::to_string(b) + " is not in Z(W)");
    }
};

namespace detail {

/// k p^(k-1) log p.
inline double prime_power_weight(u64 p, unsigned k)
{
    return static_cast<double>(k) * std::pow(static_cast<double>(p), static_cast<double>(k - 1)) * std::log(static_cast<double>(p));
}

template <typename Keep>
WeightedSequence build_prime_weighted(const WTrickContext& ctx, u64 b, u64 N, const PrimeSet& primes, SequenceKind kind,
                                      std::string subset_name, Keep&& keep)
{
    const u64 W = ctx.W.value();
    const u64 Y = ctx.Y(N, b);
    if (primes.limit() < Y) throw std::invalid_argument("prime table limit " + std::to_string(primes.limit()) + " below Y = " + std::to_string(Y));
    const double scale = ctx.weight_scale(b);
    std::vector<double> v(N, 0.0);
    primes.for_each([&](u64 p) {
        if (p > Y || !keep(p)) return;
        const u64 pk = checked_pow(p, ctx.k);
        if (pk % W != b || pk < W + b) return;
        const u64 n = (pk - b) / W;
        v[n - 1] = scale * prime_power_weight(p, ctx.k);
    });
    SequenceMeta meta{kind, W, b, ctx.k, N, std::move(subset_name), Y, ctx.L(N)};
    return {std::move(meta), std::move(v)};
}

} // namespace detail

/// nu_b(n) = phi(W)/(W sigma(b)) k p^(k-1) log p when Wn + b = p^k, p prime.
inline WeightedSequence build_nu(const WTrickContext& ctx, u64 b, u64 N, const PrimeSet& primes)
{
    ctx.require_unit(b, "build_nu");
    return detail::build_prime_weighted(ctx, b, N, primes, SequenceKind::nu, "all", [](u64) { return true; });
}

inline WeightedSequence build_nu(const WTrickContext& ctx, u64 b, u64 N)
{
    ctx.require_unit(b, "build_nu");
    return build_nu(ctx, b, N, sieve_primes(std::max<u64>(2, ctx.Y(N, b))));
}

/// Same weights as nu_b restricted to primes in the subset (f_b or bold f_b).
inline WeightedSequence build_f(const WTrickContext& ctx, u64 b, u64 N, const PrimeSubset& subset,
                                SequenceKind kind = SequenceKind::f)
{
    ctx.require_unit(b, "build_f");
    return detail::build_prime_weighted(ctx, b, N, subset.primes(), kind, subset.spec().describe(),
                                        [&](u64 p) { return subset.contains(p); });
}

/// mu together with the psi = phi / L rescaling.
struct MuBuild {
    WeightedSequence mu;
    double L;

    /// psi = phi / L, checked against psi <= mu pointwise.
    WeightedSequence psi_of(const WeightedSequence& phi) const
    {
        if (phi.size() != mu.size()) throw std::invalid_argument("psi_of: length mismatch");
        std::vector<double> v(phi.size());
        for (u64 n = 1; n <= phi.size(); ++n) {
            v[n - 1] = phi(n) / L;
            if (v[n - 1] > mu(n) * (1.0 + 1e-12))
                throw std::logic_error("psi_of: psi(" + std::to_string(n) + ") = " + std::to_string(v[n - 1]) + " exceeds mu = " +
                                       std::to_string(mu(n)));
        }
        SequenceMeta meta = phi.meta();
        meta.kind = SequenceKind::psi;
        meta.L = L;
        return {std::move(meta), std::move(v)};
    }
};

/// mu(n) = k x^(k-1) / sigma(b) when Wn + b = x^k for any positive integer x.
inline MuBuild build_mu(const WTrickContext& ctx, u64 b, u64 N)
{
    ctx.require_unit(b, "build_mu");
    const u64 W = ctx.W.value();
    const u64 Y = ctx.Y(N, b);
    const double inv_sigma = 1.0 / static_cast<double>(ctx.sigma(b));
    std::vector<double> v(N, 0.0);
    for (u64 x = 1; x <= Y; ++x) {
        const u64 xk = checked_pow(x, ctx.k);
        if (xk % W != b || xk < W + b) continue;
        v[(xk - b) / W - 1] = inv_sigma * static_cast<double>(ctx.k) * std::pow(static_cast<double>(x), static_cast<double>(ctx.k - 1));
    }
    SequenceMeta meta{SequenceKind::mu, W, b, ctx.k, N, "all", Y, ctx.L(N)};
    return {WeightedSequence(std::move(meta), std::move(v)), ctx.L(N)};
}

// ---------------------------------------------------------------------------
// Mean values g(b, N)
// ---------------------------------------------------------------------------

struct MeanReport {
    u64 W = 1, k = 1, N = 0;
    std::string subset;
    double epsilon = 0.1;
    std::map<u64, double> g;        ///< per b in Z(W)
    double aggregate = 0.0;         ///< E_{b in Z(W)} g(b, N)
    double delta_used = 0.0;        ///< intended density if known, else the measured proxy
    double measured_density = 0.0;
    double density_margin = 0.0;    ///< k delta - (k - 1)
    double mean_floor = 0.0;     ///< (1 - epsilon) delta
};

inline void to_json(nlohmann::json& j, const MeanReport& r)
{
    nlohmann::json g = nlohmann::json::object();
    for (const auto& [b, v] : r.g) g[std::to_string(b)] = v;
    j = nlohmann::json{{"W", r.W},
                       {"k", r.k},
                       {"N", r.N},
                       {"subset", r.subset},
                       {"epsilon", r.epsilon},
                       {"g", g},
                       {"aggregate", r.aggregate},
                       {"delta_used", r.delta_used},
                       {"measured_density", r.measured_density},
                       {"density_margin", r.density_margin},
                       {"mean_floor", r.mean_floor}};
}

/// g(b, N) = E_{n in [N]} f_b(n) for every b in Z(W), in one pass over the primes.
inline MeanReport mean_g(const WTrickContext& ctx, u64 N, const PrimeSubset& subset, double epsilon = 0.1)
{
    const u64 W = ctx.W.value();
    const u64 Ymax = iroot(W * N + W, ctx.k);
    if (subset.limit() < Ymax) throw std::invalid_argument("mean_g: subset generated below Y = " + std::to_string(Ymax));
    MeanReport r;
    r.W = W;
    r.k = ctx.k;
    r.N = N;
    r.subset = subset.spec().describe();
    r.epsilon = epsilon;
    for (u64 b : ctx.table.unit_residues()) r.g[b] = 0.0;
    subset.for_each([&](u64 p) {
        if (p > Ymax) return;
        const u64 pk = checked_pow(p, ctx.k);
        const u64 b = pk % W;
        if (pk < W + b) return;
        const u64 n = (pk - b) / W;
        if (n > N) return;
        auto it = r.g.find(b);
        if (it == r.g.end()) return; // p divides W
        it->second += detail::prime_power_weight(p, ctx.k);
    });
    for (auto& [b, v] : r.g) {
        v *= ctx.weight_scale(b) / static_cast<double>(N);
        r.aggregate += v;
    }
    r.aggregate /= static_cast<double>(r.g.size());
    r.measured_density = subset.reported_density();
    r.delta_used = subset.spec().intended_density().value_or(r.measured_density);
    r.density_margin = static_cast<double>(ctx.k) * r.delta_used - static_cast<double>(ctx.k - 1);
    r.mean_floor = (1.0 - epsilon) * r.delta_used;
    return r;
}

/// sum over p in A, (p, W) = 1, with (p^k - b)/W in [1, N], of k p^(k-1) log p.
/// Computed straight from the primes, independently of mean_g.
inline double prime_power_mass(const WTrickContext& ctx, u64 N, const PrimeSubset& subset)
{
    const u64 W = ctx.W.value();
    double total = 0.0;
    subset.for_each([&](u64 p) {
        if (std::gcd(p, W) != 1) return;
        const u64 pk = checked_pow(p, ctx.k);
        const u64 n = (pk - pk % W) / W;
        if (n >= 1 && n <= N) total += detail::prime_power_weight(p, ctx.k);
    });
    return total;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace detail {

inline void write_u64(std::ostream& os, u64 v)
{
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline u64 read_u64(std::istream& is)
{
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("binary read: truncated input");
    u64 v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<u64>(b[i]) << (8 * i);
    return v;
}

inline void write_f64(std::ostream& os, double d)
{
    u64 bits;
    std::memcpy(&bits, &d, sizeof bits);
    write_u64(os, bits);
}

inline double read_f64(std::istream& is)
{
    const u64 bits = read_u64(is);
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
}

/// %.12g, the CSV float format.
inline std::string fmt12(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

} // namespace detail

/// Little-endian: kind, W, b, k, N as u64, then N float64 values.
inline void write_binary(std::ostream& os, const WeightedSequence& s)
{
    const auto& m = s.meta();
    for (u64 v : {static_cast<u64>(m.kind), m.W, m.b, m.k, s.size()}) detail::write_u64(os, v);
    for (double v : s.values()) detail::write_f64(os, v);
}

inline WeightedSequence read_binary_sequence(std::istream& is)
{
    SequenceMeta m;
    m.kind = static_cast<SequenceKind>(detail::read_u64(is));
    m.W = detail::read_u64(is);
    m.b = detail::read_u64(is);
    m.k = detail::read_u64(is);
    const u64 N = detail::read_u64(is);
    std::vector<double> v(N);
    for (auto& x : v) x = detail::read_f64(is);
    return {std::move(m), std::move(v)};
}

/// n,value rows for the nonzero entries.
inline void write_csv(std::ostream& os, const WeightedSequence& s)
{
    os << "n,value\n";
    for (u64 n = 1; n <= s.size(); ++n)
        if (s(n) != 0.0) os << n << "," << detail::fmt12(s(n)) << "\n";
}

} // namespace wglab
