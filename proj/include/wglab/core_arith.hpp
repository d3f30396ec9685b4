#pragma once

/// @file core_arith.hpp
/// Exact integer arithmetic shared by the whole library: prime sieving,
/// factored moduli, the Waring-Goldbach congruence modulus R_k, the W-trick
/// modulus W, and best rational approximation by continued fractions.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace wglab {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

/// Thrown when a request exceeds a configured resource cap (memory, enumeration budget).
class resource_limit_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Small modular helpers
// ---------------------------------------------------------------------------

constexpr u64 mulmod(u64 a, u64 b, u64 m) noexcept
{
    return static_cast<u64>(static_cast<u128>(a) * b % m);
}

constexpr u64 powmod(u64 base, u64 exp, u64 m) noexcept
{
    if (m == 1) return 0;
    u64 result = 1;
    base %= m;
    while (exp > 0) {
        if (exp & 1U) result = mulmod(result, base, m);
        base = mulmod(base, base, m);
        exp >>= 1U;
    }
    return result;
}

/// x^e, throwing std::overflow_error if the result does not fit in 64 bits.
inline u64 checked_pow(u64 x, unsigned e)
{
    u128 r = 1;
    for (unsigned i = 0; i < e; ++i) {
        r *= x;
        if (r > static_cast<u128>(UINT64_MAX)) throw std::overflow_error("checked_pow: 64-bit overflow");
    }
    return static_cast<u64>(r);
}

/// Largest r with r^k <= x.
inline u64 iroot(u64 x, unsigned k)
{
    if (k == 0) throw std::invalid_argument("iroot: k must be >= 1");
    if (k == 1 || x < 2) return x;
    auto fits = [&](u64 r) {
        u128 p = 1;
        for (unsigned i = 0; i < k; ++i) {
            p *= r;
            if (p > x) return false;
        }
        return true;
    };
    u64 r = static_cast<u64>(std::pow(static_cast<long double>(x), 1.0L / k));
    while (r > 0 && !fits(r)) --r;
    while (fits(r + 1)) ++r;
    return r;
}

/// Extended Euclid on signed values: returns (g, x, y) with a*x + b*y = g.
struct Bezout {
    i64 g, x, y;
};

constexpr Bezout extended_gcd(i64 a, i64 b) noexcept
{
    i64 old_r = a, r = b, old_s = 1, s = 0, old_t = 0, t = 1;
    while (r != 0) {
        const i64 q = old_r / r;
        std::tie(old_r, r) = std::pair{r, old_r - q * r};
        std::tie(old_s, s) = std::pair{s, old_s - q * s};
        std::tie(old_t, t) = std::pair{t, old_t - q * t};
    }
    return {old_r, old_s, old_t};
}

/// Inverse of a modulo m (m >= 1, gcd(a, m) = 1); 0 when m == 1.
inline u64 invmod(u64 a, u64 m)
{
    if (m == 1) return 0;
    const auto [g, x, y] = extended_gcd(static_cast<i64>(a % m), static_cast<i64>(m));
    (void)y;
    if (g != 1) throw std::invalid_argument("invmod: argument not invertible");
    const i64 mm = static_cast<i64>(m);
    return static_cast<u64>(((x % mm) + mm) % mm);
}

inline bool is_prime_trial(u64 n) noexcept
{
    if (n < 2) return false;
    if (n % 2 == 0) return n == 2;
    for (u64 d = 3; d * d <= n; d += 2)
        if (n % d == 0) return false;
    return true;
}

// ---------------------------------------------------------------------------
// FactoredModulus
// ---------------------------------------------------------------------------

struct PrimePower {
    u64 prime;
    unsigned exponent;
    friend bool operator==(const PrimePower&, const PrimePower&) = default;
};

/// A positive integer stored together with its complete factorization, so
/// that phi, gcds and smooth/rough splits never need refactoring.
class FactoredModulus {
public:
    FactoredModulus() = default;

    static FactoredModulus from_factors(std::vector<PrimePower> factors)
    {
        std::sort(factors.begin(), factors.end(), [](auto& l, auto& r) { return l.prime < r.prime; });
        FactoredModulus m;
        u128 value = 1;
        for (std::size_t i = 0; i < factors.size(); ++i) {
            const auto& f = factors[i];
            if (f.exponent == 0) continue;
            if (!is_prime_trial(f.prime)) throw std::invalid_argument("FactoredModulus: non-prime factor " + std::to_string(f.prime));
            if (!m.factors_.empty() && m.factors_.back().prime == f.prime)
                throw std::invalid_argument("FactoredModulus: repeated prime " + std::to_string(f.prime));
            for (unsigned e = 0; e < f.exponent; ++e) {
                value *= f.prime;
                if (value > static_cast<u128>(UINT64_MAX)) throw std::overflow_error("FactoredModulus: value exceeds 64 bits");
            }
            m.factors_.push_back(f);
        }
        m.value_ = static_cast<u64>(value);
        return m;
    }

    /// Trial-division factorization; intended for moduli up to ~10^12.
    static FactoredModulus factor(u64 n)
    {
        if (n == 0) throw std::invalid_argument("FactoredModulus: zero has no factorization");
        std::vector<PrimePower> fs;
        for (u64 p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
            unsigned e = 0;
            while (n % p == 0) {
                n /= p;
                ++e;
            }
            if (e) fs.push_back({p, e});
        }
        if (n > 1) fs.push_back({n, 1});
        return from_factors(std::move(fs));
    }

    u64 value() const noexcept { return value_; }
    const std::vector<PrimePower>& factors() const noexcept { return factors_; }
    std::size_t omega() const noexcept { return factors_.size(); }

    u64 phi() const noexcept
    {
        u64 r = 1;
        for (const auto& f : factors_) {
            r *= f.prime - 1;
            for (unsigned e = 1; e < f.exponent; ++e) r *= f.prime;
        }
        return r;
    }

    unsigned exponent_of(u64 p) const noexcept
    {
        for (const auto& f : factors_)
            if (f.prime == p) return f.exponent;
        return 0;
    }

    bool divides(u64 n) const noexcept { return n % value_ == 0; }

    FactoredModulus gcd(const FactoredModulus& other) const
    {
        std::vector<PrimePower> fs;
        for (const auto& f : factors_)
            if (const unsigned e = other.exponent_of(f.prime); e) fs.push_back({f.prime, std::min(e, f.exponent)});
        return from_factors(std::move(fs));
    }

    FactoredModulus gcd(u64 n) const
    {
        std::vector<PrimePower> fs;
        for (const auto& f : factors_) {
            unsigned e = 0;
            while (e < f.exponent && n % f.prime == 0) {
                n /= f.prime;
                ++e;
            }
            if (e) fs.push_back({f.prime, e});
        }
        return from_factors(std::move(fs));
    }

    FactoredModulus operator*(const FactoredModulus& other) const
    {
        std::vector<PrimePower> fs = factors_;
        for (const auto& g : other.factors_) {
            auto it = std::find_if(fs.begin(), fs.end(), [&](auto& f) { return f.prime == g.prime; });
            if (it != fs.end())
                it->exponent += g.exponent;
            else
                fs.push_back(g);
        }
        return from_factors(std::move(fs));
    }

    /// Splits into (u, v) where u collects the primes accepted by `smooth`
    /// and v the rest; u * v == *this and gcd(u, v) == 1.
    template <typename Pred>
    std::pair<FactoredModulus, FactoredModulus> split(Pred smooth) const
    {
        std::vector<PrimePower> us, vs;
        for (const auto& f : factors_) (smooth(f.prime) ? us : vs).push_back(f);
        return {from_factors(std::move(us)), from_factors(std::move(vs))};
    }

    std::string to_string() const
    {
        if (factors_.empty()) return "1";
        std::string s;
        for (const auto& f : factors_) {
            if (!s.empty()) s += "*";
            s += std::to_string(f.prime);
            if (f.exponent > 1) s += "^" + std::to_string(f.exponent);
        }
        return s;
    }

    friend bool operator==(const FactoredModulus& l, const FactoredModulus& r) { return l.factors_ == r.factors_; }

private:
    u64 value_ = 1;
    std::vector<PrimePower> factors_;
};

inline std::size_t omega(u64 n) { return FactoredModulus::factor(n).omega(); }

// ---------------------------------------------------------------------------
// Waring-Goldbach constants
// ---------------------------------------------------------------------------

/// Exponent of p in k, i.e. the e with p^e | k and p^(e+1) not dividing k.
constexpr unsigned tau(u64 k, u64 p) noexcept
{
    unsigned e = 0;
    while (k != 0 && k % p == 0) {
        k /= p;
        ++e;
    }
    return e;
}

constexpr unsigned gamma(u64 k, u64 p) noexcept
{
    const unsigned t = tau(k, p);
    return (p == 2 && t > 0) ? t + 2 : t + 1;
}

/// R_k = prod over primes p with (p-1) | k of p^gamma(k,p).
/// (p-1) | k forces p <= k+1, so scanning primes up to k+1 is complete.
inline FactoredModulus compute_Rk(u64 k)
{
    if (k == 0) throw std::invalid_argument("compute_Rk: k must be >= 1");
    std::vector<PrimePower> fs;
    for (u64 p = 2; p <= k + 1; ++p)
        if (is_prime_trial(p) && k % (p - 1) == 0) fs.push_back({p, gamma(k, p)});
    return FactoredModulus::from_factors(std::move(fs));
}

/// W = prod over primes p <= w of p^(2k).
inline FactoredModulus compute_W(u64 w, u64 k)
{
    if (w < 2) throw std::invalid_argument("compute_W: w must be >= 2");
    if (k == 0) throw std::invalid_argument("compute_W: k must be >= 1");
    std::vector<PrimePower> fs;
    for (u64 p = 2; p <= w; ++p)
        if (is_prime_trial(p)) fs.push_back({p, static_cast<unsigned>(2 * k)});
    return FactoredModulus::from_factors(std::move(fs));
}

// ---------------------------------------------------------------------------
// Dynamic bitset
// ---------------------------------------------------------------------------

/// Fixed-length bit array with the word-level shifted-OR primitives needed
/// for sumset computations.
class Bitset {
public:
    Bitset() = default;
    explicit Bitset(std::size_t nbits) : nbits_(nbits), words_((nbits + 63) / 64, 0) {}

    std::size_t size() const noexcept { return nbits_; }
    std::vector<u64>& words() noexcept { return words_; }
    const std::vector<u64>& words() const noexcept { return words_; }

    bool test(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1U; }
    void set(std::size_t i) noexcept { words_[i >> 6] |= u64{1} << (i & 63); }
    void reset(std::size_t i) noexcept { words_[i >> 6] &= ~(u64{1} << (i & 63)); }
    void clear() noexcept { std::fill(words_.begin(), words_.end(), 0); }

    std::size_t count() const noexcept
    {
        std::size_t c = 0;
        for (u64 w : words_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }

    template <typename F>
    void for_each_set(F&& f) const
    {
        for (std::size_t wi = 0; wi < words_.size(); ++wi) {
            u64 w = words_[wi];
            while (w) {
                const int b = std::countr_zero(w);
                f(wi * 64 + static_cast<std::size_t>(b));
                w &= w - 1;
            }
        }
    }

    /// this |= (src << shift), bits beyond size() dropped.
    void or_shifted_left(const Bitset& src, std::size_t shift) noexcept
    {
        const std::size_t ws = shift >> 6, bs = shift & 63, n = words_.size();
        if (ws >= n) return;
        if (bs == 0) {
            for (std::size_t i = n; i-- > ws;) words_[i] |= src.words_[i - ws];
        } else {
            for (std::size_t i = n; i-- > ws + 1;)
                words_[i] |= (src.words_[i - ws] << bs) | (src.words_[i - ws - 1] >> (64 - bs));
            words_[ws] |= src.words_[0] << bs;
        }
        trim();
    }

    /// this |= (src >> shift).
    void or_shifted_right(const Bitset& src, std::size_t shift) noexcept
    {
        const std::size_t ws = shift >> 6, bs = shift & 63, n = words_.size();
        if (ws >= n) return;
        if (bs == 0) {
            for (std::size_t i = 0; i + ws < n; ++i) words_[i] |= src.words_[i + ws];
        } else {
            for (std::size_t i = 0; i + ws < n; ++i) {
                u64 v = src.words_[i + ws] >> bs;
                if (i + ws + 1 < n) v |= src.words_[i + ws + 1] << (64 - bs);
                words_[i] |= v;
            }
        }
    }

    friend bool operator==(const Bitset&, const Bitset&) = default;

private:
    void trim() noexcept
    {
        if (nbits_ & 63) words_.back() &= (u64{1} << (nbits_ & 63)) - 1;
    }

    std::size_t nbits_ = 0;
    std::vector<u64> words_;
};

// ---------------------------------------------------------------------------
// Prime sieve
// ---------------------------------------------------------------------------

inline constexpr u64 kDefaultSieveCap = 1'000'000'000;

/// Exact prime membership for 0..limit. Immutable once built.
class PrimeSet {
public:
    PrimeSet() = default;
    PrimeSet(u64 limit, Bitset bits) : limit_(limit), bits_(std::move(bits)) {}

    u64 limit() const noexcept { return limit_; }
    bool contains(u64 n) const noexcept { return n <= limit_ && bits_.test(n); }
    std::size_t count() const noexcept { return bits_.count(); }
    const Bitset& bits() const noexcept { return bits_; }

    std::vector<u64> primes() const
    {
        std::vector<u64> out;
        bits_.for_each_set([&](std::size_t i) { out.push_back(i); });
        return out;
    }

    template <typename F>
    void for_each(F&& f) const
    {
        bits_.for_each_set([&](std::size_t i) { f(static_cast<u64>(i)); });
    }

private:
    u64 limit_ = 0;
    Bitset bits_;
};

/// Segmented sieve of Eratosthenes over [0, limit].
inline PrimeSet sieve_primes(u64 limit, u64 cap = kDefaultSieveCap)
{
    if (limit < 2) throw std::invalid_argument("sieve_primes: limit must be >= 2");
    if (limit > cap)
        throw resource_limit_error("sieve_primes: limit " + std::to_string(limit) + " exceeds cap " + std::to_string(cap));

    const u64 root = iroot(limit, 2);
    std::vector<char> small(root + 1, 1);
    std::vector<u64> base;
    for (u64 i = 2; i <= root; ++i) {
        if (!small[i]) continue;
        base.push_back(i);
        for (u64 j = i * i; j <= root; j += i) small[j] = 0;
    }

    Bitset bits(limit + 1);
    constexpr u64 kSegment = u64{1} << 18;
    std::vector<char> seg(kSegment);
    for (u64 lo = 0; lo <= limit; lo += kSegment) {
        const u64 hi = std::min(limit, lo + kSegment - 1);
        std::fill(seg.begin(), seg.end(), 1);
        for (u64 p : base) {
            u64 start = std::max(p * p, (lo + p - 1) / p * p);
            for (u64 j = start; j <= hi; j += p) seg[j - lo] = 0;
        }
        for (u64 n = lo; n <= hi; ++n)
            if (n >= 2 && seg[n - lo]) bits.set(n);
    }
    return PrimeSet(limit, std::move(bits));
}

// ---------------------------------------------------------------------------
// Rational approximation
// ---------------------------------------------------------------------------

struct Rational {
    i64 a;
    u64 q;
    friend bool operator==(const Rational&, const Rational&) = default;
};

/// Dirichlet approximation via continued-fraction convergents: returns a/q in
/// lowest terms with 1 <= q <= Q and |alpha - a/q| <= 1/(qQ).
///
/// The double alpha is expanded exactly (it is a dyadic rational), so the
/// convergents are those of the stored value, not of a rounded copy.
inline Rational rational_approx(double alpha, u64 Q)
{
    if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("rational_approx: alpha must lie in [0,1)");
    if (Q == 0) throw std::invalid_argument("rational_approx: Q must be >= 1");
    if (alpha == 0.0) return {0, 1};

    int e = 0;
    const double m = std::frexp(alpha, &e);                   // alpha = m * 2^e, m in [0.5, 1)
    u64 mant = static_cast<u64>(std::ldexp(m, 53));            // alpha = mant / 2^(53 - e)
    int shift = 53 - e;
    while (shift > 0 && (mant & 1U) == 0) {
        mant >>= 1;
        --shift;
    }
    // Below 2^-100 the approximation 0/1 already satisfies the bound for every 64-bit Q.
    if (shift > 120) return {0, 1};

    u128 num = mant, den = u128{1} << shift;
    u128 h1 = 1, h2 = 0, k1 = 0, k2 = 1;
    Rational best{0, 1};
    while (den != 0) {
        const u128 a = num / den;
        if (k1 != 0 && a > (static_cast<u128>(Q) - k2) / k1) break;
        const u128 h = a * h1 + h2, k = a * k1 + k2;
        if (k > Q) break;
        best = {static_cast<i64>(h), static_cast<u64>(k)};
        h2 = h1;
        h1 = h;
        k2 = k1;
        k1 = k;
        const u128 rem = num - a * den;
        num = den;
        den = rem;
    }
    return best;
}

} // namespace wglab
