#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "bqp/errors.hpp"

namespace bqp {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;

inline constexpr u64 kMaxSieveLimit = u64{1} << 40;
inline constexpr size_t kDefaultSegmentBytes = 256 * 1024;

inline u64 isqrt(u64 x) {
    u64 r = static_cast<u64>(std::sqrt(static_cast<double>(x)));
    while (r > 0 && r * r > x) --r;
    while ((r + 1) * (r + 1) <= x) ++r;
    return r;
}

inline u64 gcd_u(u64 a, u64 b) {
    while (b) {
        a %= b;
        std::swap(a, b);
    }
    return a;
}

inline i64 gcd_i(i64 a, i64 b) {
    return static_cast<i64>(gcd_u(a < 0 ? -static_cast<u64>(a) : a, b < 0 ? -static_cast<u64>(b) : b));
}

inline u64 mulmod(u64 a, u64 b, u64 m) { return static_cast<u64>(static_cast<u128>(a) * b % m); }

inline u64 powmod(u64 b, u64 e, u64 m) {
    u64 r = 1 % m;
    b %= m;
    while (e) {
        if (e & 1) r = mulmod(r, b, m);
        b = mulmod(b, b, m);
        e >>= 1;
    }
    return r;
}

// Odd-only bit table: bit i set iff 2i+1 is prime and 2i+1 <= limit.
class PrimeTable {
  public:
    explicit PrimeTable(u64 limit, size_t segment_bytes = kDefaultSegmentBytes) : limit_(limit) {
        if (limit < 2 || limit > kMaxSieveLimit) throw CapacityError("sieve limit out of range [2, 2^40]");
        if (segment_bytes < 64) segment_bytes = 64;
        const u64 nbits = (limit + 1) / 2;  // odd numbers 1, 3, ..., <= limit
        bits_.assign((nbits + 63) / 64, ~u64{0});
        if (nbits % 64) bits_.back() &= (u64{1} << (nbits % 64)) - 1;
        bits_[0] &= ~u64{1};  // 1 is not prime

        const u64 root = isqrt(limit);
        std::vector<u64> base;
        {
            std::vector<bool> small(root + 1, true);
            for (u64 p = 3; p <= root; p += 2) {
                if (!small[p]) continue;
                base.push_back(p);
                for (u64 q = p * p; q <= root; q += 2 * p) small[q] = false;
            }
        }
        // Segment over bit indices; each segment touches at most segment_bytes of the table.
        const u64 seg_bits = static_cast<u64>(segment_bytes) * 8;
        for (u64 lo = 0; lo < nbits; lo += seg_bits) {
            const u64 hi = std::min(nbits, lo + seg_bits);
            for (u64 p : base) {
                u64 start = (p * p - 1) / 2;
                if (start >= hi) break;
                if (start < lo) {
                    u64 k = (lo - start + p - 1) / p;
                    start += k * p;
                }
                for (u64 i = start; i < hi; i += p) bits_[i >> 6] &= ~(u64{1} << (i & 63));
            }
        }
    }

    u64 limit() const { return limit_; }

    bool is_prime(u64 m) const {
        if (m > limit_) throw DomainError("query above sieve limit");
        if (m == 2) return true;
        if (m < 2 || (m & 1) == 0) return false;
        u64 i = m >> 1;
        return (bits_[i >> 6] >> (i & 63)) & 1;
    }

    u64 count() const {
        u64 c = limit_ >= 2 ? 1 : 0;
        for (u64 w : bits_) c += std::popcount(w);
        return c;
    }

    template <class Fn>
    void for_each_prime(u64 lo, u64 hi, Fn&& fn) const {
        hi = std::min(hi, limit_);
        if (lo <= 2 && hi >= 2) fn(u64{2});
        if (hi < 3) return;
        u64 i = std::max<u64>(lo, 3) / 2;
        const u64 iend = (hi - 1) / 2 + 1;
        while (i < iend) {
            u64 w = bits_[i >> 6] >> (i & 63);
            if (w == 0) {
                i = (i | 63) + 1;
                continue;
            }
            i += std::countr_zero(w);
            if (i >= iend) break;
            u64 p = 2 * i + 1;
            if (p >= lo) fn(p);
            ++i;
        }
    }

    std::vector<u64> primes(u64 hi) const {
        std::vector<u64> out;
        for_each_prime(2, hi, [&](u64 p) { out.push_back(p); });
        return out;
    }
    std::vector<u64> primes() const { return primes(limit_); }

  private:
    u64 limit_;
    std::vector<u64> bits_;
};

inline PrimeTable sieve_primes(u64 limit, size_t segment_bytes = kDefaultSegmentBytes) {
    return PrimeTable(limit, segment_bytes);
}

// Deterministic for all m < 2^64 with the first twelve prime bases.
inline bool is_prime_64(u64 m) {
    static constexpr u64 kWitness[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    if (m < 2) return false;
    for (u64 p : kWitness) {
        if (m % p == 0) return m == p;
    }
    u64 d = m - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (u64 a : kWitness) {
        u64 x = powmod(a, d, m);
        if (x == 1 || x == m - 1) continue;
        bool composite = true;
        for (int r = 1; r < s; ++r) {
            x = mulmod(x, x, m);
            if (x == m - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

using Factorization = std::vector<std::pair<u64, int>>;

// Primes up to 10^6, shared by trial division.
inline const std::vector<u64>& small_primes() {
    static const std::vector<u64> ps = PrimeTable(1'000'000).primes();
    return ps;
}

// Trial division by primes <= 10^6; exact for m < 10^12 and for any m whose
// cofactor after trial division is prime.
inline Factorization factorize(u64 m) {
    if (m == 0) throw DomainError("factorize(0)");
    Factorization out;
    for (u64 p : small_primes()) {
        if (p * p > m) break;
        if (m % p) continue;
        int e = 0;
        do {
            m /= p;
            ++e;
        } while (m % p == 0);
        out.emplace_back(p, e);
    }
    if (m > 1) {
        const u64 b = small_primes().back();
        if (m / b >= b && !is_prime_64(m)) throw CapacityError("factorization beyond trial-division range");
        out.emplace_back(m, 1);
    }
    return out;
}

// Smallest-prime-factor table for bulk factorization of integers <= limit.
class FactorSieve {
  public:
    explicit FactorSieve(u64 limit) : limit_(limit) {
        if (limit > 400'000'000ULL) throw CapacityError("factor sieve limit above 4e8");
        spf_.assign(limit + 1, 0);
        std::vector<std::uint32_t> primes;
        for (u64 i = 2; i <= limit; ++i) {
            if (spf_[i] == 0) {
                spf_[i] = static_cast<std::uint32_t>(i);
                primes.push_back(static_cast<std::uint32_t>(i));
            }
            for (std::uint32_t p : primes) {
                u64 q = static_cast<u64>(p) * i;
                if (p > spf_[i] || q > limit) break;
                spf_[q] = p;
            }
        }
    }
    u64 limit() const { return limit_; }
    u64 spf(u64 m) const { return spf_[m]; }

    Factorization factor(u64 m) const {
        if (m == 0) throw DomainError("factor(0)");
        if (m > limit_) return factorize(m);
        Factorization out;
        while (m > 1) {
            u64 p = spf_[m];
            int e = 0;
            while (m % p == 0) {
                m /= p;
                ++e;
            }
            out.emplace_back(p, e);
        }
        return out;
    }

  private:
    u64 limit_;
    std::vector<std::uint32_t> spf_;
};

inline u64 abs_u(i64 x) { return x < 0 ? -static_cast<u64>(x) : static_cast<u64>(x); }

// Lambda'(x) = log|x| when |x| is prime, else 0.
inline double lambda_prime(i64 x) {
    u64 a = abs_u(x);
    return is_prime_64(a) ? std::log(static_cast<double>(a)) : 0.0;
}

// Lambda(x) = log p when |x| = p^k (k >= 1), else 0; Lambda(0) = 0.
inline double von_mangoldt(i64 x) {
    u64 a = abs_u(x);
    if (a < 2) return 0.0;
    auto f = factorize(a);
    return f.size() == 1 ? std::log(static_cast<double>(f[0].first)) : 0.0;
}

struct TauMu {
    u64 tau;
    int mu;
};

inline TauMu tau_mu(i64 x) {
    if (x == 0) throw DomainError("tau/mu undefined at 0");
    TauMu r{1, 1};
    for (auto [p, e] : factorize(abs_u(x))) {
        r.tau *= static_cast<u64>(e + 1);
        r.mu = e > 1 ? 0 : -r.mu;
    }
    return r;
}

// tau(y) for 0 <= y <= limit (tau(0) stored as 0).
inline std::vector<std::uint32_t> divisor_counts(u64 limit) {
    if (limit > 400'000'000ULL) throw CapacityError("divisor table above 4e8");
    std::vector<std::uint32_t> tau(limit + 1, 0);
    for (u64 d = 1; d <= limit; ++d)
        for (u64 m = d; m <= limit; m += d) ++tau[m];
    return tau;
}

struct DivisorMoment {
    double sum;
    double ratio;
};

// S = sum_{0<|y|<=Y} tau(y)^m, reported against Y (log Y)^(2^m - 1).
inline DivisorMoment divisor_moment_report(u64 Y, int m) {
    require(Y >= 16, "divisor moment needs Y >= 16");
    require(m >= 1 && m <= 4, "divisor moment needs 1 <= m <= 4");
    auto tau = divisor_counts(Y);
    long double s = 0;
    for (u64 y = 1; y <= Y; ++y) s += std::pow(static_cast<long double>(tau[y]), m);
    s *= 2;
    double sum = static_cast<double>(s);
    double denom = static_cast<double>(Y) * std::pow(std::log(static_cast<double>(Y)), (1 << m) - 1);
    return {sum, sum / denom};
}

}  // namespace bqp
