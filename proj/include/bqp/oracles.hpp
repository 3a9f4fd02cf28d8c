#pragma once

// Definitional brute-force evaluators. They share no code paths with the fast
// engines they check beyond the basic containers.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "bqp/arith.hpp"
#include "bqp/gowers.hpp"
#include "bqp/parallel.hpp"
#include "bqp/quadfield.hpp"

namespace bqp::oracle {

inline bool trial_prime(u64 m) {
    if (m < 2) return false;
    for (u64 d = 2; d * d <= m; ++d)
        if (m % d == 0) return false;
    return true;
}

// sum_{x, h1, h2} f(x) conj f(x + h1) conj f(x + h2) f(x + h1 + h2).
inline double u2_power(const ArithFunction& f) {
    if (f.empty()) return 0;
    const i64 L = static_cast<i64>(f.size()), lo = f.lo, hi = f.hi();
    KahanSumC s;
    for (i64 h1 = -L + 1; h1 < L; ++h1)
        for (i64 h2 = -L + 1; h2 < L; ++h2) {
            const i64 mn = std::min({i64{0}, h1, h2, h1 + h2}), mx = std::max({i64{0}, h1, h2, h1 + h2});
            for (i64 x = lo - mn; x + mx < hi; ++x)
                s.add(f(x) * std::conj(f(x + h1)) * std::conj(f(x + h2)) * f(x + h1 + h2));
        }
    return s.value().real();
}

// sum_{x, h} prod_{w in {0,1}^3} C^{|w|} f(x + w.h).
inline double u3_power(const ArithFunction& f) {
    if (f.empty()) return 0;
    const i64 L = static_cast<i64>(f.size()), lo = f.lo, hi = f.hi();
    KahanSumC s;
    for (i64 h1 = -L + 1; h1 < L; ++h1)
        for (i64 h2 = -L + 1; h2 < L; ++h2)
            for (i64 h3 = -L + 1; h3 < L; ++h3) {
                i64 off[8];
                i64 mn = 0, mx = 0;
                for (int w = 0; w < 8; ++w) {
                    off[w] = (w & 1 ? h1 : 0) + (w & 2 ? h2 : 0) + (w & 4 ? h3 : 0);
                    mn = std::min(mn, off[w]);
                    mx = std::max(mx, off[w]);
                }
                if (mx - mn >= L) continue;
                for (i64 x = lo - mn; x + mx < hi; ++x) {
                    cplx p{1, 0};
                    for (int w = 0; w < 8; ++w) {
                        const cplx v = f(x + off[w]);
                        p *= (std::popcount(static_cast<unsigned>(w)) % 2) ? std::conj(v) : v;
                    }
                    s.add(p);
                }
            }
    return s.value().real();
}

// #{(x, y) : x^2 + n y^2 = t} for every t <= T, by sweeping the lattice.
inline std::vector<std::uint32_t> rep_counts(i64 n, u64 T) {
    std::vector<std::uint32_t> r(T + 1, 0);
    const i64 lim = static_cast<i64>(std::sqrt(static_cast<double>(T))) + 1;
    for (i64 y = -lim; y <= lim; ++y)
        for (i64 x = -lim; x <= lim; ++x) {
            const u64 t = static_cast<u64>(x * x + n * y * y);
            if (t <= T) ++r[t];
        }
    return r;
}

// sum over lattice points with x^2 + n y^2 = p <= X prime of chi_ell(x + y sqrt(-n)) fx(x) fy(y).
template <class Fx, class Fy>
cplx headline_sum(i64 n, u64 X, i64 ell, Fx&& fx, Fy&& fy) {
    const i64 lim = static_cast<i64>(std::sqrt(static_cast<double>(X))) + 1;
    KahanSumC s;
    for (i64 x = -lim; x <= lim; ++x)
        for (i64 y = -lim; y <= lim; ++y) {
            const u64 t = static_cast<u64>(x * x + n * y * y);
            if (t > X || !trial_prime(t)) continue;
            const cplx z(static_cast<double>(x), static_cast<double>(y) * std::sqrt(static_cast<double>(n)));
            s.add(std::pow(z / std::abs(z), static_cast<double>(ell)) * fx(x) * fy(y));
        }
    return s.value();
}

}  // namespace bqp::oracle
