#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bqp/arith.hpp"
#include "bqp/parallel.hpp"
#include "bqp/quadfield.hpp"

namespace bqp {

enum class KappaRoute { Direct, Regularized };

inline std::string to_string(KappaRoute r) { return r == KappaRoute::Direct ? "direct" : "regularized"; }

struct KappaResult {
    i64 n = 0;
    double value = 0;
    KappaRoute route = KappaRoute::Direct;
    u64 prime_limit = 0;
    double tail_bound = 0;  // regularized: proven bound on |kappa - value|; direct: half-width of the oscillation band
    std::vector<std::pair<u64, double>> trace;
};

// Euler factor of kappa_n at p: p(p-3)/(p-1)^2 when p does not divide 2n and
// (-n|p) = 1, else p/(p-1).
inline double kappa_factor(const FieldInvariants& inv, u64 p) {
    const double q = static_cast<double>(p);
    const bool divides = (2 * static_cast<u64>(inv.n)) % p == 0;
    if (!divides && kronecker(-inv.n, static_cast<i64>(p)) == 1) return q * (q - 3) / ((q - 1) * (q - 1));
    return q / (q - 1);
}

// g(p) = kappa_factor(p) / (1 - (Delta|p)/p). Closed forms for p not dividing 2n:
// split p^2(p-3)/(p-1)^3, inert p^2/(p^2-1), ramified p/(p-1).
inline double kappa_regular_factor(const FieldInvariants& inv, u64 p) {
    const int chi = kronecker(inv.delta, static_cast<i64>(p));
    const double q = static_cast<double>(p);
    return kappa_factor(inv, p) / (1.0 - chi / q);
}

inline double log_kappa_regular_factor(const FieldInvariants& inv, u64 p) {
    const double q = static_cast<double>(p);
    const bool divides = (2 * static_cast<u64>(inv.n)) % p == 0;
    if (divides) return std::log(kappa_regular_factor(inv, p));
    const int chi = kronecker(inv.delta, static_cast<i64>(p));
    if (chi == 1) return std::log1p(-3.0 / q) - 3.0 * std::log1p(-1.0 / q);
    if (chi == -1) return -std::log1p(-1.0 / (q * q));
    return -std::log1p(-1.0 / q);
}

namespace detail {

// sum over primes in (lo, hi] of fn(p), in 256 ordered chunks.
template <class Fn>
double ordered_prime_sum(const PrimeTable& pt, u64 lo, u64 hi, unsigned threads, Fn&& fn) {
    if (hi <= lo) return 0.0;
    const size_t chunks = 256;
    std::vector<double> part(chunks, 0.0);
    const u64 span = hi - lo;
    parallel_chunks(chunks, resolve_threads(threads), [&](size_t c) {
        const u64 a = lo + span * c / chunks + 1;
        const u64 b = lo + span * (c + 1) / chunks;
        if (b < a) return;
        KahanSumD s;
        pt.for_each_prime(a, b, [&](u64 p) { s.add(fn(p)); });
        part[c] = s.value();
    });
    KahanSumD s;
    for (double v : part) s.add(v);
    return s.value();
}

}  // namespace detail

// Partial products of the kappa factors up to P, reported as the exponential of
// the log-uniform average of log partial products over [P/2, P].
inline KappaResult kappa_direct(const FieldInvariants& inv, u64 P, unsigned threads = 0) {
    require(P >= 100, "kappa_direct needs P >= 100");
    if (P > 4'000'000'000ULL) throw CapacityError("kappa_direct prime limit above 4e9");
    PrimeTable pt(P);
    const u64 half = P / 2;
    const double base = detail::ordered_prime_sum(pt, 1, half, threads, [&](u64 p) { return std::log(kappa_factor(inv, p)); });
    KappaResult r;
    r.n = inv.n;
    r.route = KappaRoute::Direct;
    r.prime_limit = P;
    // Walk the window [P/2, P]: log partial product is piecewise constant between primes.
    double cur = base, lo = base, hi = base;
    KahanSumD integral;
    double last = static_cast<double>(half);
    pt.for_each_prime(half + 1, P, [&](u64 p) {
        const double x = static_cast<double>(p);
        integral.add(cur * std::log(x / last));
        cur += std::log(kappa_factor(inv, p));
        lo = std::min(lo, cur);
        hi = std::max(hi, cur);
        last = x;
    });
    integral.add(cur * std::log(static_cast<double>(P) / last));
    const double avg = integral.value() / std::log(static_cast<double>(P) / static_cast<double>(half));
    r.value = std::exp(avg);
    r.tail_bound = 0.5 * (std::exp(hi) - std::exp(lo));
    for (u64 x = 100; x <= P; x *= 10) {
        const double v = detail::ordered_prime_sum(pt, 1, x, 1, [&](u64 p) { return std::log(kappa_factor(inv, p)); });
        r.trace.emplace_back(x, std::exp(v));
    }
    r.trace.emplace_back(half, std::exp(base));
    r.trace.emplace_back(P, std::exp(cur));
    return r;
}

// Rigorous tail: for p > P >= 10^6 with p not dividing 2n, |log g(p)| <= (3 + 10/P)/p^2,
// and sum_{p > P} 1/p^2 <= 2.51012/(P log P) from pi(x) < 1.25506 x / log x.
inline double kappa_log_tail_bound(u64 P) {
    const double q = static_cast<double>(P);
    return (3.0 + 10.0 / q) * 2.51012 / (q * std::log(q));
}

inline constexpr u64 kKappaMaxPrimeLimit = 1'000'000'000ULL;

// kappa_n = prod_{p <= P} g(p) / L(1, chi_Delta) with a proven tail bound. When P
// is not given it is doubled from 10^6 until the bound is at most tol.
inline KappaResult kappa_regularized(const FieldInvariants& inv, std::optional<u64> P_opt, double tol = 1e-8,
                                     unsigned threads = 0) {
    require(tol > 0, "tolerance must be positive");
    const double L1 = l_one_chi(inv);
    auto evaluate = [&](u64 P) {
        PrimeTable pt(P);
        const double logp =
            detail::ordered_prime_sum(pt, 1, P, threads, [&](u64 p) { return log_kappa_regular_factor(inv, p); });
        return std::exp(logp) / L1;
    };
    const u64 min_P = std::max<u64>(1'000'000, 4 * static_cast<u64>(inv.n));
    u64 P;
    if (P_opt) {
        P = *P_opt;
        require(P >= min_P, "regularized route needs P >= max(10^6, 4n)");
    } else {
        // Choose P from a pilot value; confirm below with the value actually computed.
        const double pilot = evaluate(min_P);
        P = min_P;
        while (pilot * 1.01 * std::expm1(kappa_log_tail_bound(P)) > tol) {
            P *= 2;
            if (P > kKappaMaxPrimeLimit) throw CapacityError("kappa tolerance unreachable below prime limit 1e9");
        }
    }
    if (P > kKappaMaxPrimeLimit) throw CapacityError("kappa prime limit above 1e9");
    KappaResult r;
    r.n = inv.n;
    r.route = KappaRoute::Regularized;
    for (;;) {
        r.value = evaluate(P);
        r.prime_limit = P;
        r.tail_bound = r.value * std::expm1(kappa_log_tail_bound(P));
        if (P_opt || r.tail_bound <= tol) break;
        P *= 2;
        if (P > kKappaMaxPrimeLimit) throw CapacityError("kappa tolerance unreachable below prime limit 1e9");
    }
    r.trace.emplace_back(P, r.value);
    return r;
}

}  // namespace bqp
