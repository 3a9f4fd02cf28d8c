#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "bqp/arith.hpp"
#include "bqp/parallel.hpp"

namespace bqp {

struct CramerParams {
    double X = 0;
    double Q = 0;
    double t = 0;
    double normalizer = 1;  // prod_{p <= Q} (1 - 1/p)^{-1}
    std::vector<u64> primes;  // p <= Q

    static double default_Q(double X) { return std::exp(std::pow(std::log(std::sqrt(X)), 0.1)); }
    static double default_t(double X) { return 20.0 * std::log(std::log(X)); }

    // Q and t default to exp((log X^{1/2})^{1/10}) and 20 log log X.
    static CramerParams make(double X, std::optional<double> Q = std::nullopt, std::optional<double> t = std::nullopt) {
        require(X > std::exp(1.0), "Cramer parameters need X > e");
        CramerParams p;
        p.X = X;
        p.Q = Q ? *Q : default_Q(X);
        p.t = t ? *t : default_t(X);
        require(p.Q >= 2 && p.Q <= 1e9, "Q must lie in [2, 1e9]");
        require(p.t >= 0, "t must be nonnegative");
        PrimeTable pt(static_cast<u64>(std::floor(p.Q)));
        p.primes = pt.primes();
        long double prod = 1;
        for (u64 q : p.primes) prod *= static_cast<long double>(q) / (q - 1);
        p.normalizer = static_cast<double>(prod);
        return p;
    }

    // Number of p <= Q dividing x.
    int smooth_omega(i64 x) const {
        const u64 a = abs_u(x);
        int k = 0;
        for (u64 q : primes)
            if (a % q == 0) ++k;
        return k;
    }
};

// normalizer * 1[x in Z and no p <= Q divides x].
inline double lambda_cramer(i64 num, i64 den, const CramerParams& P) {
    require(den != 0, "zero denominator");
    if (num % den != 0) return 0.0;
    const i64 x = num / den;
    return P.smooth_omega(x) == 0 ? P.normalizer : 0.0;
}

inline double lambda_cramer(i64 x, const CramerParams& P) { return lambda_cramer(x, 1, P); }

struct SharpFlat {
    double sharp;
    double flat;
};

// Only the k primes p <= Q dividing x matter, and subsets of size j of them
// contribute (-1)^j C(k, j), truncated at j <= t.
inline SharpFlat lambda_sharp_flat(i64 x, const CramerParams& P) {
    const int k = P.smooth_omega(x);
    const int jmax = std::min<int>(k, static_cast<int>(std::floor(P.t)));
    long double s = 0, binom = 1;
    for (int j = 0; j <= jmax; ++j) {
        s += (j % 2 ? -binom : binom);
        binom = binom * (k - j) / (j + 1);
    }
    const double sharp = P.normalizer * static_cast<double>(s);
    return {sharp, lambda_cramer(x, P) - sharp};
}

// (1/Y) sum_{0 < x <= Y} Lambda_Cramer(x).
inline double cramer_mean_value(u64 Y, const CramerParams& P) {
    require(Y >= 1, "Y must be positive");
    std::vector<bool> hit(Y + 1, false);
    for (u64 q : P.primes)
        for (u64 m = q; m <= Y; m += q) hit[m] = true;
    u64 c = 0;
    for (u64 x = 1; x <= Y; ++x) c += hit[x] ? 0 : 1;
    return P.normalizer * static_cast<double>(c) / static_cast<double>(Y);
}

struct FlatReport {
    double l1;        // sum_{0 < x <= X^{1/2}} |flat(x)|
    double shape;     // X^{1/2} (log X)^{-8}
    double ratio;
    u64 nonzero;
};

inline FlatReport flat_magnitude_report(const CramerParams& P) {
    const u64 R = static_cast<u64>(std::floor(std::sqrt(P.X)));
    KahanSumD acc;
    u64 nz = 0;
    for (u64 x = 1; x <= R; ++x) {
        const double f = std::fabs(lambda_sharp_flat(static_cast<i64>(x), P).flat);
        if (f != 0) ++nz;
        acc.add(f);
    }
    const double shape = std::sqrt(P.X) * std::pow(std::log(P.X), -8.0);
    return {acc.value(), shape, acc.value() / shape, nz};
}

}  // namespace bqp
