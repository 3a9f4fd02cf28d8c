#include <gtest/gtest.h>

#include <cmath>

#include "bqp/constants.hpp"

using namespace bqp;

TEST(KappaFactor, Examples) {
    const auto f = field_invariants(4);
    EXPECT_DOUBLE_EQ(kappa_factor(f, 2), 2.0);
    EXPECT_DOUBLE_EQ(kappa_factor(f, 3), 1.5);
    EXPECT_DOUBLE_EQ(kappa_regular_factor(f, 3), 9.0 / 8.0);
    EXPECT_DOUBLE_EQ(kappa_factor(f, 5), 5.0 / 8.0);
    EXPECT_DOUBLE_EQ(kappa_regular_factor(f, 5), 25.0 / 32.0);
}

TEST(KappaFactor, LogFormMatchesProductForm) {
    for (i64 n : {4, 6, 10, 12, 16, 22, 30}) {
        const auto f = field_invariants(n);
        PrimeTable pt(20'000);
        pt.for_each_prime(5, 20'000, [&](u64 p) {
            EXPECT_NEAR(log_kappa_regular_factor(f, p), std::log(kappa_regular_factor(f, p)), 1e-13) << n << " " << p;
        });
    }
}

TEST(KappaFactor, LogBoundAwayFromTwoN) {
    for (i64 n : {4, 6, 10, 12, 16, 22}) {
        const auto f = field_invariants(n);
        PrimeTable pt(100'000);
        pt.for_each_prime(50, 100'000, [&](u64 p) {
            if ((2 * static_cast<u64>(n)) % p == 0) return;
            const double q = static_cast<double>(p);
            EXPECT_LE(q * q * std::fabs(log_kappa_regular_factor(f, p)), 3.0 + 10.0 / q) << n << " " << p;
        });
    }
}

TEST(KappaFactor, VanishesWhenThreeSplits) {
    // (-2|3) = 1 and 3 does not divide 4, so the factor p(p-3)/(p-1)^2 is 0.
    EXPECT_EQ(kappa_factor(field_invariants(2), 3), 0.0);
}

TEST(Kappa, RegularizedMatchesExplicitProduct) {
    for (i64 n : {4, 6, 12}) {
        const auto f = field_invariants(n);
        const u64 P = 1'000'000;
        PrimeTable pt(P);
        long double logp = 0;
        pt.for_each_prime(2, P, [&](u64 p) {
            const long double q = p;
            const int chi = kronecker(f.delta, static_cast<i64>(p));
            long double fac = ((2 * static_cast<u64>(n)) % p != 0 && kronecker(-n, static_cast<i64>(p)) == 1)
                                  ? q * (q - 3) / ((q - 1) * (q - 1))
                                  : q / (q - 1);
            logp += std::log(fac / (1 - chi / q));
        });
        const double want = static_cast<double>(std::exp(logp)) / l_one_chi(f);
        const auto r = kappa_regularized(f, P, 1e-8, 1);
        EXPECT_NEAR(r.value, want, 1e-11 * want) << n;
        EXPECT_GT(r.value, 0);
        EXPECT_EQ(r.prime_limit, P);
    }
}

TEST(Kappa, TailBoundCoversLargerLimit) {
    const auto f = field_invariants(10);
    const auto a = kappa_regularized(f, u64{1'000'000}, 1e-8, 1);
    const auto b = kappa_regularized(f, u64{4'000'000}, 1e-8, 1);
    EXPECT_LE(std::fabs(a.value - b.value), a.tail_bound);
    EXPECT_LT(b.tail_bound, a.tail_bound);
}

TEST(Kappa, DirectAgreesWithRegularizedLoosely) {
    const auto f = field_invariants(4);
    const auto d = kappa_direct(f, 2'000'000, 1);
    const auto r = kappa_regularized(f, std::nullopt, 1e-6, 1);
    EXPECT_NEAR(d.value, r.value, 1e-3);
    EXPECT_LE(r.tail_bound, 1e-6);
    EXPECT_EQ(d.trace.front().first, 100u);
}

TEST(Kappa, DirectIsThreadIndependent) {
    const auto f = field_invariants(6);
    EXPECT_EQ(kappa_direct(f, 300'000, 1).value, kappa_direct(f, 300'000, 4).value);
}

TEST(Kappa, Validation) {
    const auto f = field_invariants(4);
    EXPECT_THROW(kappa_direct(f, 10), DomainError);
    EXPECT_THROW(kappa_regularized(f, u64{1000}), DomainError);
    EXPECT_THROW(kappa_regularized(f, std::nullopt, 0.0), DomainError);
    EXPECT_THROW(kappa_regularized(f, u64{2'000'000'000}), CapacityError);
}
