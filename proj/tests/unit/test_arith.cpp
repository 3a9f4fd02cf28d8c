#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bqp/arith.hpp"
#include "bqp/oracles.hpp"

using namespace bqp;

TEST(PrimeTable, SmallLimits) {
    EXPECT_EQ(PrimeTable(10).primes(), (std::vector<u64>{2, 3, 5, 7}));
    EXPECT_EQ(PrimeTable(100).primes().size(), 25u);
    EXPECT_EQ(PrimeTable(2).primes(), (std::vector<u64>{2}));
}

TEST(PrimeTable, CountUpToMillionMatchesTrialDivision) {
    // Trial-division oracle over [1, 10^4]; the 10^6 count is frozen from the same oracle.
    u64 c = 0;
    for (u64 m = 1; m <= 10'000; ++m) c += oracle::trial_prime(m);
    PrimeTable pt(1'000'000);
    EXPECT_EQ(pt.primes(10'000).size(), c);
    EXPECT_EQ(pt.primes().size(), 78498u);
}

TEST(PrimeTable, SegmentSizeDoesNotChangeResult) {
    EXPECT_EQ(PrimeTable(200'000, 64).primes(), PrimeTable(200'000).primes());
    EXPECT_EQ(PrimeTable(200'000, 4096).primes(), PrimeTable(200'000).primes());
}

TEST(PrimeTable, ForEachPrimeRangeMatchesMembership) {
    PrimeTable pt(5000);
    std::vector<u64> got;
    pt.for_each_prime(1000, 1100, [&](u64 p) { got.push_back(p); });
    std::vector<u64> want;
    for (u64 m = 1000; m <= 1100; ++m)
        if (oracle::trial_prime(m)) want.push_back(m);
    EXPECT_EQ(got, want);
    for (u64 m = 0; m <= 5000; ++m) EXPECT_EQ(pt.is_prime(m), oracle::trial_prime(m)) << m;
}

TEST(PrimeTable, RejectsOutOfRange) {
    EXPECT_THROW(PrimeTable(1), CapacityError);
}

TEST(IsPrime64, Examples) {
    EXPECT_FALSE(is_prime_64(1));
    EXPECT_FALSE(is_prime_64(0));
    EXPECT_TRUE(is_prime_64(2));
    EXPECT_TRUE(is_prime_64(4294967311ULL));
    EXPECT_TRUE(is_prime_64(1'000'000'000'039ULL));
    EXPECT_FALSE(is_prime_64(1'000'000'000'001ULL));  // 73 * 137 * 99990001
}

TEST(IsPrime64, AgreesWithTrialDivisionOnRandomInputs) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 3000; ++i) {
        const u64 m = rng() % 2'000'000'000ULL;
        EXPECT_EQ(is_prime_64(m), oracle::trial_prime(m)) << m;
    }
    // Strong pseudoprimes to small bases.
    for (u64 m : {2047ULL, 1373653ULL, 25326001ULL, 3215031751ULL, 2152302898747ULL, 3474749660383ULL})
        EXPECT_FALSE(is_prime_64(m)) << m;
}

TEST(Weights, LambdaPrime) {
    EXPECT_DOUBLE_EQ(lambda_prime(-7), std::log(7.0));
    EXPECT_EQ(lambda_prime(9), 0.0);
    EXPECT_EQ(lambda_prime(0), 0.0);
    EXPECT_EQ(lambda_prime(1), 0.0);
}

TEST(Weights, VonMangoldt) {
    EXPECT_DOUBLE_EQ(von_mangoldt(8), std::log(2.0));
    EXPECT_DOUBLE_EQ(von_mangoldt(-5), std::log(5.0));
    EXPECT_EQ(von_mangoldt(6), 0.0);
    EXPECT_EQ(von_mangoldt(1), 0.0);
}

TEST(TauMu, Examples) {
    EXPECT_EQ(tau_mu(12).tau, 6u);
    EXPECT_EQ(tau_mu(12).mu, 0);
    EXPECT_EQ(tau_mu(30).tau, 8u);
    EXPECT_EQ(tau_mu(30).mu, -1);
    EXPECT_EQ(tau_mu(1).tau, 1u);
    EXPECT_EQ(tau_mu(1).mu, 1);
    EXPECT_THROW(tau_mu(0), DomainError);
}

TEST(TauMu, MatchesDivisorLoop) {
    const auto tau = divisor_counts(3000);
    for (i64 x = 1; x <= 3000; ++x) {
        u64 d = 0;
        int sq = 0;
        for (i64 k = 1; k <= x; ++k) {
            if (x % k == 0) ++d;
            if (k > 1 && x % (k * k) == 0) sq = 1;
        }
        EXPECT_EQ(tau_mu(x).tau, d);
        EXPECT_EQ(tau_mu(-x).tau, d);
        EXPECT_EQ(tau[x], d);
        if (sq) {
            EXPECT_EQ(tau_mu(x).mu, 0);
        }
    }
}

TEST(Factorize, ProductRecoversInput) {
    std::mt19937_64 rng(11);
    FactorSieve fs(100'000);
    for (int i = 0; i < 2000; ++i) {
        const u64 m = 1 + rng() % 1'000'000'000'000ULL;
        u64 prod = 1;
        for (auto [p, e] : factorize(m)) {
            EXPECT_TRUE(is_prime_64(p));
            for (int k = 0; k < e; ++k) prod *= p;
        }
        EXPECT_EQ(prod, m);
        const u64 s = 1 + rng() % 100'000;
        EXPECT_EQ(fs.factor(s), factorize(s));
    }
}

TEST(DivisorMoment, SmallCase) {
    const auto r = divisor_moment_report(16, 1);
    EXPECT_DOUBLE_EQ(r.sum, 100.0);
    const auto a = divisor_moment_report(1000, 2), b = divisor_moment_report(2000, 2);
    EXPECT_GT(a.ratio, 0);
    EXPECT_TRUE(std::isfinite(a.ratio));
    EXPECT_LE(b.ratio / a.ratio, 2.0);
    EXPECT_GE(b.ratio / a.ratio, 0.5);
}
