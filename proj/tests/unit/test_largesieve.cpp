#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bqp/largesieve.hpp"

using namespace bqp;

namespace {

LatticeArray random_array(std::mt19937_64& rng, int k, i64 N) {
    std::normal_distribution<double> d;
    LatticeArray a(k, N);
    for (auto& v : a.a) v = {d(rng), d(rng)};
    return a;
}

}  // namespace

TEST(TrigPoly, Examples) {
    LatticeArray a(1, 10);
    for (auto& v : a.a) v = 1;
    EXPECT_NEAR(std::abs(trig_poly(a, {0.0}) - cplx(10, 0)), 0, 1e-12);
    EXPECT_NEAR(std::abs(trig_poly(a, {0.5})), 0, 1e-12);  // alternating sum of even length
    LatticeArray b(2, 6);
    b.at(3, 4) = 1;
    for (double t : {0.1, 0.37, 0.9}) EXPECT_NEAR(std::abs(trig_poly(b, {t, 1 - t})), 1.0, 1e-12);
    EXPECT_THROW(trig_poly(b, {0.1}), DomainError);
}

TEST(TrigPoly, MatchesDirectExponentialSum) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    for (int it = 0; it < 20; ++it) {
        const auto a = random_array(rng, 2, 9);
        const double t1 = u(rng), t2 = u(rng);
        cplx want = 0;
        for (i64 n1 = 1; n1 <= 9; ++n1)
            for (i64 n2 = 1; n2 <= 9; ++n2)
                want += a.at(n1, n2) * std::exp(cplx(0, 2 * std::numbers::pi * (t1 * n1 + t2 * n2)));
        EXPECT_LT(std::abs(trig_poly(a, {t1, t2}) - want), 1e-10);
    }
}

TEST(WellSpaced, Examples) {
    std::mt19937_64 rng(3);
    const auto a = random_array(rng, 2, 20);
    const auto one = well_spaced_check(a, {{0.3, 0.7}}, 1.0);
    EXPECT_TRUE(one.pass);
    const auto zero = well_spaced_check(LatticeArray(2, 20), {{0.1, 0.1}, {0.6, 0.6}}, 0.5);
    EXPECT_EQ(zero.lhs, 0.0);
    EXPECT_TRUE(zero.pass);
    EXPECT_THROW(well_spaced_check(a, {{0.1, 0.1}, {0.15, 0.12}}, 0.1), DomainError);
    // Torus distance wraps: 0.02 and 0.98 are 0.04 apart.
    EXPECT_THROW(well_spaced_check(a, {{0.02, 0.5}, {0.98, 0.52}}, 0.05), DomainError);
}

TEST(WellSpaced, GridPointsPass) {
    std::mt19937_64 rng(4);
    for (int it = 0; it < 10; ++it) {
        const auto a = random_array(rng, 2, 15);
        std::vector<std::vector<double>> pts;
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j) pts.push_back({i / 10.0, j / 10.0});
        EXPECT_TRUE(well_spaced_check(a, pts, 0.1, 2).pass);
    }
}

TEST(Farey, Examples) {
    EXPECT_EQ(farey_fractions(3).size(), 4u);
    EXPECT_EQ(farey_min_spacing(2), boost::rational<i64>(1, 2));
    EXPECT_EQ(farey_min_spacing(3), boost::rational<i64>(1, 6));
    EXPECT_EQ(farey_min_spacing(7), boost::rational<i64>(1, 42));
    std::mt19937_64 rng(5);
    const auto a = random_array(rng, 1, 100);
    const auto r = farey_check(a, 1);
    EXPECT_NEAR(r.lhs, std::norm(trig_poly(a, {0.0})), 1e-9);
    EXPECT_TRUE(r.pass);
    EXPECT_TRUE(farey_check(random_array(rng, 2, 100), 10, 2).pass);
    EXPECT_THROW(farey_check(a, 11), DomainError);
}

TEST(SieveSystem, ResidueHandling) {
    auto s = SieveSystem::make(2, 10);
    s.set_residues(2, {{0, 0}, {1, 1}, {2, 2}});
    EXPECT_DOUBLE_EQ(s.alpha(2), 0.5);
    EXPECT_DOUBLE_EQ(sieve_h(s, 2), 1.0);
    EXPECT_EQ(sieve_h_exact(s, 2), boost::rational<i64>(1));
    EXPECT_EQ(sieve_h_exact(s, 4), boost::rational<i64>(0));
    EXPECT_THROW(s.set_residues(2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}), DomainError);
    EXPECT_THROW(s.set_residues(4, {{0, 0}}), DomainError);
    s.set_residues(2, {});
    EXPECT_TRUE(s.omega.empty());
}

TEST(SieveSystem, EmptySieveBoundCoversTheBox) {
    const auto s = SieveSystem::make(2, 50);
    const auto b = sieve_bound(s);
    EXPECT_DOUBLE_EQ(b.h_sum, 1.0);
    EXPECT_DOUBLE_EQ(b.bound, std::pow(2.0 * 101, 2));
    EXPECT_EQ(sifted_count(s), 101u * 101u);
    EXPECT_GE(b.bound, 101.0 * 101.0);
    // The literal (2N)^k form undercounts the 2N + 1 points per side.
    EXPECT_DOUBLE_EQ(b.literal_bound, 100.0 * 100.0);
}

TEST(SieveSystem, SiftedCountMatchesDirectSweep) {
    const i64 N = 40;
    const auto s = binary_form_system(N, 4, 1, 1, 1, -1, 13);
    const std::vector<Polynomial> polys{{{1, 2, 0}, {4, 0, 2}}, {{1, 1, 0}, {1, 0, 1}}, {{1, 1, 0}, {-1, 0, 1}}};
    u64 want = 0;
    for (i64 x = -N; x <= N; ++x)
        for (i64 y = -N; y <= N; ++y) {
            bool ok = true;
            for (i64 q : {2, 3, 5, 7, 11, 13})
                for (const auto& f : polys)
                    if (eval_mod(f, ((x % q) + q) % q, ((y % q) + q) % q, q) == 0) ok = false;
            want += ok;
        }
    EXPECT_EQ(sifted_count(s, 1), want);
    EXPECT_EQ(sifted_count(s, 4), want);
    EXPECT_GE(sieve_bound(s).bound, static_cast<double>(want));
}

TEST(SieveSystem, PolynomialZeroSets) {
    auto s = SieveSystem::make(1, 100);
    s.set_polynomials(7, {{{1, 2, 0}, {-2, 0, 0}}});  // u^2 = 2 mod 7 at u = 3, 4
    ASSERT_EQ(s.omega.at(7).size(), 2u);
    EXPECT_EQ(s.omega.at(7)[0].first, 3);
    EXPECT_EQ(s.omega.at(7)[1].first, 4);
    u64 want = 0;
    for (i64 x = -100; x <= 100; ++x) want += (((x % 7) + 7) % 7 != 3 && ((x % 7) + 7) % 7 != 4);
    EXPECT_EQ(sifted_count(s), want);
}

TEST(SieveSystem, CapacityGuard) {
    EXPECT_THROW(sifted_count(SieveSystem::make(2, 1001)), CapacityError);
}

TEST(Rankin, Examples) {
    const auto empty = rankin_lower_bound_check(SieveSystem::make(2, 1000));
    EXPECT_EQ(empty.status, RankinStatus::Pass);
    EXPECT_DOUBLE_EQ(empty.lhs, 1.0);
    EXPECT_DOUBLE_EQ(empty.rhs, 0.5);
    auto heavy = SieveSystem::make(1, 50);
    heavy.set_residues(2, {{0, 0}});
    heavy.set_residues(3, {{0, 0}, {1, 0}});
    EXPECT_EQ(rankin_lower_bound_check(heavy).status, RankinStatus::Inconclusive);  // 0.5 log 2 + (2/3) log 3 > log(50)/4
    EXPECT_STREQ(to_string(RankinStatus::Inconclusive), "inconclusive");
}
