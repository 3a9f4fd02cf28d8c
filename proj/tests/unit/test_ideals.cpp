#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "bqp/ideals.hpp"

using namespace bqp;

namespace {

std::vector<cplx> random_weights(size_t n, u64 seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1, 1);
    std::vector<cplx> w(n);
    for (auto& v : w) v = {d(rng), d(rng)};
    return w;
}

}  // namespace

TEST(PrimeIdealTable, GaussianUpToTen) {
    const auto f = field_invariants(4);
    const auto tags = enumerate_prime_ideals(f, 10);
    ASSERT_EQ(tags.size(), 4u);
    EXPECT_EQ(tags[0].norm, 2u);
    EXPECT_EQ(tags[0].kind, PrimeKind::Ramified);
    EXPECT_EQ(tags[1].norm, 5u);
    EXPECT_EQ(tags[1].kind, PrimeKind::Split);
    EXPECT_FALSE(tags[1].conjugate);
    EXPECT_EQ(tags[2].norm, 5u);
    EXPECT_TRUE(tags[2].conjugate);
    EXPECT_EQ(tags[3].norm, 9u);
    EXPECT_EQ(tags[3].kind, PrimeKind::Inert);
    for (size_t i = 1; i < tags.size(); ++i) EXPECT_LT(tags[i - 1].order_key(), tags[i].order_key());
}

TEST(PrimeIdealTable, BelowTwoIsEmpty) {
    const auto f = field_invariants(4);
    EXPECT_TRUE(enumerate_prime_ideals(f, 1).empty());
}

TEST(PrimeIdealTable, RootsAnnihilateTheIdeal) {
    // r = sqrt(-n) mod the ideal, so r^2 + n = 0 mod p for every degree-one prime.
    for (i64 n : {4, 5, 6, 7, 10, 15, 23}) {
        const auto f = field_invariants(n);
        for (const auto& t : enumerate_prime_ideals(f, 3000)) {
            if (t.kind == PrimeKind::Inert) continue;
            const u64 p = t.p;
            EXPECT_EQ((mulmod(t.root, t.root, p) + static_cast<u64>(n) % p) % p, 0u) << n << " " << p;
        }
    }
}

TEST(ElementFactorizer, Examples) {
    const auto f = field_invariants(4);
    PrimeIdealTable t(f, 100);
    ElementFactorizer fz(t);
    const auto three = fz.factor(3, 0);
    ASSERT_EQ(three.factors.size(), 1u);
    EXPECT_EQ(t[three.factors[0].tag].kind, PrimeKind::Inert);
    EXPECT_EQ(three.factors[0].exp, 1u);
    const auto a = fz.factor(1, 1), b = fz.factor(1, -1);  // 1 +- 2i
    EXPECT_EQ(a.norm, 5u);
    EXPECT_EQ(b.norm, 5u);
    EXPECT_FALSE(a == b);
    EXPECT_TRUE(fz.factor(1, 0).is_unit());
    EXPECT_THROW(fz.factor(0, 0), DomainError);
}

TEST(ElementFactorizer, IsMultiplicative) {
    for (i64 n : {3, 4, 5, 7, 12, 14, 20}) {
        const auto f = field_invariants(n);
        PrimeIdealTable t(f, 2'000'000);
        ElementFactorizer fz(t);
        std::mt19937_64 rng(static_cast<u64>(n));
        std::uniform_int_distribution<i64> d(-6, 6);
        for (int it = 0; it < 300; ++it) {
            const i64 x1 = d(rng), y1 = d(rng), x2 = d(rng), y2 = d(rng);
            if ((x1 == 0 && y1 == 0) || (x2 == 0 && y2 == 0)) continue;
            const i64 x3 = x1 * x2 - n * y1 * y2, y3 = x1 * y2 + x2 * y1;
            const auto p = ideal_mul(fz.factor(x1, y1), fz.factor(x2, y2));
            EXPECT_TRUE(p == fz.factor(x3, y3)) << n << ": " << x1 << "," << y1 << " * " << x2 << "," << y2;
            EXPECT_EQ(ideal_class(t, p), 0u);
        }
    }
}

TEST(PrincipalIndex, AuditIsClean) {
    for (i64 n : {4, 5, 6, 12}) {
        const auto f = field_invariants(n);
        PrimeIdealTable t(f, 20'000);
        const auto idx = build_principal_index(t, 20'000, 1);
        const auto a = audit_principal_index(t, idx);
        EXPECT_EQ(a.lattice_points, a.registered) << n;
        EXPECT_EQ(a.class_violations, 0u) << n;
        EXPECT_EQ(a.norm_violations, 0u) << n;
    }
}

TEST(PrincipalIndex, ThreadCountDoesNotChangeIndex) {
    const auto f = field_invariants(5);
    PrimeIdealTable t(f, 50'000);
    const auto a = build_principal_index(t, 50'000, 1), b = build_principal_index(t, 50'000, 4);
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        EXPECT_TRUE(a.entries()[i].ideal == b.entries()[i].ideal);
        EXPECT_EQ(a.entries()[i].gens, b.entries()[i].gens);
    }
}

TEST(PrincipalIndex, CorruptedCacheIsRebuilt) {
    const auto f = field_invariants(4);
    PrimeIdealTable t(f, 5000);
    const auto path = (std::filesystem::temp_directory_path() / "bqp_idx_test.bin").string();
    std::filesystem::remove(path);
    bool rebuilt = false;
    const auto first = load_or_build_principal_index(t, 5000, path, 1, &rebuilt);
    EXPECT_TRUE(rebuilt);
    load_or_build_principal_index(t, 5000, path, 1, &rebuilt);
    EXPECT_FALSE(rebuilt);
    {
        std::fstream io(path, std::ios::in | std::ios::out | std::ios::binary);
        io.seekp(static_cast<std::streamoff>(std::filesystem::file_size(path) / 2));
        io.put('\x5a');
        io.seekp(static_cast<std::streamoff>(std::filesystem::file_size(path) / 2 + 1));
        io.put('\xa5');
    }
    const auto again = load_or_build_principal_index(t, 5000, path, 1, &rebuilt);
    EXPECT_TRUE(rebuilt);
    EXPECT_EQ(again.size(), first.size());
    // A cache for a different bound is not reused.
    load_or_build_principal_index(t, 4000, path, 1, &rebuilt);
    EXPECT_TRUE(rebuilt);
    std::filesystem::remove(path);
}

TEST(IdealSet, SizeMatchesIdealCount) {
    for (i64 n : {4, 5, 6, 10, 23}) {
        const auto f = field_invariants(n);
        PrimeIdealTable t(f, 3000);
        IdealSet s(t, 3000);
        EXPECT_EQ(s.size(), ideal_count(f, 3000).count) << n;
        EXPECT_TRUE(s.ideal(0).is_unit());
        for (size_t i = 0; i < s.size(); ++i) {
            EXPECT_EQ(s.find(s.ideal(i)), i);
            if (i) {
                EXPECT_LE(s.norm(i - 1), s.norm(i));
            }
        }
    }
}

TEST(IdealSet, GaussianUpToFive) {
    const auto f = field_invariants(4);
    PrimeIdealTable t(f, 5);
    IdealSet s(t, 5);
    ASSERT_EQ(s.size(), 5u);  // (1), p2, p2^2, p5, p5'
    EXPECT_EQ(s.norm(0), 1u);
    EXPECT_EQ(s.norm(1), 2u);
    EXPECT_EQ(s.norm(2), 4u);
    EXPECT_EQ(s.norm(3), 5u);
    EXPECT_EQ(s.norm(4), 5u);
}

TEST(LambdaK, Examples) {
    const auto f = field_invariants(4);
    PrimeIdealTable t(f, 100);
    ElementFactorizer fz(t);
    EXPECT_NEAR(lambda_K(t, fz.factor(3, 0)), std::log(9.0), 1e-15);
    EXPECT_NEAR(lambda_K(t, fz.factor(1, 1)), std::log(5.0), 1e-15);
    EXPECT_NEAR(lambda_K(t, fz.factor(0, 1)), std::log(2.0), 1e-15);  // (2i) = p2^2
    EXPECT_EQ(lambda_K(t, fz.factor(5, 0)), 0.0);                     // p5 times its conjugate
    EXPECT_EQ(lambda_K(t, fz.factor(1, 0)), 0.0);
}

TEST(WeightedSumS, AllPrimesSieveEverything) {
    const auto f = field_invariants(4);
    PrimeIdealTable t(f, 200);
    IdealSet s(t, 200);
    const auto w = random_weights(s.size(), 3);
    auto all = [](size_t) { return true; };
    // I(2) contains every prime ideal, so S is the full sum.
    cplx full = 0;
    for (auto v : w) full += v;
    EXPECT_LT(std::abs(weighted_sum_S(s, w, all, UpSet::from_norm(t, 2)) - full), 1e-12);
    // Above X only the unit ideal survives.
    EXPECT_EQ(weighted_sum_S(s, w, all, UpSet::from_norm(t, 201)), w[0]);
}

TEST(Buchstab, EqualBoundsHaveEmptyMiddleAndPairs) {
    const auto f = field_invariants(4);
    PrimeIdealTable t(f, 5000);
    IdealSet s(t, 5000);
    const auto w = random_weights(s.size(), 7);
    const auto r = buchstab_check(s, w, 30, 30);
    EXPECT_EQ(r.middle, cplx{});
    EXPECT_EQ(r.pairs, cplx{});
    EXPECT_LT(r.residual, 1e-15);
}

TEST(Buchstab, ZeroWeightsGiveZero) {
    const auto f = field_invariants(5);
    PrimeIdealTable t(f, 5000);
    IdealSet s(t, 5000);
    const auto r = buchstab_check(s, std::vector<cplx>(s.size()), 5, 40);
    EXPECT_EQ(r.lhs, cplx{});
    EXPECT_EQ(r.rhs, cplx{});
}

TEST(Buchstab, IdentityHoldsForRandomWeights) {
    std::mt19937_64 rng(99);
    for (i64 n : {4, 5, 6, 12, 14}) {
        const auto f = field_invariants(n);
        PrimeIdealTable t(f, 20'000);
        IdealSet s(t, 20'000);
        for (int it = 0; it < 4; ++it) {
            const auto w = random_weights(s.size(), rng());
            const double u = 2 + static_cast<double>(rng() % 30);
            const double z = u + static_cast<double>(rng() % 60);
            const auto r = buchstab_check(s, w, u, z);
            EXPECT_LT(r.residual, 1e-9) << n << " " << u << " " << z;
            if (r.sieved_checked) {
                EXPECT_LT(r.sieved_residual, 1e-9);
            }
        }
        const auto r = buchstab_check(s, random_weights(s.size(), 1), 10, 40);
        ASSERT_TRUE(r.sieved_checked);  // 40^3 > 2e4
        EXPECT_LT(r.sieved_residual, 1e-9);
    }
}

TEST(Buchstab, RejectsBadBounds) {
    const auto f = field_invariants(4);
    PrimeIdealTable t(f, 100);
    IdealSet s(t, 100);
    const auto w = random_weights(s.size(), 1);
    EXPECT_THROW(buchstab_check(s, w, 20, 10), DomainError);
    EXPECT_THROW(buchstab_check(s, w, 1, 10), DomainError);
    EXPECT_THROW(buchstab_check(s, std::vector<cplx>(3), 2, 10), DomainError);
}

TEST(Dfi, ResidualsVanish) {
    for (i64 n : {4, 5}) {
        const auto f = field_invariants(n);
        PrimeIdealTable t(f, 100'000);
        IdealSet s(t, 100'000);
        const auto w = random_weights(s.size(), static_cast<u64>(n));
        const auto prm = dfi_params(1e5, 1, 1);
        EXPECT_TRUE(prm.clamped);
        const auto r = dfi_decomposition(s, w, prm);
        EXPECT_LT(r.type1_residual, 1e-9);
        EXPECT_LT(r.levels_residual, 1e-9);
        EXPECT_LT(r.split_residual, 1e-9);
        EXPECT_LT(r.large_p_residual, 1e-9);
        ASSERT_EQ(r.levels.size(), static_cast<size_t>(prm.M_eff + 1));
        EXPECT_EQ(r.levels.front(), prm.y_eff);
        EXPECT_EQ(r.levels.back(), prm.u_eff);
        for (size_t m = 1; m < r.levels.size(); ++m) EXPECT_LT(r.levels[m], r.levels[m - 1]);
    }
}

TEST(Dfi, ParameterFormulas) {
    const auto p = dfi_params(1e12, 2, 3);
    const double L = std::log(1e12);
    EXPECT_DOUBLE_EQ(p.B, 8);
    EXPECT_DOUBLE_EQ(p.u, L * L * L);
    EXPECT_DOUBLE_EQ(p.y, std::pow(1e12, 0.375));
    EXPECT_DOUBLE_EQ(p.D, 1e6 / (L * L * L));
}

TEST(ClassGroupCharacters, AreHomomorphisms) {
    for (i64 n = 1; n <= 60; ++n) {
        const auto f = field_invariants(n);
        const auto h = static_cast<std::uint32_t>(f.class_number);
        const auto chars = class_group_characters(f);
        ASSERT_EQ(chars.size(), h) << n;
        for (const auto& chi : chars)
            for (std::uint32_t a = 0; a < h; ++a)
                for (std::uint32_t b = 0; b < h; ++b) EXPECT_EQ(chi[f.mul(a, b)], (chi[a] + chi[b]) % h) << n;
        for (std::uint32_t i = 0; i < h; ++i)
            for (std::uint32_t j = i + 1; j < h; ++j) EXPECT_NE(chars[i], chars[j]) << n;
    }
}

TEST(Psi, SmallestCase) {
    const auto f = field_invariants(4);
    EXPECT_NEAR(psi_prime_sum(f, 2, 0).value.real(), std::log(2.0), 1e-15);
}

TEST(Psi, MatchesSumOverEnumeratedIdeals) {
    for (i64 n : {5, 6, 14, 17}) {
        const auto f = field_invariants(n);
        const u64 X = 20'000;
        PrimeIdealTable t(f, X);
        IdealSet s(t, X);
        const auto chars = class_group_characters(f);
        const auto h = static_cast<std::uint32_t>(f.class_number);
        for (size_t k = 0; k < chars.size(); ++k) {
            cplx want = 0;
            for (size_t i = 0; i < s.size(); ++i) {
                const auto a = s.ideal(i);
                const double lk = lambda_K(t, a);
                if (lk != 0) want += lk * root_of_unity(chars[k][ideal_class(t, a)], h);
            }
            EXPECT_LT(std::abs(psi_prime_sum(f, X, k).value - want), 1e-8) << n << " " << k;
        }
    }
}
