#include <gtest/gtest.h>

#include <random>

#include "bqp/gowers.hpp"
#include "bqp/oracles.hpp"

using namespace bqp;

namespace {

ArithFunction random_function(std::mt19937_64& rng, i64 lo, size_t len) {
    std::uniform_real_distribution<double> d(-1, 1);
    ArithFunction f(lo, std::vector<cplx>(len));
    for (auto& v : f.values) {
        cplx z(d(rng), d(rng));
        v = std::abs(z) > 1 ? z / std::abs(z) : z;
    }
    return f;
}

// sum over x, h in Z^k of prod_{w in {0,1}^k} C^{|w|} f(x + w.h), for small supports.
double cube_power(const ArithFunction& f, int k) {
    const i64 L = static_cast<i64>(f.size());
    std::vector<i64> h(static_cast<size_t>(k), -L + 1);
    cplx s = 0;
    for (;;) {
        for (i64 x = f.lo - 2 * L * k; x < f.hi() + 2 * L * k; ++x) {
            cplx p = 1;
            for (int w = 0; w < (1 << k) && p != cplx{}; ++w) {
                i64 off = 0;
                for (int j = 0; j < k; ++j)
                    if (w >> j & 1) off += h[static_cast<size_t>(j)];
                const cplx v = f(x + off);
                p *= std::popcount(static_cast<unsigned>(w)) % 2 ? std::conj(v) : v;
            }
            s += p;
        }
        int j = 0;
        for (; j < k; ++j) {
            if (++h[static_cast<size_t>(j)] < L) break;
            h[static_cast<size_t>(j)] = -L + 1;
        }
        if (j == k) break;
    }
    return s.real();
}

// Pair form of the Gowers-Peluse norm with one or two integer measures, written out directly.
double gp_direct(const ArithFunction& f, i64 N, const std::vector<SymmetricMeasure>& ms) {
    const i64 R = f.size() ? static_cast<i64>(f.size()) + 2 * (ms[0].max_abs_units() + (ms.size() > 1 ? ms[1].max_abs_units() : 0)) : 0;
    cplx s = 0;
    for (i64 x = f.lo - R; x < f.hi() + R; ++x) {
        if (ms.size() == 1) {
            cplx inner = 0;
            for (auto [a, w] : ms[0].atoms) inner += w * f(x + a);
            s += std::norm(inner);
            continue;
        }
        for (auto [a, wa] : ms[0].atoms)
            for (auto [b, wb] : ms[0].atoms)
                for (auto [c, wc] : ms[1].atoms)
                    for (auto [d, wd] : ms[1].atoms)
                        s += wa * wb * wc * wd * f(x + a + c) * std::conj(f(x + b + c)) * std::conj(f(x + a + d)) *
                             f(x + b + d);
    }
    return s.real() / static_cast<double>(N);
}

}  // namespace

TEST(GowersNorm, IntervalOfFour) {
    EXPECT_NEAR(uk_norm_power(ArithFunction::interval(4), 2), 44.0, 1e-9);
    EXPECT_NEAR(oracle::u2_power(ArithFunction::interval(4)), 44.0, 1e-12);
}

TEST(GowersNorm, IntervalNormalizesToOne) {
    for (i64 N : {1, 7, 64, 300})
        for (int k : {2, 3}) EXPECT_NEAR(uk_norm_normalized(ArithFunction::interval(N), k, N), 1.0, 1e-12) << N << " " << k;
}

TEST(GowersNorm, MatchesDefinitionalSums) {
    std::mt19937_64 rng(5);
    for (int it = 0; it < 30; ++it) {
        const auto f = random_function(rng, static_cast<i64>(rng() % 21) - 10, 1 + rng() % 24);
        const double u2 = oracle::u2_power(f), u3 = oracle::u3_power(f);
        EXPECT_NEAR(uk_norm_power(f, 2), u2, 1e-9 * std::max(1.0, u2));
        EXPECT_NEAR(uk_norm_power(f, 3), u3, 1e-9 * std::max(1.0, u3));
    }
    for (int it = 0; it < 5; ++it) {
        const auto f = random_function(rng, 0, 1 + rng() % 5);
        const double u4 = cube_power(f, 4);
        EXPECT_NEAR(uk_norm_power(f, 4), u4, 1e-9 * std::max(1.0, u4));
    }
}

TEST(GowersNorm, InvariantUnderShiftConjugationAndLinearPhase) {
    std::mt19937_64 rng(8);
    const auto f = random_function(rng, 0, 40);
    const double base = uk_norm_power(f, 2);
    ArithFunction g = f;
    g.lo += 17;
    EXPECT_NEAR(uk_norm_power(g, 2), base, 1e-9 * base);
    EXPECT_NEAR(uk_norm_power(f.conj(), 2), base, 1e-9 * base);
    EXPECT_NEAR(uk_norm_power(f.times_phase(0.3137), 2), base, 1e-9 * base);
    const double b3 = uk_norm_power(f, 3);
    EXPECT_NEAR(uk_norm_power(f.times_phase(0.271), 3), b3, 1e-9 * b3);
}

TEST(GowersNorm, RejectsBadOrder) {
    EXPECT_THROW(uk_norm_power(ArithFunction::interval(3), 1), DomainError);
    EXPECT_THROW(uk_norm_power(ArithFunction::interval(3), 6), DomainError);
    EXPECT_EQ(uk_norm_power(ArithFunction{}, 2), 0.0);
}

TEST(Differences, Examples) {
    const auto f = ArithFunction(0, {cplx{1, 0}, cplx{0, 1}, cplx{2, 0}});
    const auto d = difference(f, 1);
    EXPECT_EQ(d.lo, 0);
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d(0), cplx(0, -1));  // 1 * conj(i)
    EXPECT_EQ(d(1), cplx(0, 2));   // i * 2
    EXPECT_TRUE(difference(f, 3).empty());
    EXPECT_TRUE(difference(f, 1, 2).empty());
    EXPECT_EQ(difference_pair(f, 1, 0)(0), cplx(0, 1));
}

TEST(Measures, Validation) {
    EXPECT_THROW(SymmetricMeasure::from_atoms({{1, 1.0}}), DomainError);
    EXPECT_THROW(SymmetricMeasure::from_atoms({{0, 0.5}}), DomainError);
    EXPECT_THROW(SymmetricMeasure::from_atoms({{0, 1.0}}, 3), DomainError);
    EXPECT_THROW(SymmetricMeasure::from_atoms({{-1, 0.7}, {1, 0.3}}), DomainError);
    const auto m = SymmetricMeasure::from_atoms({{-2, 0.5}, {2, 0.5}}, 4);
    EXPECT_EQ(m.den, 2);  // reduced while offsets stay integral
    EXPECT_DOUBLE_EQ(m.max_abs(), 0.5);
}

TEST(Measures, UniformIntervalL2) {
    for (i64 N : {0, 1, 5, 100}) EXPECT_NEAR(l2_norm_sq(SymmetricMeasure::uniform_interval(N)), 1.0 / (2 * N + 1), 1e-15);
}

TEST(Measures, ConvolutionExamples) {
    const auto pm1 = SymmetricMeasure::uniform_multiset({-1, 1});
    const auto sq = conv_power(pm1, 2);
    ASSERT_EQ(sq.atoms.size(), 3u);
    EXPECT_DOUBLE_EQ(sq.mass_at(-2), 0.25);
    EXPECT_DOUBLE_EQ(sq.mass_at(0), 0.5);
    EXPECT_DOUBLE_EQ(sq.mass_at(2), 0.25);
    const auto d0 = conv_power(pm1, 0);
    EXPECT_DOUBLE_EQ(d0.mass_at(0), 1.0);
}

TEST(Measures, FftConvolutionMatchesDirect) {
    std::mt19937_64 rng(21);
    for (int it = 0; it < 20; ++it) {
        auto make = [&] {
            std::vector<std::pair<i64, double>> a;
            const i64 R = 1 + static_cast<i64>(rng() % 30);
            double tot = 0;
            for (i64 x = 0; x <= R; ++x) {
                if (rng() % 3) continue;
                const double w = 1 + static_cast<double>(rng() % 100);
                a.emplace_back(x, w);
                if (x) a.emplace_back(-x, w);
                tot += x ? 2 * w : w;
            }
            if (a.empty()) a.emplace_back(0, tot = 1);
            for (auto& [x, w] : a) w /= tot;
            return SymmetricMeasure::from_atoms(a, i64{1} << (rng() % 3));
        };
        const auto a = make(), b = make();
        const auto c1 = convolve(a, b), c2 = convolve_fft(a, b);
        ASSERT_EQ(c1.den, c2.den);
        for (auto [x, w] : c1.atoms) EXPECT_NEAR(c2.mass_at(x), w, 1e-12);
        for (auto [x, w] : c2.atoms) EXPECT_NEAR(c1.mass_at(x), w, 1e-12);
    }
}

TEST(GowersPeluse, DiracMeasureGivesMeanSquare) {
    std::mt19937_64 rng(2);
    const auto f = random_function(rng, 1, 30);
    double l2 = 0;
    for (auto v : f.values) l2 += std::norm(v);
    EXPECT_NEAR(gp_norm_power(f, 30, {SymmetricMeasure::delta0()}).value, l2 / 30, 1e-12);
}

TEST(GowersPeluse, MatchesDirectPairForm) {
    std::mt19937_64 rng(3);
    for (int it = 0; it < 20; ++it) {
        const i64 N = 10 + static_cast<i64>(rng() % 20);
        const auto f = random_function(rng, -static_cast<i64>(rng() % 5), static_cast<size_t>(N));
        const auto m1 = SymmetricMeasure::uniform_interval(static_cast<i64>(rng() % 4));
        const auto m2 = SymmetricMeasure::uniform_multiset({-3, -1, 1, 3});
        const double one = gp_norm_power(f, N, {m1}).value, two = gp_norm_power(f, N, {m1, m2}).value;
        EXPECT_NEAR(one, gp_direct(f, N, {m1}), 1e-10);
        EXPECT_NEAR(two, gp_direct(f, N, {m1, m2}), 1e-10);
    }
}

TEST(GowersPeluse, HalfIntegerMeasureRunsOverTheHalfGrid) {
    // x ranges over (1/2)Z: equal atoms give ||f||_2^2 twice and the pair (-1/2, 1/2)
    // links consecutive integers, so the value is (||f||_2^2 + Re sum f(y) conj f(y+1)) / 2N.
    std::mt19937_64 rng(4);
    const auto f = random_function(rng, 1, 20);
    const auto half = SymmetricMeasure::from_atoms({{-1, 0.5}, {1, 0.5}}, 2);
    double l2 = 0, c = 0;
    for (i64 y = f.lo; y < f.hi(); ++y) {
        l2 += std::norm(f(y));
        c += (f(y) * std::conj(f(y + 1))).real();
    }
    const auto g = gp_norm_power(f, 20, {half});
    EXPECT_NEAR(g.value, (l2 + c) / 40, 1e-12);
    EXPECT_LT(g.rel_diff, 1e-12);
}

TEST(GowersPeluse, NonNegativeAndZeroForZero) {
    std::mt19937_64 rng(6);
    const auto mu = SymmetricMeasure::uniform_multiset({-2, -1, 1, 2});
    for (int it = 0; it < 20; ++it) EXPECT_GE(gp_norm_power(random_function(rng, 0, 25), 25, {mu, mu}).value, 0.0);
    EXPECT_EQ(gp_norm_power(ArithFunction(0, std::vector<cplx>(5)), 5, {mu}).value, 0.0);
}

TEST(GowersPeluse, InnerProductEqualityCase) {
    std::mt19937_64 rng(7);
    const auto f = random_function(rng, 0, 20);
    const auto mu = SymmetricMeasure::uniform_interval(2);
    const auto r = gp_inner_product({f, f}, 20, {mu});
    EXPECT_NEAR(std::abs(r.inner), r.norm_product, 1e-12);
    EXPECT_TRUE(r.holds);
    EXPECT_THROW(gp_inner_product({f}, 20, {mu}), DomainError);
}

TEST(GowersPeluse, MonotonicityOnInterval) {
    const auto f = ArithFunction::interval(40);
    const auto mu = SymmetricMeasure::uniform_interval(5);
    const auto r = gp_monotonicity_check(f, 40, {mu, mu});
    EXPECT_TRUE(r.pass);
    EXPECT_GT(r.lhs, 2 * r.rhs);
    EXPECT_TRUE(gp_monotonicity_check(ArithFunction(1, std::vector<cplx>(10)), 10, {mu}).pass);
    EXPECT_THROW(gp_monotonicity_check(ArithFunction::interval(50), 40, {mu}), DomainError);
}

TEST(U2FromGp, IntervalPassesAndConcentratedMeasureIsRejected) {
    const i64 N = 60;
    const auto mu = SymmetricMeasure::uniform_interval(N);
    const auto r = u2_from_gp_chain(ArithFunction::interval(N), N, mu, 1.0);
    EXPECT_TRUE(r.pass);
    EXPECT_GT(r.u2_power, r.bound);
    EXPECT_TRUE(u2_from_gp_chain(ArithFunction(1, std::vector<cplx>(5)), N, mu, 1.0).pass);
    EXPECT_THROW(u2_from_gp_chain(ArithFunction::interval(N), N, SymmetricMeasure::delta0(), 1.0), DomainError);
}

TEST(ProgressionSum, ConstantFunctionMeetsHypothesis) {
    const i64 N = 200;
    const auto f = ArithFunction::indicator(-N, N);
    const auto r = progression_sum_experiment(f, N, 1, 1, 1, {-100, 100}, {-100, 100}, 0.5);
    EXPECT_TRUE(r.ratio_ok);
    EXPECT_TRUE(r.gcd_ok);
    EXPECT_TRUE(r.intervals_ok);
    EXPECT_DOUBLE_EQ(r.hypothesis_value, 201.0 * 201.0);
    EXPECT_TRUE(r.hypothesis_holds);
}

TEST(GraphSystem, DuplicationExamples) {
    const auto g = graph_duplicate(GraphSystem::vertex_complete(1), 1, 1);
    EXPECT_EQ(g, GraphSystem::edge_complete(1, 2));
    const auto h = graph_duplicate(GraphSystem::vertex_complete(2), 1, 1);
    EXPECT_EQ(h.t, 2);
    EXPECT_TRUE(h.V[0].empty());
    EXPECT_EQ(h.E[0], (std::set<std::pair<int, int>>{{1, 2}}));
    EXPECT_EQ(h.V[1], (std::set<int>{1, 2}));
    EXPECT_TRUE(h.valid());
    EXPECT_THROW(graph_duplicate(g, 1, 1), DomainError);
    EXPECT_EQ(graph_enlarge(GraphSystem::edge_complete(1, 3), 1, {{1, 2}}), GraphSystem::edge_complete(1, 3));
    EXPECT_THROW(graph_enlarge(g, 1, {{1, 3}}), DomainError);
}

TEST(Concat, IdentitiesHoldAndLevelsArePositive) {
    std::mt19937_64 rng(12);
    const auto f = random_function(rng, 1, 16);
    const std::vector<std::vector<SymmetricMeasure>> fam{
        {SymmetricMeasure::uniform_interval(1), SymmetricMeasure::uniform_multiset({-2, 2})}};
    const auto r = concat_experiment(f, 16, fam, 2, 2);
    EXPECT_TRUE(r.identities_pass);
    ASSERT_EQ(r.levels.size(), 2u);
    for (const auto& l : r.levels) EXPECT_GE(l.average, 0.0);
    EXPECT_THROW(concat_experiment(f, 16, fam, 3), DomainError);
}

TEST(Nesting, IntervalIsOneAtBothOrders) {
    const auto r = gowers_nesting_report(ArithFunction::interval(50), 50);
    EXPECT_NEAR(r.u2, 1.0, 1e-12);
    EXPECT_NEAR(r.u3, 1.0, 1e-12);
    EXPECT_NEAR(r.ratio, 1.0, 1e-12);
    EXPECT_EQ(gowers_nesting_report(ArithFunction(1, std::vector<cplx>(8)), 8).ratio, 0.0);
}
