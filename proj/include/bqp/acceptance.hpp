#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "bqp/commands.hpp"
#include "bqp/oracles.hpp"

namespace bqp::acceptance {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    json measured;
    std::string detail;
    double runtime_s = 0;
};

inline json to_json(const CriterionResult& r) {
    return {{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"measured", r.measured}, {"detail", r.detail}, {"runtime_s", r.runtime_s}};
}

namespace detail {

// Uniform double in [0, 1) from the top 53 bits; independent of the library's distributions.
inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline i64 uniform_int(std::mt19937_64& rng, i64 lo, i64 hi) {
    return lo + static_cast<i64>(rng() % static_cast<u64>(hi - lo + 1));
}

// Uniform in the closed unit disc.
inline cplx disc(std::mt19937_64& rng) {
    return std::polar(std::sqrt(unit(rng)), 2 * std::numbers::pi * unit(rng));
}

inline ArithFunction random_function(std::mt19937_64& rng, i64 lo, i64 len) {
    std::vector<cplx> v(static_cast<size_t>(len));
    for (auto& x : v) x = disc(rng);
    return {lo, std::move(v)};
}

// Symmetric probability measure on integers in [-R, R] with random masses.
inline SymmetricMeasure random_measure(std::mt19937_64& rng, i64 R) {
    std::vector<std::pair<i64, double>> raw;
    const i64 atoms = uniform_int(rng, 1, R + 1);
    double total = 0;
    std::vector<std::pair<i64, double>> half;
    for (i64 i = 0; i < atoms; ++i) {
        const i64 x = uniform_int(rng, 0, R);
        const double w = 0.05 + unit(rng);
        half.emplace_back(x, w);
        total += x == 0 ? w : 2 * w;
    }
    for (auto [x, w] : half) {
        raw.emplace_back(x, w / total);
        if (x != 0) raw.emplace_back(-x, w / total);
    }
    return SymmetricMeasure::from_atoms(std::move(raw), 1, 1e-9);
}

template <class Fn>
CriterionResult timed(int id, const std::string& name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    r.id = id;
    r.name = name;
    try {
        fn(r);
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("error: ") + e.what();
    }
    r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

// Direct and regularized kappa agree to 1e-3; the regularized value moves by at
// most 1e-8 from P = 1e7 to 2e7; each n within 2 minutes.
inline CriterionResult kappa_dual_route(unsigned threads, u64) {
    return detail::timed(1, "kappa dual-route", [&](CriterionResult& r) {
        bool ok = true;
        r.measured = json::array();
        for (i64 n : {4, 6, 10, 12, 16, 22}) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto inv = field_invariants(n);
            const auto d = kappa_direct(inv, 10'000'000ULL, threads);
            const auto g = kappa_regularized(inv, std::nullopt, 1e-8, threads);
            const auto g1 = kappa_regularized(inv, 10'000'000ULL, 1e-8, threads);
            const auto g2 = kappa_regularized(inv, 20'000'000ULL, 1e-8, threads);
            const double secs = detail::seconds_since(t0);
            const double diff = std::fabs(d.value - g.value), step = std::fabs(g2.value - g1.value);
            const bool pass = diff <= 1e-3 && step <= 1e-8 && secs <= 120;
            ok = ok && pass;
            r.measured.push_back({{"n", n}, {"direct", d.value}, {"regularized", g.value}, {"P", g.prime_limit},
                                  {"tail_bound", g.tail_bound}, {"route_diff", diff}, {"cauchy_step", step}, {"seconds", secs},
                                  {"pass", pass}});
        }
        r.pass = ok;
        r.detail = "|direct - regularized| <= 1e-3, |reg(2e7) - reg(1e7)| <= 1e-8, <= 120 s per n";
    });
}

inline CriterionResult class_number_formula(unsigned, u64) {
    return detail::timed(2, "class-number formula at Delta = -4", [&](CriterionResult& r) {
        const auto inv = field_invariants(4);
        const double L1 = l_one_chi(inv), err = std::fabs(L1 - std::numbers::pi / 4);
        // Independent route: mean of two consecutive partial sums of 1 - 1/3 + 1/5 - ..., error below 1/K^2.
        const u64 K = 10'000'000;
        KahanSumD s;
        for (u64 k = 1; k < K; k += 2) s.add(kronecker(inv.delta, static_cast<i64>(k)) / static_cast<double>(k));
        const double series = s.value() + 0.5 * kronecker(inv.delta, static_cast<i64>(K + 1)) / static_cast<double>(K + 1);
        const double series_err = std::fabs(series - L1);
        r.measured = {{"delta", inv.delta}, {"class_number", inv.class_number}, {"units", inv.unit_count}, {"L1", L1},
                      {"pi_over_4", std::numbers::pi / 4}, {"abs_error", err}, {"series", series}, {"series_error", series_err}};
        r.pass = inv.delta == -4 && err <= 1e-12 && series_err <= 1e-12;
        r.detail = "|L(1, chi_-4) - pi/4| <= 1e-12; Dirichlet series cross-check to 1e-12";
    });
}

inline CriterionResult buchstab_identities(unsigned, u64 seed) {
    return detail::timed(3, "exact Buchstab identities", [&](CriterionResult& r) {
        const auto inv = field_invariants(4);
        PrimeIdealTable t(inv, 10'000);
        IdealSet s(t, 10'000);
        double worst = 0, worst_sieved = 0;
        bool sieved = true;
        for (u64 i = 0; i < 50; ++i) {
            const auto w = cmd::ideal_weights(s, "random", splitmix64(seed + i));
            const auto b = buchstab_check(s, w, 20, 50);
            worst = std::max(worst, b.residual);
            sieved = sieved && b.sieved_checked;
            worst_sieved = std::max(worst_sieved, b.sieved_residual);
        }
        r.measured = {{"instances", 50}, {"ideals", s.size()}, {"max_buchstab_residual", worst},
                      {"max_sieved_residual", worst_sieved}, {"sieved_checked", sieved}};
        r.pass = sieved && worst <= 1e-9 && worst_sieved <= 1e-9;
        r.detail = "n=4, X=1e4, (u, z) = (20, 50), residuals relative to sum |w|";
    });
}

inline CriterionResult sigma_agreement(unsigned threads, u64) {
    return detail::timed(4, "sigma formula vs brute force", [&](CriterionResult& r) {
        const std::vector<u64> base{2, 3, 5, 7};
        u64 checked = 0, skipped = 0, mismatches = 0;
        json worked;
        for (i64 n : {4, 6, 10, 12}) {
            const auto inv = field_invariants(n);
            for (unsigned m1 = 0; m1 < 16; ++m1)
                for (unsigned m2 = 0; m2 < 16; ++m2) {
                    std::vector<u64> S1, S2;
                    for (unsigned i = 0; i < 4; ++i) {
                        if (m1 >> i & 1) S1.push_back(base[i]);
                        if (m2 >> i & 1) S2.push_back(base[i]);
                    }
                    const auto inst = make_sigma_instance(inv, S1, S2);
                    if (inst.D > kSigmaMaxD) {
                        ++skipped;
                        continue;
                    }
                    const Rational f = sigma_formula(inst);
                    const auto b = sigma_bruteforce(inst, threads);
                    ++checked;
                    if (f != b.sigma) ++mismatches;
                    if (n == 4 && m1 == 0 && m2 == 0)
                        worked = {{"sigma", to_string(f)}, {"brute_count", b.count}, {"agree", f == b.sigma}};
                }
        }
        r.measured = {{"instances", checked}, {"skipped_D_above_1e6", skipped}, {"mismatches", mismatches}, {"worked_case", worked}};
        r.pass = mismatches == 0 && checked > 0 && worked.value("sigma", "") == "2" && worked.value("brute_count", u64{0}) == 16;
        r.detail = "exact rational agreement, n in {4, 6, 10, 12}, S1, S2 subsets of {2, 3, 5, 7}, D <= 1e6";
    });
}

inline CriterionResult gowers_engine(unsigned threads, u64 seed) {
    return detail::timed(5, "Gowers engine vs definitional sums", [&](CriterionResult& r) {
        std::mt19937_64 rng(seed ^ 0x5555);
        double worst2 = 0, worst3 = 0;
        for (int i = 0; i < 200; ++i) {
            // Sizes skew small so the quartic U^3 oracle stays cheap; every 20th uses the full 128.
            const i64 len = i % 20 == 0 ? 128 : detail::uniform_int(rng, 1, 64);
            const auto f = detail::random_function(rng, detail::uniform_int(rng, -64, 64), len);
            const double b2 = oracle::u2_power(f), b3 = oracle::u3_power(f);
            const double f2 = uk_norm_power(f, 2, threads), f3 = uk_norm_power(f, 3, threads);
            worst2 = std::max(worst2, std::fabs(f2 - b2) / std::max(b2, 1e-300));
            worst3 = std::max(worst3, std::fabs(f3 - b3) / std::max(b3, 1e-300));
        }
        const double u2_interval = uk_norm_power(ArithFunction::interval(4), 2);
        r.measured = {{"functions", 200}, {"max_rel_err_u2", worst2}, {"max_rel_err_u3", worst3}, {"u2_power_1_[4]", u2_interval}};
        r.pass = worst2 <= 1e-9 && worst3 <= 1e-9 && std::fabs(u2_interval - 44) <= 1e-9;
        r.detail = "200 random functions, support <= 128, relative error <= 1e-9; ||1_[4]||^4_{U^2} = 44";
    });
}

inline CriterionResult inequality_suites(unsigned threads, u64 seed) {
    return detail::timed(6, "inequality suites", [&](CriterionResult& r) {
        const auto t0 = std::chrono::steady_clock::now();
        std::mt19937_64 rng(seed ^ 0x6666);
        json m;
        bool ok = true;
        auto record = [&](const char* key, int instances, int violations, json extra = json::object()) {
            extra["instances"] = instances;
            extra["violations"] = violations;
            m[key] = extra;
            ok = ok && instances >= 50 && violations == 0;
        };
        {
            int bad = 0;
            for (int i = 0; i < 50; ++i) {
                const i64 N = detail::uniform_int(rng, 3, 8);
                const int k = static_cast<int>(detail::uniform_int(rng, 1, 2));
                std::vector<SymmetricMeasure> ms;
                for (int j = 0; j < k; ++j) ms.push_back(detail::random_measure(rng, N / 2));
                std::vector<ArithFunction> fs;
                for (int j = 0; j < (1 << k); ++j) fs.push_back(detail::random_function(rng, 1, N));
                bad += !gp_inner_product(fs, N, ms).holds;
            }
            record("gowers_cauchy_schwarz", 50, bad);
        }
        {
            int bad = 0;
            for (int i = 0; i < 50; ++i) {
                const i64 N = detail::uniform_int(rng, 3, 10);
                const int k = static_cast<int>(detail::uniform_int(rng, 1, 3));
                std::vector<SymmetricMeasure> ms;
                for (int j = 0; j < k; ++j) ms.push_back(detail::random_measure(rng, N / 2));
                bad += !gp_monotonicity_check(detail::random_function(rng, 1, N), N, ms).pass;
            }
            record("monotonicity_2k_plus_3", 50, bad);
        }
        {
            int bad = 0;
            for (int i = 0; i < 50; ++i) {
                const i64 N = detail::uniform_int(rng, 4, 40);
                const auto mu = detail::random_measure(rng, N);
                const double T = static_cast<double>(N) * l2_norm_sq(mu) * (1 + 3 * detail::unit(rng));
                bad += !u2_from_gp_chain(detail::random_function(rng, 1, N), N, mu, T).pass;
            }
            record("u2_from_gp_chain", 50, bad);
        }
        {
            int bad = 0;
            for (int i = 0; i < 50; ++i) {
                const int k = static_cast<int>(detail::uniform_int(rng, 1, 2));
                const i64 N = detail::uniform_int(rng, 2, k == 1 ? 30 : 8);
                LatticeArray a(k, N);
                for (auto& v : a.a) v = detail::disc(rng);
                const double delta = 0.05 + 0.3 * detail::unit(rng);
                std::vector<std::vector<double>> pts;
                for (int tries = 0; tries < 400 && pts.size() < 40; ++tries) {
                    std::vector<double> p(static_cast<size_t>(k));
                    for (auto& c : p) c = detail::unit(rng);
                    bool far = true;
                    for (const auto& q : pts) far = far && linf_torus_distance(p, q) >= delta;
                    if (far) pts.push_back(std::move(p));
                }
                bad += !well_spaced_check(a, pts, delta, threads).pass;
            }
            record("large_sieve_spaced_points", 50, bad);
        }
        {
            int bad = 0;
            for (int i = 0; i < 50; ++i) {
                const int k = static_cast<int>(detail::uniform_int(rng, 1, 2));
                const i64 N = detail::uniform_int(rng, 4, k == 1 ? 60 : 12);
                LatticeArray a(k, N);
                for (auto& v : a.a) v = detail::disc(rng);
                bad += !farey_check(a, static_cast<i64>(isqrt(static_cast<u64>(N))), threads).pass;
            }
            record("large_sieve_farey", 50, bad);
        }
        {
            int bad = 0, literal_bad = 0;
            const auto primes = sieve_primes(13).primes(13);
            for (int i = 0; i < 50; ++i) {
                const int k = static_cast<int>(detail::uniform_int(rng, 1, 2));
                auto s = SieveSystem::make(k, detail::uniform_int(rng, 5, k == 1 ? 400 : 60));
                for (u64 p : primes) {
                    if (detail::unit(rng) < 0.3) continue;
                    const u64 total = s.residue_count(p);
                    const u64 take = static_cast<u64>(detail::uniform_int(rng, 1, static_cast<i64>(std::min<u64>(total - 1, 3))));
                    std::vector<std::pair<i64, i64>> res;
                    for (u64 j = 0; j < take; ++j) res.emplace_back(detail::uniform_int(rng, 0, p - 1), detail::uniform_int(rng, 0, p - 1));
                    s.set_residues(p, res);
                }
                const auto b = sieve_bound(s);
                const double c = static_cast<double>(sifted_count(s, threads));
                bad += b.bound < c;
                literal_bad += b.literal_bound < c;
            }
            record("sifted_count_bound", 50, bad, {{"literal_box_violations", literal_bad}});
        }
        {
            int conclusive = 0, bad = 0, tries = 0;
            const auto primes = sieve_primes(40).primes(40);
            while (conclusive < 50 && tries < 2000) {
                ++tries;
                const int k = static_cast<int>(detail::uniform_int(rng, 1, 2));
                auto s = SieveSystem::make(k, detail::uniform_int(rng, 1000, 1'000'000));
                for (u64 p : primes) {
                    if (detail::unit(rng) < 0.5) continue;
                    std::vector<std::pair<i64, i64>> res;
                    const i64 take = detail::uniform_int(rng, 1, k == 1 ? 1 : 2);
                    for (i64 j = 0; j < take; ++j) res.emplace_back(detail::uniform_int(rng, 0, p - 1), detail::uniform_int(rng, 0, p - 1));
                    s.set_residues(p, res);
                }
                const auto rk = rankin_lower_bound_check(s);
                if (rk.status == RankinStatus::Inconclusive) continue;
                ++conclusive;
                bad += rk.status == RankinStatus::Fail;
            }
            record("rankin_lower_bound", conclusive, bad, {{"draws", tries}});
        }
        r.measured = m;
        r.pass = ok && detail::seconds_since(t0) <= 60;
        r.detail = "each suite >= 50 randomized instances, zero violations, <= 60 s total";
    });
}

inline CriterionResult headline_empirical(unsigned threads, u64) {
    return detail::timed(7, "headline prime count, n = 4", [&](CriterionResult& r) {
        const auto inv = field_invariants(4);
        const double kappa = kappa_regularized(inv, std::nullopt, 1e-8, threads).value;
        const auto lp = WeightSpec::parse("lambda_prime");
        const auto h6 = headline_sum(inv, 1'000'000ULL, 0, lp, lp, threads);
        const auto h8 = headline_sum(inv, 100'000'000ULL, 0, lp, lp, threads);
        const double r6 = headline_ratio(inv, 1'000'000ULL, h6.value, kappa);
        const double r8 = headline_ratio(inv, 100'000'000ULL, h8.value, kappa);
        const auto o1 = headline_sum(inv, 100'000'000ULL, 1, lp, lp, threads);
        const auto o3 = headline_sum(inv, 100'000'000ULL, 3, lp, lp, threads);
        const auto e2 = headline_sum(inv, 100'000'000ULL, 2, lp, lp, threads);
        const double rel2 = std::abs(e2.value) / std::abs(h8.value);
        r.measured = {{"kappa", kappa}, {"ratio_1e6", r6}, {"ratio_1e8", r8}, {"value_1e8", h8.value.real()},
                      {"ell1", cmd::complex_json(o1.value)}, {"ell3", cmd::complex_json(o3.value)},
                      {"ell2_abs", std::abs(e2.value)}, {"ell2_relative", rel2}};
        r.pass = r8 >= 0.6 && r8 <= 1.4 && std::fabs(r8 - 1) < std::fabs(r6 - 1) && o1.value == cplx{} && o3.value == cplx{} &&
                 rel2 <= 0.3;
        r.detail = "ratio at 1e8 in [0.6, 1.4] and closer to 1 than at 1e6; odd ell exactly 0; |ell=2| <= 0.3 |ell=0|";
    });
}

inline CriterionResult main_term_empirical(unsigned threads, u64) {
    return detail::timed(8, "main term with sharp weights, n = 4", [&](CriterionResult& r) {
        const auto inv = field_invariants(4);
        const double kappa = kappa_regularized(inv, std::nullopt, 1e-8, threads).value;
        const auto m6 = main_term_sum(inv, 1'000'000ULL, 0, threads);
        const auto m8 = main_term_sum(inv, 100'000'000ULL, 0, threads);
        const double r6 = main_term_ratio(inv, 1'000'000ULL, m6.value, kappa);
        const double r8 = main_term_ratio(inv, 100'000'000ULL, m8.value, kappa);
        r.measured = {{"kappa", kappa}, {"ratio_1e6", r6}, {"ratio_1e8", r8}, {"Q_1e6", m6.Q}, {"Q_1e8", m8.Q},
                      {"t_1e6", m6.t}, {"t_1e8", m8.t}};
        r.pass = r8 >= 0.6 && r8 <= 1.4 && std::fabs(r8 - 1) < std::fabs(r6 - 1);
        r.detail = "ratio at 1e8 in [0.6, 1.4] and closer to 1 than at 1e6";
    });
}

inline CriterionResult cramer_u2_trend(unsigned threads, u64) {
    return detail::timed(9, "U^2 distance to the Cramer model shrinks", [&](CriterionResult& r) {
        auto norm = [&](i64 N) {
            const auto f = cmd::function_from_config({{"function", "lambda_prime_minus_cramer"}}, N);
            return uk_norm_normalized(f, 2, N, threads);
        };
        const double small = norm(i64{1} << 12), large = norm(i64{1} << 17);
        r.measured = {{"N_2^12", small}, {"N_2^17", large}};
        r.pass = large < small;
        r.detail = "||(Lambda' - Lambda_Cramer) 1_[N]||_{U^2[N]} at N = 2^17 below N = 2^12";
    });
}

inline CriterionResult prime_ideal_theorem(unsigned, u64) {
    return detail::timed(10, "prime ideal theorem desk check", [&](CriterionResult& r) {
        const u64 X = 10'000'000ULL;
        const auto p4 = psi_prime_sum(field_invariants(4), X, 0);
        const auto inv5 = field_invariants(5);
        const auto p5 = psi_prime_sum(inv5, X, 1);
        const double ratio4 = p4.value.real() / static_cast<double>(X);
        const double ratio5 = std::abs(p5.value) / static_cast<double>(X);
        r.measured = {{"n4_psi_over_X", ratio4}, {"n5_class_number", inv5.class_number}, {"n5_nonprincipal_over_X", ratio5}};
        r.pass = ratio4 >= 0.9 && ratio4 <= 1.1 && inv5.class_number > 1 && ratio5 <= 0.2;
        r.detail = "X = 1e7: psi_K / X in [0.9, 1.1] for n = 4; |nonprincipal sum| <= 0.2 X for n = 5";
    });
}

inline CriterionResult representation_and_ideal_counts(unsigned, u64) {
    return detail::timed(11, "representation and ideal counts", [&](CriterionResult& r) {
        const u64 T = 1'000'000;
        const auto tau = divisor_counts(T);
        u64 rep_violations = 0, rep_mismatches = 0;
        double worst_ratio = 0;
        json reps = json::array();
        for (i64 n : {4, 5, 6, 10, 12}) {
            const auto inv = field_invariants(n);
            const auto rc = oracle::rep_counts(n, T);
            for (u64 t = 1; t <= T; ++t) {
                rep_violations += rc[t] > 6 * tau[t];
                worst_ratio = std::max(worst_ratio, static_cast<double>(rc[t]) / tau[t]);
            }
            for (u64 t = 1; t <= 20'000; ++t) rep_mismatches += rep_count(inv, t) != rc[t];
        }
        u64 count_mismatches = 0, counted = 0;
        for (i64 n : {4, 5, 6, 10, 12}) {
            const auto inv = field_invariants(n);
            PrimeIdealTable t(inv, 10'000);
            IdealSet s(t, 10'000);
            std::vector<u64> by_norm(10'001, 0);
            for (size_t i = 0; i < s.size(); ++i) ++by_norm[s.norm(i)];
            u64 cum = 0;
            for (u64 X = 1; X <= 10'000; ++X) {
                cum += by_norm[X];
                count_mismatches += ideal_count(inv, X).count != cum;
                ++counted;
            }
        }
        r.measured = {{"rep_violations", rep_violations}, {"max_r_over_tau", worst_ratio}, {"rep_count_mismatches", rep_mismatches},
                      {"ideal_count_checks", counted}, {"ideal_count_mismatches", count_mismatches}};
        r.pass = rep_violations == 0 && rep_mismatches == 0 && count_mismatches == 0;
        r.detail = "r(t) <= 6 tau(t) for t <= 1e6; divisor-sum ideal count == enumeration for every X <= 1e4";
    });
}

// Configurations covering every subcommand, sized for seconds.
inline std::vector<std::pair<std::string, json>> determinism_configs(u64 seed) {
    return {{"kappa", {{"n", 4}, {"method", "regularized"}, {"prime_limit", 2'000'000}}},
            {"kappa", {{"n", 10}, {"method", "direct"}, {"prime_limit", 1'000'000}}},
            {"count", {{"n", 4}, {"X", 1'000'000}, {"ell", 0}, {"main_term", false}}},
            {"count", {{"n", 4}, {"X", 1'000'000}, {"ell", 2}, {"main_term", false}}},
            {"mainterm", {{"n", 4}, {"X", 100'000}, {"main_term", false}}},
            {"gowers", {{"k", 3}, {"N", 200}, {"function", "lambda_prime_minus_cramer"}, {"nesting", true}}},
            {"gpnorm", {{"N", 24}, {"function", "random_signs"}, {"seed", seed}, {"measures", {"pm1", "uniform:3"}}}},
            {"buchstab", {{"n", 4}, {"X", 5'000}, {"seed", seed}, {"dfi", true}}},
            {"typesum", {{"n", 4}, {"X", 20'000}, {"L", 10}, {"type", "I"}}},
            {"typesum", {{"n", 4}, {"X", 20'000}, {"L", 10}, {"type", "II"}, {"seed", seed}}},
            {"sigma", {{"n", 12}, {"s1", "5"}, {"s2", "7"}}},
            {"largesieve", {{"preset", "binary_form"}, {"N", 300}, {"W", 13}, {"farey_N", 64}, {"seed", seed}}},
            {"idealstats", {{"n", 5}, {"X", 100'000}}},
            {"cramer", {{"X", 1e10}, {"points", {1, 30, 97, 221}}}}};
}

inline CriterionResult determinism(unsigned, u64 seed) {
    return detail::timed(12, "determinism across thread counts", [&](CriterionResult& r) {
        u64 mismatches = 0;
        json rows = json::array();
        for (const auto& [name, cfg] : determinism_configs(seed)) {
            std::string ref;
            bool same = true;
            for (unsigned th : {1u, 4u, 8u}) {
                const json doc = run_document(name, cfg, th);
                const std::string body = json{{"command", doc["command"]}, {"config", doc["config"]}, {"result", doc["result"]}}.dump();
                if (ref.empty())
                    ref = body;
                else
                    same = same && body == ref;
            }
            mismatches += !same;
            rows.push_back({{"command", name}, {"config_hash", config_hash(cfg)}, {"identical", same}});
        }
        r.measured = {{"runs", rows}, {"mismatches", mismatches}};
        r.pass = mismatches == 0;
        r.detail = "command, config and result byte-identical at 1, 4 and 8 threads";
    });
}

using CriterionFn = CriterionResult (*)(unsigned, u64);

inline const std::vector<CriterionFn>& criteria() {
    static const std::vector<CriterionFn> c{kappa_dual_route,  class_number_formula, buchstab_identities, sigma_agreement,
                                            gowers_engine,     inequality_suites,    headline_empirical,  main_term_empirical,
                                            cramer_u2_trend,   prime_ideal_theorem,  representation_and_ideal_counts,   determinism};
    return c;
}

// Ratio tables across X for the headline and sharp-weight sums plus the U^2/U^3 nesting ratios.
inline json trend_tables(unsigned threads) {
    const auto inv = field_invariants(4);
    const double kappa = kappa_regularized(inv, std::nullopt, 1e-8, threads).value;
    const auto lp = WeightSpec::parse("lambda_prime");
    json head = json::array(), mt = json::array(), nest = json::array();
    for (u64 X : {10'000ULL, 100'000ULL, 1'000'000ULL, 10'000'000ULL, 100'000'000ULL}) {
        const auto h = headline_sum(inv, X, 0, lp, lp, threads);
        head.push_back({{"X", X}, {"ratio", headline_ratio(inv, X, h.value, kappa)}, {"prime_points", h.prime_points}});
        const auto m = main_term_sum(inv, X, 0, threads);
        mt.push_back({{"X", X}, {"ratio", main_term_ratio(inv, X, m.value, kappa)}, {"Q", m.Q}});
    }
    for (i64 N : {256, 512, 1024, 2048}) {
        const auto f = cmd::function_from_config({{"function", "lambda_prime_minus_cramer"}}, N);
        const auto nr = gowers_nesting_report(f, N, threads);
        nest.push_back({{"N", N}, {"u2", nr.u2}, {"u3", nr.u3}, {"ratio", nr.ratio}});
    }
    return {{"kappa", kappa}, {"headline", head}, {"main_term", mt}, {"nesting", nest}};
}

// `which` empty runs all twelve.
inline std::vector<CriterionResult> run(unsigned threads, u64 seed, const std::vector<int>& which = {},
                                        const std::function<void(const CriterionResult&)>& on_result = {}) {
    std::vector<CriterionResult> out;
    const auto& cs = criteria();
    for (size_t i = 0; i < cs.size(); ++i) {
        if (!which.empty() && std::find(which.begin(), which.end(), static_cast<int>(i + 1)) == which.end()) continue;
        out.push_back(cs[i](threads, seed));
        if (on_result) on_result(out.back());
    }
    return out;
}

inline std::string pass_line(const CriterionResult& r) {
    std::ostringstream os;
    os << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << ": " << r.name << " (" << std::fixed << std::setprecision(1)
       << r.runtime_s << " s)";
    if (!r.pass && r.detail.rfind("error: ", 0) == 0) os << " " << r.detail;
    return os.str();
}

}  // namespace bqp::acceptance
