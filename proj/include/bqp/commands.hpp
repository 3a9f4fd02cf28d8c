#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bqp/arith.hpp"
#include "bqp/constants.hpp"
#include "bqp/cramer.hpp"
#include "bqp/errors.hpp"
#include "bqp/gowers.hpp"
#include "bqp/ideals.hpp"
#include "bqp/io.hpp"
#include "bqp/largesieve.hpp"
#include "bqp/quadfield.hpp"
#include "bqp/typesums.hpp"

namespace bqp {

inline constexpr const char* kVersion = "1.0.0";

// Each command maps a config object to a result object. Defaults live here;
// the CLI only forwards what the user set.
namespace cmd {

inline json complex_json(cplx z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline json rational_json(const Rational& q) { return {{"exact", to_string(q)}, {"value", boost::rational_cast<double>(q)}}; }

template <class T>
T get(const json& c, const char* key, T fallback) {
    if (!c.contains(key) || c.at(key).is_null()) return fallback;
    try {
        return c.at(key).get<T>();
    } catch (const json::exception&) {
        throw DomainError(std::string("bad value for ") + key);
    }
}

inline std::optional<double> get_opt(const json& c, const char* key) {
    if (!c.contains(key) || c.at(key).is_null()) return std::nullopt;
    return get<double>(c, key, 0.0);
}

inline void require_headline_n(i64 n) {
    require(n >= 1, "n must be positive");
    require(n % 6 == 0 || n % 6 == 4, "n must be 0 or 4 mod 6");
}

inline u64 get_limit(const json& c, const char* key, double fallback) {
    const double v = get<double>(c, key, fallback);
    require(v >= 0 && v <= 1.8e19 && std::floor(v) == v, std::string(key) + " must be a nonnegative integer");
    return static_cast<u64>(v);
}

inline WeightSpec weight_from_id(const std::string& id) {
    if (id.rfind("csv:", 0) == 0) return WeightSpec::from_table(read_arith_csv(id.substr(4)), id.substr(4));
    return WeightSpec::parse(id);
}

inline std::vector<u64> parse_prime_list(const json& c, const char* key) {
    std::vector<u64> out;
    if (!c.contains(key) || c.at(key).is_null()) return out;
    if (c.at(key).is_array()) {
        for (const auto& v : c.at(key)) out.push_back(v.get<u64>());
        return out;
    }
    const std::string s = c.at(key).get<std::string>();
    for (const auto& tok : detail::split(s, ','))
        if (!tok.empty()) out.push_back(static_cast<u64>(detail::parse_int(tok, key)));
    return out;
}

// Named test functions on [1, N].
inline ArithFunction function_from_config(const json& c, i64 N) {
    if (c.contains("input") && !c.at("input").is_null()) return read_arith_csv(c.at("input").get<std::string>());
    const std::string name = get<std::string>(c, "function", "interval");
    require(N >= 1 && N <= (i64{1} << 24), "N must lie in [1, 2^24]");
    if (name == "interval") return ArithFunction::interval(N);
    std::vector<cplx> v(static_cast<size_t>(N));
    if (name == "random_signs") {
        std::mt19937_64 rng(get<u64>(c, "seed", 0));
        for (auto& x : v) x = (rng() & 1) ? 1.0 : -1.0;
    } else if (name == "lambda_prime_minus_cramer") {
        auto cp = CramerParams::make(std::max(static_cast<double>(N) * static_cast<double>(N), 16.0));
        WeightTable w(WeightSpec::parse("lambda_prime_minus_cramer"), static_cast<u64>(N), &cp);
        for (i64 x = 1; x <= N; ++x) v[x - 1] = w(x);
    } else if (name == "lambda_prime") {
        WeightTable w(WeightSpec::parse("lambda_prime"), static_cast<u64>(N));
        for (i64 x = 1; x <= N; ++x) v[x - 1] = w(x);
    } else {
        throw DomainError("unknown function: " + name);
    }
    return {1, std::move(v)};
}

// "delta0", "pm1" (uniform on {-1, 1}), "uniform:M" (uniform on [-M, M]) or a CSV path.
inline SymmetricMeasure measure_from_id(const std::string& id) {
    if (id == "delta0") return SymmetricMeasure::delta0();
    if (id == "pm1") return SymmetricMeasure::uniform_multiset({-1, 1});
    if (id.rfind("uniform:", 0) == 0) return SymmetricMeasure::uniform_interval(detail::parse_int(id.substr(8), "uniform radius"));
    return read_measure_csv(id);
}

inline json kappa_json(const KappaResult& k, bool trace) {
    json j{{"n", k.n}, {"route", to_string(k.route)}, {"P", k.prime_limit}, {"value", k.value}, {"tail_bound", k.tail_bound}};
    if (trace) {
        json t = json::array();
        for (auto [P, v] : k.trace) t.push_back({{"P", P}, {"value", v}});
        j["trace"] = t;
    }
    return j;
}

inline json kappa(const json& c, unsigned threads) {
    const i64 n = get<i64>(c, "n", 4);
    require_headline_n(n);
    const auto inv = field_invariants(n);
    const std::string method = get<std::string>(c, "method", "regularized");
    const bool trace = get<bool>(c, "trace", false);
    if (method == "direct") return kappa_json(kappa_direct(inv, get_limit(c, "prime_limit", 1e7), threads), trace);
    if (method != "regularized") throw DomainError("method must be direct or regularized");
    std::optional<u64> P;
    if (c.contains("prime_limit") && !c.at("prime_limit").is_null()) P = get_limit(c, "prime_limit", 0);
    return kappa_json(kappa_regularized(inv, P, get<double>(c, "tol", 1e-8), threads), trace);
}

inline double kappa_for_ratio(const FieldInvariants& inv, unsigned threads) {
    return kappa_regularized(inv, std::nullopt, 1e-8, threads).value;
}

inline json count(const json& c, unsigned threads) {
    const i64 n = get<i64>(c, "n", 4);
    require_headline_n(n);
    const auto inv = field_invariants(n);
    const u64 X = get_limit(c, "X", 1e6);
    const i64 ell = get<i64>(c, "ell", 0);
    const auto fx = weight_from_id(get<std::string>(c, "fx", "lambda_prime"));
    const auto fy = weight_from_id(get<std::string>(c, "fy", "lambda_prime"));
    auto h = headline_sum(inv, X, ell, fx, fy, threads);
    json r{{"n", n}, {"X", X}, {"ell", ell}, {"weight_ids", {h.fx_id, h.fy_id}}, {"value_re", h.value.real()},
           {"value_im", h.value.imag()}, {"prime_points", h.prime_points}};
    if (get<bool>(c, "main_term", true) && X >= 3) {
        const double k = kappa_for_ratio(inv, threads);
        r["kappa"] = k;
        r["main_term"] = main_term_shape(inv, static_cast<double>(X), k) / std::log(static_cast<double>(X));
        r["ratio"] = headline_ratio(inv, X, h.value, k);
    }
    return r;
}

inline json mainterm(const json& c, unsigned threads) {
    const i64 n = get<i64>(c, "n", 4);
    require_headline_n(n);
    const auto inv = field_invariants(n);
    const u64 X = get_limit(c, "X", 1e6);
    require(X >= 16, "mainterm needs X >= 16");
    const i64 ell = get<i64>(c, "ell", 0);
    auto cp = CramerParams::make(static_cast<double>(X), get_opt(c, "Q"), get_opt(c, "t"));
    auto m = main_term_sum(inv, X, ell, threads, cp);
    json r{{"n", n}, {"X", X}, {"ell", ell}, {"weight_ids", {"sharp", "sharp"}}, {"Q", m.Q}, {"t", m.t},
           {"value_re", m.value.real()}, {"value_im", m.value.imag()}, {"prime_points", m.prime_points}};
    if (get<bool>(c, "main_term", true)) {
        const double k = kappa_for_ratio(inv, threads);
        r["kappa"] = k;
        r["main_term"] = main_term_shape(inv, static_cast<double>(X), k);
        r["ratio"] = main_term_ratio(inv, X, m.value, k);
    }
    return r;
}

inline json gowers(const json& c, unsigned threads) {
    const int k = get<int>(c, "k", 2);
    const i64 N = get<i64>(c, "N", 64);
    const auto f = function_from_config(c, N);
    json r{{"k", k}, {"N", N}, {"function", c.contains("input") ? "csv" : get<std::string>(c, "function", "interval")},
           {"norm_power", uk_norm_power(f, k, threads)}, {"norm_normalized", uk_norm_normalized(f, k, N, threads)}};
    if (get<bool>(c, "nesting", false)) {
        auto nr = gowers_nesting_report(f, N, threads);
        r["nesting"] = {{"u2", nr.u2}, {"u3", nr.u3}, {"ratio", nr.ratio}};
    }
    return r;
}

inline GPOptions gp_options(const json& c) {
    GPOptions o;
    o.budget = get<double>(c, "budget", o.budget);
    o.sampling = get<bool>(c, "sampling", false);
    o.seed = get<u64>(c, "seed", 0);
    o.samples = get<u64>(c, "samples", o.samples);
    return o;
}

inline json gpnorm(const json& c, unsigned) {
    const i64 N = get<i64>(c, "N", 32);
    const auto f = function_from_config(c, N);
    std::vector<std::string> ids = get<std::vector<std::string>>(c, "measures", {"pm1"});
    std::vector<SymmetricMeasure> ms;
    for (const auto& id : ids) ms.push_back(measure_from_id(id));
    const auto opt = gp_options(c);
    auto v = gp_norm_power(f, N, ms, opt);
    json r{{"N", N}, {"measures", ids}, {"value", v.value}, {"conv_value", v.conv_value}, {"rel_diff", v.rel_diff},
           {"scale", v.scale}, {"sampled", v.sampled}, {"std_error", v.std_error}};
    if (get<bool>(c, "monotonicity", false)) {
        auto m = gp_monotonicity_check(f, N, ms, opt);
        r["monotonicity"] = {{"lhs", m.lhs}, {"rhs", m.rhs}, {"pass", m.pass}};
    }
    return r;
}

// Weights on the enumerated ideals: "one", "principal" (1 on principal ideals),
// "lambda_k", or "random" (uniform in the unit disc, seeded by position).
inline std::vector<cplx> ideal_weights(const IdealSet& s, const std::string& kind, u64 seed) {
    const auto& t = s.table();
    std::vector<cplx> w(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        if (kind == "one") {
            w[i] = 1.0;
        } else if (kind == "principal") {
            w[i] = ideal_class(t, s.ideal(i)) == 0 ? 1.0 : 0.0;
        } else if (kind == "lambda_k") {
            w[i] = lambda_K(t, s.ideal(i));
        } else if (kind == "random") {
            const u64 h1 = splitmix64(seed ^ splitmix64(2 * i)), h2 = splitmix64(seed ^ splitmix64(2 * i + 1));
            const double rad = std::sqrt(static_cast<double>(h1 >> 11) * 0x1.0p-53);
            w[i] = std::polar(rad, 2 * std::numbers::pi * static_cast<double>(h2 >> 11) * 0x1.0p-53);
        } else {
            throw DomainError("unknown ideal weight: " + kind);
        }
    }
    return w;
}

inline json buchstab(const json& c, unsigned) {
    const i64 n = get<i64>(c, "n", 4);
    require(n >= 1, "n must be positive");
    const u64 X = get_limit(c, "X", 1e4);
    if (X > 10'000'000ULL) throw CapacityError("buchstab enumeration above X = 1e7");
    const auto inv = field_invariants(n);
    PrimeIdealTable t(inv, X);
    IdealSet s(t, X);
    const auto w = ideal_weights(s, get<std::string>(c, "weight", "random"), get<u64>(c, "seed", 0));
    const double u = get<double>(c, "u", 20), z = get<double>(c, "z", 50);
    auto b = buchstab_check(s, w, u, z);
    json r{{"n", n}, {"X", X}, {"u", u}, {"z", z}, {"weight", get<std::string>(c, "weight", "random")},
           {"ideals", s.size()}, {"lhs", complex_json(b.lhs)}, {"rhs", complex_json(b.rhs)}, {"s_u", complex_json(b.s_u)},
           {"middle", complex_json(b.middle)}, {"pairs", complex_json(b.pairs)}, {"residual", b.residual},
           {"scale", b.scale}, {"identity_holds", b.residual <= 1e-9}};
    if (b.sieved_checked) {
        r["sieved"] = {{"unit", complex_json(b.unit_term)}, {"primes", complex_json(b.prime_term)},
                       {"semiprimes", complex_json(b.semiprime_term)}, {"residual", b.sieved_residual},
                       {"identity_holds", b.sieved_residual <= 1e-9}};
    }
    if (get<bool>(c, "dfi", false)) {
        std::optional<int> M;
        if (c.contains("M") && !c.at("M").is_null()) M = get<int>(c, "M", 1);
        auto prm = dfi_params(static_cast<double>(X), get<double>(c, "A", 1.0), get<double>(c, "C", 1.0), get_opt(c, "dfi_u"),
                              get_opt(c, "dfi_z"), M);
        auto d = dfi_decomposition(s, w, prm);
        json E = json::array();
        for (size_t m = 0; m < d.E1.size(); ++m)
            E.push_back({{"m", m}, {"E1", complex_json(d.E1[m])}, {"E2", complex_json(d.E2[m])}, {"E3", complex_json(d.E3[m])},
                         {"e1_shape", d.e1_shape[m]}});
        r["dfi"] = {{"params", {{"D", prm.D}, {"u", prm.u}, {"z", prm.z}, {"y", prm.y}, {"M", prm.M}, {"D_eff", prm.D_eff},
                                {"u_eff", prm.u_eff}, {"z_eff", prm.z_eff}, {"y_eff", prm.y_eff}, {"M_eff", prm.M_eff},
                                {"clamped", prm.clamped}}},
                    {"type1_lhs", complex_json(d.type1_lhs)}, {"type1_small", complex_json(d.type1_small)},
                    {"type1_large", complex_json(d.type1_large)}, {"type1_residual", d.type1_residual},
                    {"third", complex_json(d.third)}, {"large_p", complex_json(d.large_p)},
                    {"large_p_direct", complex_json(d.large_p_direct)}, {"rem", complex_json(d.rem)},
                    {"E_total", complex_json(d.E_total)}, {"levels_residual", d.levels_residual},
                    {"split_residual", d.split_residual}, {"large_p_residual", d.large_p_residual}, {"levels", E}};
    }
    return r;
}

inline json typesum(const json& c, unsigned threads) {
    const i64 n = get<i64>(c, "n", 4);
    require(n >= 1, "n must be positive");
    const u64 X = get_limit(c, "X", 1e4);
    const double L = get<double>(c, "L", 10);
    const auto inv = field_invariants(n);
    PrimeIdealTable t(inv, X);
    bool rebuilt = true;
    auto idx = load_or_build_principal_index(t, X, get<std::string>(c, "index_cache", ""), threads, &rebuilt);
    auto w = ProductWeight::make(inv, weight_from_id(get<std::string>(c, "f", "lambda_prime_minus_cramer")),
                                 weight_from_id(get<std::string>(c, "fprime", "lambda_prime_minus_cramer")), get<i64>(c, "ell", 0), X);
    const std::string type = get<std::string>(c, "type", "I");
    json r{{"n", n}, {"X", X}, {"L", L}, {"type", type}, {"ell", w.ell},
           {"weight_ids", {w.f->spec().id(), w.f_prime->spec().id()}}, {"one_bounded", w.one_bounded()},
           {"index_entries", idx.size()}, {"index_rebuilt", rebuilt}};
    if (type == "I") {
        auto ti = type_i_sum(w, t, &idx, L, X, threads);
        r["value"] = ti.value;
        r["trivial_bound"] = ti.trivial;
        r["savings"] = ti.value > 0 ? ti.savings : 0.0;
        r["divisors"] = ti.divisors;
    } else if (type == "II") {
        const u64 seed = get<u64>(c, "seed", 0);
        auto a = CoefficientSource::parse(get<std::string>(c, "alpha", "random"), seed);
        auto b = CoefficientSource::parse(get<std::string>(c, "beta", "random"), splitmix64(seed));
        auto tii = type_ii_sum(w, t, &idx, L, X, a, b, threads);
        r["alpha"] = a.id();
        r["beta"] = b.id();
        r["value"] = complex_json(tii.value);
        r["abs_value"] = std::abs(tii.value);
        r["trivial_bound"] = tii.trivial;
        r["terms"] = tii.terms;
    } else {
        throw DomainError("type must be I or II");
    }
    return r;
}

inline json sigma(const json& c, unsigned threads) {
    const i64 n = get<i64>(c, "n", 4);
    const auto inv = field_invariants(n);
    auto inst = make_sigma_instance(inv, parse_prime_list(c, "s1"), parse_prime_list(c, "s2"));
    const Rational f = sigma_formula(inst);
    json r{{"n", n}, {"S1", inst.S1}, {"S2", inst.S2}, {"T", inst.T}, {"D", inst.D}, {"sigma", boost::rational_cast<double>(f)},
           {"sigma_exact", to_string(f)}};
    if (inst.D <= kSigmaMaxD) {
        auto b = sigma_bruteforce(inst, threads);
        const bool admissible = f.numerator() != 0;
        r["brute_count"] = b.count;
        r["box"] = b.box;
        r["units"] = b.units;
        r["sigma_brute_exact"] = to_string(b.sigma);
        r["agree"] = b.sigma == f;
        r["units_closed_form"] = to_string(b.units_closed_form);
        r["units_agree"] = Rational(static_cast<i64>(b.units)) == b.units_closed_form;
        r["count_closed_form"] = to_string(b.count_closed_form);
        r["count_agree"] = !admissible || Rational(static_cast<i64>(b.count)) == b.count_closed_form;
    }
    return r;
}

inline SieveSystem sieve_system_from_config(const json& c) {
    if (c.contains("system") && !c.at("system").is_null()) {
        auto in = detail::open_in(c.at("system").get<std::string>());
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw DomainError(std::string("bad sieve system file: ") + e.what());
        }
        return sieve_system_from_json(j);
    }
    const std::string preset = get<std::string>(c, "preset", "origin");
    const i64 N = get<i64>(c, "N", 500);
    const u64 W = get<u64>(c, "W", 10);
    if (preset == "origin") {
        auto s = SieveSystem::make(get<int>(c, "k", 2), N);
        for (u64 p : sieve_primes(std::max<u64>(W, 2)).primes(W)) s.set_residues(p, {{0, 0}});
        return s;
    }
    if (preset == "binary_form")
        return binary_form_system(N, get<i64>(c, "n", 4), get<i64>(c, "a1", 1), get<i64>(c, "b1", 2), get<i64>(c, "a2", 3),
                                  get<i64>(c, "b2", 1), W);
    throw DomainError("unknown sieve preset: " + preset);
}

inline json largesieve(const json& c, unsigned threads) {
    const auto s = sieve_system_from_config(c);
    auto b = sieve_bound(s);
    json h = json::array();
    for (auto [p, v] : b.h_table) h.push_back({{"p", p}, {"alpha", s.alpha(p)}, {"h", v}});
    json r{{"system", sieve_system_to_json(s)}, {"bound", b.bound}, {"literal_bound", b.literal_bound}, {"h_sum", b.h_sum}, {"h", h}};
    if (s.N <= kSiftedCountMaxN) {
        const u64 cnt = sifted_count(s, threads);
        r["sifted_count"] = cnt;
        r["holds"] = b.bound >= static_cast<double>(cnt);
        r["literal_holds"] = b.literal_bound >= static_cast<double>(cnt);
        r["margin"] = b.bound - static_cast<double>(cnt);
    }
    auto rk = rankin_lower_bound_check(s);
    r["rankin"] = {{"lhs", rk.lhs}, {"rhs", rk.rhs}, {"markov_lhs", rk.markov_lhs}, {"markov_rhs", rk.markov_rhs},
                   {"markov", rk.markov}, {"status", to_string(rk.status)}};
    if (c.contains("farey_N") && !c.at("farey_N").is_null()) {
        const i64 FN = get<i64>(c, "farey_N", 100);
        LatticeArray a(s.k, FN);
        std::mt19937_64 rng(get<u64>(c, "seed", 0));
        std::normal_distribution<double> g;
        for (auto& v : a.a) v = {g(rng), g(rng)};
        const i64 Q = static_cast<i64>(isqrt(static_cast<u64>(FN)));
        auto f = farey_check(a, Q, threads);
        r["farey"] = {{"N", FN}, {"Q", Q}, {"lhs", f.lhs}, {"rhs", f.rhs}, {"pass", f.pass}};
    }
    return r;
}

inline json idealstats(const json& c, unsigned) {
    const i64 n = get<i64>(c, "n", 4);
    require(n >= 1, "n must be positive");
    const u64 X = get_limit(c, "X", 1e4);
    require(X >= 2, "X must be at least 2");
    const auto inv = field_invariants(n);
    json forms = json::array();
    for (const auto& f : inv.forms) forms.push_back({f.a, f.b, f.c});
    json r{{"n", n}, {"X", X},
           {"field", {{"n_star", inv.n_star}, {"r", inv.r}, {"omega", inv.omega()}, {"delta", inv.delta},
                      {"unit_count", inv.unit_count}, {"class_number", inv.class_number}, {"forms", forms},
                      {"L1", l_one_chi(inv)}}}};
    PrimeIdealTable t(inv, X);
    u64 split = 0, inert = 0, ram = 0;
    for (const auto& g : t.tags()) (g.kind == PrimeKind::Split ? split : g.kind == PrimeKind::Inert ? inert : ram)++;
    r["prime_ideals"] = {{"total", t.size()}, {"split", split}, {"inert", inert}, {"ramified", ram}};
    const auto ic = ideal_count(inv, X);
    r["ideal_count"] = {{"formula", ic.count}, {"density", ic.density}};
    if (X <= 1'000'000ULL) r["ideal_count"]["enumerated"] = IdealSet(t, X).size();
    if (X >= 16) {
        r["reciprocal_sum"] = prime_ideal_reciprocal_sum(inv, X);
        r["loglog_X"] = std::log(std::log(static_cast<double>(X)));
    }
    if (X <= kPrincipalIndexMaxX) {
        json psi = json::array();
        const size_t nchar = std::min<size_t>(static_cast<size_t>(inv.class_number), get<size_t>(c, "max_characters", 4));
        for (size_t k = 0; k < nchar; ++k) {
            auto p = psi_prime_sum(inv, X, k);
            psi.push_back({{"chi", k}, {"value", complex_json(p.value)}, {"ratio", std::abs(p.value) / p.X}, {"principal", p.principal}});
        }
        r["psi"] = psi;
    }
    return r;
}

inline json cramer(const json& c, unsigned) {
    const double X = get<double>(c, "X", 1e8);
    auto cp = CramerParams::make(X, get_opt(c, "Q"), get_opt(c, "t"));
    json primes = cp.primes;
    json r{{"X", X}, {"Q", cp.Q}, {"t", cp.t}, {"normalizer", cp.normalizer}, {"primes", primes}};
    const u64 Y = get_limit(c, "Y", std::min(1e6, std::floor(std::sqrt(X))));
    if (Y >= 1) r["mean_value"] = {{"Y", Y}, {"value", cramer_mean_value(Y, cp)}};
    json pts = json::array();
    for (i64 x : get<std::vector<i64>>(c, "points", {})) {
        auto sf = lambda_sharp_flat(x, cp);
        pts.push_back({{"x", x}, {"cramer", lambda_cramer(x, cp)}, {"sharp", sf.sharp}, {"flat", sf.flat}});
    }
    r["points"] = pts;
    if (X <= 1e12) {
        auto fr = flat_magnitude_report(cp);
        r["flat"] = {{"l1", fr.l1}, {"shape", fr.shape}, {"ratio", fr.ratio}, {"nonzero", fr.nonzero}};
    }
    return r;
}

using Command = std::function<json(const json&, unsigned)>;

inline const std::map<std::string, Command>& registry() {
    static const std::map<std::string, Command> m{
        {"kappa", kappa},       {"count", count},           {"mainterm", mainterm},     {"gowers", gowers},
        {"gpnorm", gpnorm},     {"buchstab", buchstab},     {"typesum", typesum},       {"sigma", sigma},
        {"largesieve", largesieve}, {"idealstats", idealstats}, {"cramer", cramer}};
    return m;
}

}  // namespace cmd

// {command, config, result, provenance}
inline json run_document(const std::string& name, const json& config, unsigned threads) {
    const auto& reg = cmd::registry();
    auto it = reg.find(name);
    if (it == reg.end()) throw DomainError("unknown command: " + name);
    const unsigned th = resolve_threads(threads);
    const auto t0 = std::chrono::steady_clock::now();
    json result = it->second(config, th);
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    std::vector<std::string> bad;
    collect_nonfinite(result, "", bad);
    if (!bad.empty()) throw IdentityError("non-finite value at " + bad.front());
    return {{"command", name}, {"config", config}, {"result", result},
            {"provenance", {{"threads", th}, {"runtime_ms", ms}, {"version", kVersion}, {"config_hash", config_hash(config)}}}};
}

}  // namespace bqp
