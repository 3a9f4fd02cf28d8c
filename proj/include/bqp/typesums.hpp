#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/rational.hpp>

#include "bqp/arith.hpp"
#include "bqp/cramer.hpp"
#include "bqp/errors.hpp"
#include "bqp/gowers.hpp"
#include "bqp/ideals.hpp"
#include "bqp/parallel.hpp"
#include "bqp/quadfield.hpp"

namespace bqp {

using Rational = boost::rational<i64>;

// ((x + y sqrt(-n)) / |x + y sqrt(-n)|)^ell.
inline cplx chi_infinity(i64 x, i64 y, const FieldInvariants& inv, i64 ell) {
    if (x == 0 && y == 0) throw DomainError("chi_infinity undefined at the origin");
    if (ell == 0) return {1.0, 0.0};
    const double theta = std::atan2(static_cast<double>(y) * std::sqrt(static_cast<double>(inv.n)), static_cast<double>(x));
    return std::polar(1.0, static_cast<double>(ell) * theta);
}

enum class WeightKind { LambdaPrime, VonMangoldt, Cramer, Sharp, PrimeMinusCramer, One, Table };

struct WeightSpec {
    WeightKind kind = WeightKind::LambdaPrime;
    std::shared_ptr<const ArithFunction> table;  // Table only
    std::string label;                          // Table only

    static WeightSpec parse(const std::string& id) {
        if (id == "lambda_prime") return {WeightKind::LambdaPrime, nullptr, {}};
        if (id == "lambda") return {WeightKind::VonMangoldt, nullptr, {}};
        if (id == "cramer") return {WeightKind::Cramer, nullptr, {}};
        if (id == "sharp") return {WeightKind::Sharp, nullptr, {}};
        if (id == "lambda_prime_minus_cramer") return {WeightKind::PrimeMinusCramer, nullptr, {}};
        if (id == "one") return {WeightKind::One, nullptr, {}};
        throw DomainError("unknown weight id: " + id);
    }
    static WeightSpec from_table(ArithFunction f, std::string label) {
        return {WeightKind::Table, std::make_shared<const ArithFunction>(std::move(f)), std::move(label)};
    }
    std::string id() const {
        switch (kind) {
            case WeightKind::LambdaPrime: return "lambda_prime";
            case WeightKind::VonMangoldt: return "lambda";
            case WeightKind::Cramer: return "cramer";
            case WeightKind::Sharp: return "sharp";
            case WeightKind::PrimeMinusCramer: return "lambda_prime_minus_cramer";
            case WeightKind::One: return "one";
            case WeightKind::Table: return "csv:" + label;
        }
        return "?";
    }
    bool needs_cramer() const {
        return kind == WeightKind::Cramer || kind == WeightKind::Sharp || kind == WeightKind::PrimeMinusCramer;
    }
};

// A weight tabulated on [-R, R].
class WeightTable {
  public:
    WeightTable(const WeightSpec& spec, u64 R, const CramerParams* cp = nullptr) : spec_(spec), R_(static_cast<i64>(R)) {
        if (R > 200'000'000ULL) throw CapacityError("weight table radius above 2e8");
        if (spec.needs_cramer() && !cp) throw DomainError("weight " + spec.id() + " needs Cramer parameters");
        vals_.assign(2 * R + 1, cplx{});
        std::vector<double> pos(R + 1, 0.0);
        switch (spec.kind) {
            case WeightKind::LambdaPrime:
            case WeightKind::VonMangoldt:
            case WeightKind::PrimeMinusCramer: {
                PrimeTable pt(std::max<u64>(R, 2));
                pt.for_each_prime(2, R, [&](u64 p) {
                    const double lp = std::log(static_cast<double>(p));
                    pos[p] = lp;
                    if (spec.kind == WeightKind::VonMangoldt)
                        for (u128 q = static_cast<u128>(p) * p; q <= R; q *= p) pos[static_cast<u64>(q)] = lp;
                });
                if (spec.kind == WeightKind::PrimeMinusCramer)
                    for (u64 x = 1; x <= R; ++x) pos[x] -= lambda_cramer(static_cast<i64>(x), *cp);
                break;
            }
            case WeightKind::Cramer:
                for (u64 x = 0; x <= R; ++x) pos[x] = lambda_cramer(static_cast<i64>(x), *cp);
                break;
            case WeightKind::Sharp:
                for (u64 x = 0; x <= R; ++x) pos[x] = lambda_sharp_flat(static_cast<i64>(x), *cp).sharp;
                break;
            case WeightKind::One:
                std::fill(pos.begin(), pos.end(), 1.0);
                break;
            case WeightKind::Table:
                for (i64 x = -R_; x <= R_; ++x) vals_[static_cast<size_t>(x + R_)] = (*spec.table)(x);
                break;
        }
        // The named weights are even functions of x.
        if (spec.kind != WeightKind::Table)
            for (i64 x = -R_; x <= R_; ++x) vals_[static_cast<size_t>(x + R_)] = pos[abs_u(x)];
        for (i64 a = 0; a <= R_; ++a)
            if ((*this)(a) != cplx{} || (*this)(-a) != cplx{}) abs_support_.push_back(a);
        for (auto v : vals_) linf_ = std::max(linf_, std::abs(v));
    }

    cplx operator()(i64 x) const {
        if (x < -R_ || x > R_) throw DomainError("weight evaluated outside its table");
        return vals_[static_cast<size_t>(x + R_)];
    }
    i64 radius() const { return R_; }
    double linf() const { return linf_; }
    const WeightSpec& spec() const { return spec_; }
    // a >= 0 with f(a) != 0 or f(-a) != 0.
    const std::vector<i64>& abs_support() const { return abs_support_; }

  private:
    WeightSpec spec_;
    i64 R_;
    std::vector<cplx> vals_;
    std::vector<i64> abs_support_;
    double linf_ = 0;
};

struct PrimePairSum {
    cplx value;
    u64 prime_points = 0;  // lattice points with prime norm and nonzero weight
};

// sum over (x, y) != 0 with x^2 + n y^2 <= X prime of chi_inf^ell(x, y) fx(x) fy(y).
// Points are paired with their negatives so odd ell cancels exactly for even weights.
inline PrimePairSum prime_pair_sum(const FieldInvariants& inv, u64 X, i64 ell, const WeightTable& fx, const WeightTable& fy,
                                   unsigned threads = 0) {
    if (X > 10'000'000'000ULL) throw CapacityError("prime pair sum above X = 1e10");
    const u64 n = static_cast<u64>(inv.n);
    if (fx.radius() < static_cast<i64>(isqrt(X)) || fy.radius() < static_cast<i64>(isqrt(X / n)))
        throw DomainError("weight tables do not cover the ellipse");
    std::unique_ptr<PrimeTable> pt;
    if (X <= 400'000'000ULL) pt = std::make_unique<PrimeTable>(std::max<u64>(X, 2));
    auto is_prime = [&](u64 m) { return pt ? pt->is_prime(m) : is_prime_64(m); };
    const double sign = (ell % 2 == 0) ? 1.0 : -1.0;
    const auto& xs = fx.abs_support();
    const auto& ys = fy.abs_support();
    const size_t chunks = 256;
    std::vector<cplx> part(chunks);
    std::vector<u64> cnt(chunks, 0);
    parallel_chunks(chunks, resolve_threads(threads), [&](size_t c) {
        const size_t b = xs.size() * c / chunks, e = xs.size() * (c + 1) / chunks;
        KahanSumC s;
        u64 k = 0;
        for (size_t i = b; i < e; ++i) {
            const i64 x = xs[i];
            const u64 x2 = static_cast<u64>(x) * static_cast<u64>(x);
            if (x2 > X) break;
            for (i64 ay : ys) {
                const u64 N = x2 + n * static_cast<u64>(ay) * static_cast<u64>(ay);
                if (N > X) break;
                if (N < 2 || !is_prime(N)) continue;
                // Half-plane representatives: x > 0, or x = 0 and y > 0.
                const i64 ysigns[2] = {ay, -ay};
                const int nsigns = (x == 0 || ay == 0) ? 1 : 2;
                for (int sgi = 0; sgi < nsigns; ++sgi) {
                    const i64 y = ysigns[sgi];
                    const cplx v = fx(x) * fy(y), w = fx(-x) * fy(-y);
                    k += (v != cplx{}) + (w != cplx{});
                    const cplx pair = v + sign * w;
                    if (pair == cplx{}) continue;
                    s.add(chi_infinity(x, y, inv, ell) * pair);
                }
            }
        }
        part[c] = s.value();
        cnt[c] = k;
    });
    KahanSumC s;
    PrimePairSum r;
    for (size_t c = 0; c < chunks; ++c) {
        s.add(part[c]);
        r.prime_points += cnt[c];
    }
    r.value = s.value();
    return r;
}

inline double main_term_shape(const FieldInvariants& inv, double X, double kappa) {
    return std::numbers::pi * kappa * X / std::sqrt(static_cast<double>(inv.n));
}

struct HeadlineResult {
    cplx value;
    u64 prime_points = 0;
    std::string fx_id, fy_id;
};

inline HeadlineResult headline_sum(const FieldInvariants& inv, u64 X, i64 ell, const WeightSpec& fx, const WeightSpec& fy,
                                   unsigned threads = 0, std::optional<CramerParams> cp = std::nullopt) {
    require(X >= 2, "X must be at least 2");
    if (X > 10'000'000'000ULL) throw CapacityError("headline sum above X = 1e10");
    if ((fx.needs_cramer() || fy.needs_cramer()) && !cp) cp = CramerParams::make(static_cast<double>(X));
    const CramerParams* cpp = cp ? &*cp : nullptr;
    WeightTable tx(fx, isqrt(X), cpp);
    WeightTable ty(fy, isqrt(X / static_cast<u64>(inv.n)), cpp);
    auto s = prime_pair_sum(inv, X, ell, tx, ty, threads);
    return {s.value, s.prime_points, fx.id(), fy.id()};
}

// value * log X / (pi kappa X / sqrt n).
inline double headline_ratio(const FieldInvariants& inv, u64 X, cplx value, double kappa) {
    return value.real() * std::log(static_cast<double>(X)) / main_term_shape(inv, static_cast<double>(X), kappa);
}

struct MainTermResult {
    cplx value;  // (log X) * sum with Lambda^sharp weights
    u64 prime_points = 0;
    double Q = 0, t = 0;
};

inline MainTermResult main_term_sum(const FieldInvariants& inv, u64 X, i64 ell, unsigned threads = 0,
                                    std::optional<CramerParams> cp = std::nullopt) {
    require(X >= 3, "X must be at least 3");
    if (!cp) cp = CramerParams::make(static_cast<double>(X));
    auto sharp = WeightSpec::parse("sharp");
    auto h = headline_sum(inv, X, ell, sharp, sharp, threads, cp);
    return {h.value * std::log(static_cast<double>(X)), h.prime_points, cp->Q, cp->t};
}

inline double main_term_ratio(const FieldInvariants& inv, u64 X, cplx value, double kappa) {
    return value.real() / main_term_shape(inv, static_cast<double>(X), kappa);
}

// w = f (x)_ell f' on principal ideals: sum over generators x + y sqrt(-n) of chi^ell f(x) f'(y).
struct ProductWeight {
    const FieldInvariants* inv = nullptr;
    std::shared_ptr<const WeightTable> f, f_prime;
    i64 ell = 0;

    bool one_bounded() const { return f->linf() <= 1 + 1e-12 && f_prime->linf() <= 1 + 1e-12; }

    cplx on_generators(const std::vector<std::pair<i64, i64>>& gens) const {
        cplx s{};
        for (auto [x, y] : gens) s += chi_infinity(x, y, *inv, ell) * (*f)(x) * (*f_prime)(y);
        return s;
    }

    static ProductWeight make(const FieldInvariants& inv, const WeightSpec& fs, const WeightSpec& fps, i64 ell, u64 X,
                              std::optional<CramerParams> cp = std::nullopt) {
        if ((fs.needs_cramer() || fps.needs_cramer()) && !cp) cp = CramerParams::make(static_cast<double>(std::max<u64>(X, 3)));
        const CramerParams* cpp = cp ? &*cp : nullptr;
        ProductWeight w;
        w.inv = &inv;
        w.f = std::make_shared<const WeightTable>(fs, isqrt(X), cpp);
        w.f_prime = std::make_shared<const WeightTable>(fps, isqrt(X), cpp);
        w.ell = ell;
        return w;
    }
};

// w on the index entries of norm <= X, in entry order.
inline std::vector<cplx> weight_on_index(const ProductWeight& w, const PrincipalIndex& idx, u64 X, unsigned threads = 0) {
    const auto& es = idx.entries();
    std::vector<cplx> out(es.size());
    const size_t chunks = 256;
    parallel_chunks(chunks, resolve_threads(threads), [&](size_t c) {
        for (size_t i = es.size() * c / chunks; i < es.size() * (c + 1) / chunks; ++i)
            if (es[i].ideal.norm <= X) out[i] = w.on_generators(es[i].gens);
    });
    return out;
}

namespace detail {

inline void require_index(const PrincipalIndex* idx, const PrimeIdealTable& t, u64 X) {
    if (!idx) throw StateError("principal index not built");
    if (idx->X() < X) throw StateError("principal index built below the requested X");
    if (idx->n() != t.field().n) throw StateError("principal index built for a different field");
}

// For each principal c with N c <= X and w(c) != 0, fn(c, w(c), d) over divisors d with L <= N d < 2L.
template <class Fn>
void for_each_divisor_in_band(const PrimeIdealTable& t, const PrincipalIndex& idx, const std::vector<cplx>& wv, u64 X,
                              double L, Fn&& fn) {
    const auto& es = idx.entries();
    for (size_t i = 0; i < es.size(); ++i) {
        const auto& c = es[i].ideal;
        if (c.norm > X || wv[i] == cplx{}) continue;
        if (static_cast<double>(c.norm) < L) continue;
        for (const auto& d : ideal_divisors(t, c)) {
            const double nd = static_cast<double>(d.norm);
            if (nd >= L && nd < 2 * L) fn(c, wv[i], d);
        }
    }
}

}  // namespace detail

struct TypeIResult {
    double value = 0;
    double trivial = 0;  // X * max |w|
    double savings = 0;  // trivial / value
    u64 divisors = 0;    // ideals d with L <= N d < 2L met
};

// sum over d with L <= N d < 2L of |sum_{d | a, N a <= X} w(a)|.
inline TypeIResult type_i_sum(const ProductWeight& w, const PrimeIdealTable& t, const PrincipalIndex* idx, double L, u64 X,
                              unsigned threads = 0) {
    detail::require_index(idx, t, X);
    require(L > 0, "L must be positive");
    auto wv = weight_on_index(w, *idx, X, threads);
    std::unordered_map<FormalIdeal, KahanSumC, FormalIdealHash> inner;
    TypeIResult r;
    double wmax = 0;
    for (size_t i = 0; i < wv.size(); ++i)
        if (idx->entries()[i].ideal.norm <= X) wmax = std::max(wmax, std::abs(wv[i]));
    r.trivial = static_cast<double>(X) * wmax;
    if (L <= static_cast<double>(X))
        detail::for_each_divisor_in_band(t, *idx, wv, X, L,
                                         [&](const FormalIdeal&, cplx wc, const FormalIdeal& d) { inner[d].add(wc); });
    std::vector<const std::pair<const FormalIdeal, KahanSumC>*> keys;
    for (const auto& kv : inner) keys.push_back(&kv);
    std::sort(keys.begin(), keys.end(), [](auto* a, auto* b) { return a->first < b->first; });
    KahanSumD s;
    for (auto* kv : keys) s.add(std::abs(kv->second.value()));
    r.value = s.value();
    r.divisors = keys.size();
    r.savings = r.value > 0 ? r.trivial / r.value : std::numeric_limits<double>::infinity();
    return r;
}

inline u64 splitmix64(u64 x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Canonical encoding of an ideal independent of tag numbering: (p, kind, conjugate, exp) per factor.
inline u64 ideal_fingerprint(const PrimeIdealTable& t, const FormalIdeal& a) {
    u64 h = 0x243f6a8885a308d3ULL;
    for (auto f : a.factors) {
        const auto& g = t[f.tag];
        const u64 word = g.p * 8 + static_cast<u64>(g.kind) * 2 + (g.conjugate ? 1 : 0);
        h = splitmix64(h ^ word);
        h = splitmix64(h ^ f.exp);
    }
    return h;
}

struct CoefficientSource {
    enum class Kind { RandomUnimodular, MobiusNorm, Constant } kind = Kind::Constant;
    u64 seed = 0;
    cplx constant{1.0, 0.0};

    static CoefficientSource random(u64 seed) { return {Kind::RandomUnimodular, seed, {}}; }
    static CoefficientSource mobius() { return {Kind::MobiusNorm, 0, {}}; }
    static CoefficientSource constant_value(cplx c) {
        require(std::abs(c) <= 1 + 1e-12, "constant coefficient must be 1-bounded");
        return {Kind::Constant, 0, c};
    }
    static CoefficientSource parse(const std::string& s, u64 seed) {
        if (s == "random") return random(seed);
        if (s == "mobius") return mobius();
        if (s == "one") return constant_value(1.0);
        try {
            size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos == s.size()) return constant_value(v);
        } catch (const std::exception&) {
        }
        throw DomainError("unknown coefficient source: " + s);
    }
    std::string id() const {
        switch (kind) {
            case Kind::RandomUnimodular: return "random(seed=" + std::to_string(seed) + ")";
            case Kind::MobiusNorm: return "mobius";
            case Kind::Constant: return "constant";
        }
        return "?";
    }

    cplx operator()(const PrimeIdealTable& t, const FormalIdeal& a) const {
        switch (kind) {
            case Kind::RandomUnimodular: {
                const u64 h = splitmix64(seed ^ ideal_fingerprint(t, a));
                const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
                return std::polar(1.0, 2 * std::numbers::pi * u);
            }
            case Kind::MobiusNorm:
                return static_cast<double>(a.is_unit() ? 1 : tau_mu(static_cast<i64>(a.norm)).mu);
            case Kind::Constant:
                return constant;
        }
        return {};
    }
};

struct TypeIIResult {
    cplx value;
    double trivial = 0;  // X * max |w|
    u64 terms = 0;       // (a, b) pairs with w(ab) != 0
};

// sum over L <= N a < 2L, N(ab) <= X of alpha_a beta_b w(ab).
inline TypeIIResult type_ii_sum(const ProductWeight& w, const PrimeIdealTable& t, const PrincipalIndex* idx, double L, u64 X,
                                const CoefficientSource& alpha, const CoefficientSource& beta, unsigned threads = 0) {
    detail::require_index(idx, t, X);
    require(L > 0, "L must be positive");
    auto wv = weight_on_index(w, *idx, X, threads);
    TypeIIResult r;
    double wmax = 0;
    for (size_t i = 0; i < wv.size(); ++i)
        if (idx->entries()[i].ideal.norm <= X) wmax = std::max(wmax, std::abs(wv[i]));
    r.trivial = static_cast<double>(X) * wmax;
    KahanSumC s;
    if (L <= static_cast<double>(X))
        detail::for_each_divisor_in_band(t, *idx, wv, X, L, [&](const FormalIdeal& c, cplx wc, const FormalIdeal& a) {
            s.add(alpha(t, a) * beta(t, ideal_quotient(c, a)) * wc);
            ++r.terms;
        });
    r.value = s.value();
    return r;
}

struct SigmaInstance {
    const FieldInvariants* inv = nullptr;
    std::vector<u64> S1, S2, T;
    u64 P1 = 1, P2 = 1, D = 0;
};

inline u64 squarefree_product(const std::vector<u64>& S) {
    u64 p = 1;
    for (u64 q : S) p *= q;
    return p;
}

inline SigmaInstance make_sigma_instance(const FieldInvariants& inv, std::vector<u64> S1, std::vector<u64> S2) {
    require(inv.n % 2 == 0, "local density needs n even");
    for (auto* S : {&S1, &S2}) {
        std::sort(S->begin(), S->end());
        require(std::adjacent_find(S->begin(), S->end()) == S->end(), "prime sets must not repeat");
        for (u64 p : *S) require(p >= 2 && is_prime_64(p), "S1, S2 must consist of primes");
    }
    SigmaInstance s;
    s.inv = &inv;
    s.S1 = std::move(S1);
    s.S2 = std::move(S2);
    for (auto [p, e] : factorize(static_cast<u64>(inv.n))) s.T.push_back(p);
    s.P1 = squarefree_product(s.S1);
    s.P2 = squarefree_product(s.S2);
    const u128 D = static_cast<u128>(2) * static_cast<u64>(inv.n) * s.P1 * s.P2;
    if (D > static_cast<u128>(1) << 62) throw CapacityError("modulus D overflows");
    s.D = static_cast<u64>(D);
    return s;
}

namespace detail {

inline bool intersects(const std::vector<u64>& a, const std::vector<u64>& b) {
    for (u64 p : a)
        if (std::find(b.begin(), b.end(), p) != b.end()) return true;
    return false;
}

inline std::vector<u64> prime_union(std::initializer_list<const std::vector<u64>*> sets) {
    std::set<u64> u;
    for (auto* s : sets) u.insert(s->begin(), s->end());
    return {u.begin(), u.end()};
}

}  // namespace detail

// 0 when S1 meets S2 or T; else (omega units P_{T \ S2} / (r h)) prod_{p in T u S1 u S2} 1/(p - (Delta|p)).
inline Rational sigma_formula(const SigmaInstance& s) {
    const auto& inv = *s.inv;
    if (detail::intersects(s.S1, s.S2) || detail::intersects(s.S1, s.T)) return Rational(0);
    u64 pts = 1;
    for (u64 p : s.T)
        if (std::find(s.S2.begin(), s.S2.end(), p) == s.S2.end()) pts *= p;
    Rational v(static_cast<i64>(inv.unit_count) * static_cast<i64>(pts), inv.omega_den * inv.r * inv.class_number);
    for (u64 p : detail::prime_union({&s.T, &s.S1, &s.S2})) v /= static_cast<i64>(p) - kronecker(inv.delta, static_cast<i64>(p));
    return v;
}

// Norm form on the integral basis of O_K: 1, sqrt(-n*) or 1, (1 + sqrt(-n*))/2.
inline u64 ok_norm(const FieldInvariants& inv, u64 u, u64 v) {
    const u64 ns = static_cast<u64>(inv.n_star);
    if (inv.omega_den == 1) return u * u + ns * v * v;
    return u * u + u * v + v * v * ((1 + ns) / 4);
}

// |(O_K / (D))^*| as a product of local counts over p^e || D.
inline u64 unit_group_order(const FieldInvariants& inv, u64 D) {
    u64 total = 1;
    for (auto [p, e] : factorize(D)) {
        u64 q = 1;
        for (int i = 0; i < e; ++i) q *= p;
        if (q > 10'000) throw CapacityError("local unit count above p^e = 1e4");
        u64 c = 0;
        for (u64 u = 0; u < q; ++u)
            for (u64 v = 0; v < q; ++v) c += ok_norm(inv, u, v) % p != 0;
        total *= c;
    }
    return total;
}

// D^2 prod_{p | D} (1 - 1/p)(1 - (Delta|p)/p).
inline Rational unit_group_order_closed_form(const FieldInvariants& inv, u64 D) {
    Rational v(static_cast<i64>(D) * static_cast<i64>(D));
    for (auto [p, e] : factorize(D)) {
        const i64 q = static_cast<i64>(p);
        v *= Rational(q - 1, q);
        v *= Rational(q - kronecker(inv.delta, q), q);
    }
    return v;
}

struct SigmaBrute {
    u64 count = 0;        // coprime residues in the box
    u64 box = 0;          // box size
    u64 units = 0;        // |(O_K / (D))^*|
    Rational sigma;       // unit_count * count / (h * units)
    Rational units_closed_form;
    Rational count_closed_form;  // omega D^2 / (r P1 P2) prod_{p | D} (1 - 1/p)
};

inline constexpr u64 kSigmaMaxD = 1'000'000;

// Residues a P1 + b r P2 sqrt(-n*) with a < 2n P2, b < 2 omega n P1 / r whose norm is coprime to D.
inline SigmaBrute sigma_bruteforce(const SigmaInstance& s, unsigned threads = 0) {
    const auto& inv = *s.inv;
    if (s.D > kSigmaMaxD) throw CapacityError("sigma brute force needs D <= 1e6");
    const u64 n = static_cast<u64>(inv.n), ns = static_cast<u64>(inv.n_star), r = static_cast<u64>(inv.r);
    const u64 A = 2 * n * s.P2;
    const u64 B = 2 * n * s.P1 / (static_cast<u64>(inv.omega_den) * r);
    std::vector<u64> ps;
    for (auto [p, e] : factorize(s.D)) ps.push_back(p);
    const size_t chunks = std::min<u64>(256, A);
    std::vector<u64> part(chunks, 0);
    parallel_chunks(chunks, resolve_threads(threads), [&](size_t c) {
        u64 k = 0;
        for (u64 a = A * c / chunks; a < A * (c + 1) / chunks; ++a) {
            const u64 x = a * s.P1;
            for (u64 b = 0; b < B; ++b) {
                const u64 y = b * r * s.P2;
                const u128 N = static_cast<u128>(x) * x + static_cast<u128>(ns) * y * y;
                bool ok = true;
                for (u64 p : ps)
                    if (N % p == 0) {
                        ok = false;
                        break;
                    }
                k += ok;
            }
        }
        part[c] = k;
    });
    SigmaBrute out;
    for (u64 k : part) out.count += k;
    out.box = A * B;
    out.units = unit_group_order(inv, s.D);
    // Full enumeration of O_K / (D) when small enough to be cheap.
    if (s.D <= 2000) {
        u64 c = 0;
        for (u64 u = 0; u < s.D; ++u)
            for (u64 v = 0; v < s.D; ++v) c += gcd_u(ok_norm(inv, u, v) % s.D, s.D) == 1;
        if (c != out.units) throw IdentityError("local and global unit counts disagree");
    }
    out.sigma = Rational(static_cast<i64>(inv.unit_count) * static_cast<i64>(out.count),
                         inv.class_number * static_cast<i64>(out.units));
    out.units_closed_form = unit_group_order_closed_form(inv, s.D);
    Rational cf(static_cast<i64>(s.D) * static_cast<i64>(s.D), inv.omega_den * inv.r * static_cast<i64>(s.P1 * s.P2));
    for (u64 p : ps) cf *= Rational(static_cast<i64>(p) - 1, static_cast<i64>(p));
    out.count_closed_form = cf;
    return out;
}

inline std::string to_string(const Rational& q) {
    return q.denominator() == 1 ? std::to_string(q.numerator())
                                : std::to_string(q.numerator()) + "/" + std::to_string(q.denominator());
}

}  // namespace bqp
