#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

#include "bqp/arith.hpp"
#include "bqp/errors.hpp"
#include "bqp/parallel.hpp"

namespace bqp {

// Coefficients a_n for n in [N]^k = {1..N}^k, row-major (first coordinate slowest).
struct LatticeArray {
    int k = 1;
    i64 N = 0;
    std::vector<cplx> a;

    LatticeArray() = default;
    LatticeArray(int k_, i64 N_) : k(k_), N(N_) {
        require(k == 1 || k == 2, "dimension must be 1 or 2");
        require(N >= 1, "N must be positive");
        a.assign(k == 1 ? static_cast<size_t>(N) : static_cast<size_t>(N * N), cplx{});
    }
    cplx& at(i64 n1, i64 n2 = 1) { return a[index(n1, n2)]; }
    cplx at(i64 n1, i64 n2 = 1) const { return a[index(n1, n2)]; }
    double norm_sq() const {
        KahanSumD s;
        for (auto v : a) s.add(std::norm(v));
        return s.value();
    }

  private:
    size_t index(i64 n1, i64 n2) const {
        if (n1 < 1 || n1 > N || n2 < 1 || n2 > (k == 1 ? 1 : N)) throw DomainError("lattice index outside [N]^k");
        return static_cast<size_t>((n1 - 1) * (k == 1 ? 1 : N) + (n2 - 1));
    }
};

// S(theta) = sum_n a_n e(theta . n).
inline cplx trig_poly(const LatticeArray& a, const std::vector<double>& theta) {
    require(static_cast<int>(theta.size()) == a.k, "theta has the wrong dimension");
    const double tau = 2 * std::numbers::pi;
    if (a.k == 1) {
        KahanSumC s;
        for (i64 n = 1; n <= a.N; ++n) s.add(a.at(n) * std::polar(1.0, tau * std::fmod(theta[0] * static_cast<double>(n), 1.0)));
        return s.value();
    }
    std::vector<cplx> e2(static_cast<size_t>(a.N));
    for (i64 n = 1; n <= a.N; ++n) e2[n - 1] = std::polar(1.0, tau * std::fmod(theta[1] * static_cast<double>(n), 1.0));
    KahanSumC s;
    for (i64 n1 = 1; n1 <= a.N; ++n1) {
        cplx row{};
        for (i64 n2 = 1; n2 <= a.N; ++n2) row += a.at(n1, n2) * e2[n2 - 1];
        s.add(row * std::polar(1.0, tau * std::fmod(theta[0] * static_cast<double>(n1), 1.0)));
    }
    return s.value();
}

inline double torus_distance(double a, double b) {
    double d = std::fabs(a - b);
    d -= std::floor(d);
    return std::min(d, 1.0 - d);
}

inline double linf_torus_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0;
    for (size_t i = 0; i < a.size(); ++i) d = std::max(d, torus_distance(a[i], b[i]));
    return d;
}

struct InequalityCheck {
    double lhs = 0;
    double rhs = 0;
    bool pass = false;
};

inline constexpr double kSpacingTol = 1e-12;

// sum_j |S(theta_j)|^2 <= (N^{1/2} + delta^{-1/2})^{2k} ||a||^2 for delta-spaced points.
inline InequalityCheck well_spaced_check(const LatticeArray& a, const std::vector<std::vector<double>>& points, double delta,
                                     unsigned threads = 1) {
    require(delta > 0 && delta <= 1, "delta must lie in (0, 1]");
    for (size_t i = 0; i < points.size(); ++i) {
        require(static_cast<int>(points[i].size()) == a.k, "point has the wrong dimension");
        for (size_t j = 0; j < i; ++j)
            if (linf_torus_distance(points[i], points[j]) < delta - kSpacingTol)
                throw DomainError("points are not delta-well spaced");
    }
    std::vector<double> part(points.size());
    parallel_chunks(points.size(), resolve_threads(threads), [&](size_t j) { part[j] = std::norm(trig_poly(a, points[j])); });
    KahanSumD s;
    for (double v : part) s.add(v);
    InequalityCheck r;
    r.lhs = s.value();
    r.rhs = std::pow(std::sqrt(static_cast<double>(a.N)) + 1 / std::sqrt(delta), 2 * a.k) * a.norm_sq();
    r.pass = r.lhs <= r.rhs * (1 + 1e-12);
    return r;
}

using FareyFraction = std::pair<i64, i64>;  // a / q

// a/q with 1 <= q <= Q, 0 <= a < q, gcd(a, q) = 1.
inline std::vector<FareyFraction> farey_fractions(i64 Q) {
    std::vector<FareyFraction> out;
    for (i64 q = 1; q <= Q; ++q)
        for (i64 a = 0; a < q; ++a)
            if (std::gcd(a, q) == 1) out.emplace_back(a, q);
    return out;
}

// Exact minimal torus distance between distinct Farey fractions of level Q.
inline boost::rational<i64> farey_min_spacing(i64 Q) {
    const auto fr = farey_fractions(Q);
    if (fr.size() < 2) return 1;
    std::vector<boost::rational<i64>> xs;
    for (auto [a, q] : fr) xs.emplace_back(a, q);
    std::sort(xs.begin(), xs.end());
    boost::rational<i64> m = xs.front() + 1 - xs.back();
    for (size_t i = 1; i < xs.size(); ++i) m = std::min(m, xs[i] - xs[i - 1]);
    return m;
}

// sum over q_i <= Q and a_i coprime to q_i of |S((a_i/q_i))|^2 <= (2N)^k ||a||^2.
inline InequalityCheck farey_check(const LatticeArray& a, i64 Q, unsigned threads = 1) {
    require(Q >= 1, "Q must be positive");
    require(Q * Q <= a.N, "farey_check needs Q <= N^{1/2}");
    const auto fr = farey_fractions(Q);
    std::vector<std::vector<double>> pts;
    if (a.k == 1) {
        for (auto [x, q] : fr) pts.push_back({static_cast<double>(x) / q});
    } else {
        for (auto [x, q] : fr)
            for (auto [y, s] : fr) pts.push_back({static_cast<double>(x) / q, static_cast<double>(y) / s});
    }
    std::vector<double> part(pts.size());
    parallel_chunks(pts.size(), resolve_threads(threads), [&](size_t j) { part[j] = std::norm(trig_poly(a, pts[j])); });
    KahanSumD s;
    for (double v : part) s.add(v);
    InequalityCheck r;
    r.lhs = s.value();
    r.rhs = std::pow(2.0 * static_cast<double>(a.N), a.k) * a.norm_sq();
    r.pass = r.lhs <= r.rhs * (1 + 1e-12);
    return r;
}

// c u^i v^j
struct Monomial {
    i64 c;
    int i;
    int j;
};
using Polynomial = std::vector<Monomial>;

inline i64 eval_mod(const Polynomial& f, i64 u, i64 v, i64 p) {
    i64 s = 0;
    for (const auto& m : f) {
        i64 t = ((m.c % p) + p) % p;
        for (int e = 0; e < m.i; ++e) t = t * u % p;
        for (int e = 0; e < m.j; ++e) t = t * v % p;
        s = (s + t) % p;
    }
    return s;
}

inline Polynomial poly_mul(const Polynomial& f, const Polynomial& g) {
    std::map<std::pair<int, int>, i64> acc;
    for (const auto& a : f)
        for (const auto& b : g) acc[{a.i + b.i, a.j + b.j}] += a.c * b.c;
    Polynomial h;
    for (auto [ij, c] : acc)
        if (c) h.push_back({c, ij.first, ij.second});
    return h;
}

// Forbidden residue classes Omega_p, residues stored as (u, v) with v = 0 when k = 1.
struct SieveSystem {
    int k = 2;
    i64 N = 0;
    std::map<u64, std::vector<std::pair<i64, i64>>> omega;

    i64 W() const { return omega.empty() ? 1 : static_cast<i64>(omega.rbegin()->first); }

    u64 residue_count(u64 p) const {
        return k == 1 ? p : p * p;
    }
    double alpha(u64 p) const {
        auto it = omega.find(p);
        if (it == omega.end()) return 0.0;
        return static_cast<double>(it->second.size()) / static_cast<double>(residue_count(p));
    }
    boost::rational<i64> alpha_exact(u64 p) const {
        auto it = omega.find(p);
        if (it == omega.end()) return 0;
        return {static_cast<i64>(it->second.size()), static_cast<i64>(residue_count(p))};
    }

    // Adds Omega_p as a set of residues, normalised mod p and deduplicated.
    void set_residues(u64 p, std::vector<std::pair<i64, i64>> res) {
        require(is_prime_64(p), "sieve moduli must be prime");
        const i64 q = static_cast<i64>(p);
        for (auto& [u, v] : res) {
            u = ((u % q) + q) % q;
            v = k == 1 ? 0 : ((v % q) + q) % q;
        }
        std::sort(res.begin(), res.end());
        res.erase(std::unique(res.begin(), res.end()), res.end());
        if (res.size() >= residue_count(p)) throw DomainError("alpha_p = 1 at p = " + std::to_string(p));
        if (res.empty())
            omega.erase(p);
        else
            omega[p] = std::move(res);
    }

    // Omega_p = common zero set in (Z/p)^k of the product of the given polynomials.
    void set_polynomials(u64 p, const std::vector<Polynomial>& polys) {
        const i64 q = static_cast<i64>(p);
        std::vector<std::pair<i64, i64>> res;
        for (i64 u = 0; u < q; ++u)
            for (i64 v = 0; v < (k == 1 ? 1 : q); ++v)
                for (const auto& f : polys)
                    if (eval_mod(f, u, v, q) == 0) {
                        res.emplace_back(u, v);
                        break;
                    }
        set_residues(p, std::move(res));
    }

    static SieveSystem make(int k, i64 N) {
        require(k == 1 || k == 2, "dimension must be 1 or 2");
        require(N >= 1, "N must be positive");
        SieveSystem s;
        s.k = k;
        s.N = N;
        return s;
    }
};

// Omega_p = zeros of (u^2 + n v^2)(a1 u + b1 v)(a2 u + b2 v) for primes p <= W.
inline SieveSystem binary_form_system(i64 N, i64 n, i64 a1, i64 b1, i64 a2, i64 b2, u64 W) {
    auto s = SieveSystem::make(2, N);
    const std::vector<Polynomial> polys{{{1, 2, 0}, {n, 0, 2}}, {{a1, 1, 0}, {b1, 0, 1}}, {{a2, 1, 0}, {b2, 0, 1}}};
    for (u64 p : sieve_primes(std::max<u64>(W, 2)).primes(W)) s.set_polynomials(p, polys);
    return s;
}

inline double sieve_h(const SieveSystem& s, u64 p) {
    const double a = s.alpha(p);
    return a / (1 - a);
}

// h(q) for squarefree q, exactly; 0 when q is not squarefree.
inline boost::rational<i64> sieve_h_exact(const SieveSystem& s, u64 q) {
    boost::rational<i64> h = 1;
    for (auto [p, e] : factorize(q)) {
        if (e > 1) return 0;
        const auto a = s.alpha_exact(p);
        h *= a / (1 - a);
    }
    return h;
}

// sum over squarefree q <= Q of h(q); only primes with alpha_p > 0 contribute.
inline double sieve_h_sum(const SieveSystem& s, double Q) {
    std::vector<std::pair<u64, double>> ps;
    for (const auto& [p, res] : s.omega) ps.emplace_back(p, sieve_h(s, p));
    KahanSumD acc;
    // Depth-first over squarefree products in increasing prime order.
    auto dfs = [&](auto&& self, size_t i, double q, double h) -> void {
        acc.add(h);
        for (size_t j = i; j < ps.size(); ++j) {
            const double nq = q * static_cast<double>(ps[j].first);
            if (nq > Q) break;
            self(self, j + 1, nq, h * ps[j].second);
        }
    };
    dfs(dfs, 0, 1.0, 1.0);
    return acc.value();
}

struct SieveBound {
    double bound = 0;          // (2L)^k / sum_{q <= L^{1/2}} mu^2 h, box side L = 2N + 1
    double literal_bound = 0;  // (2N)^k / sum_{q <= N^{1/2}} mu^2 h
    double h_sum = 0;
    std::vector<std::pair<u64, double>> h_table;
};

// The box |x|, |y| <= N has 2N + 1 points per side; the bound uses that length.
inline SieveBound sieve_bound(const SieveSystem& s) {
    SieveBound b;
    const double L = 2.0 * static_cast<double>(s.N) + 1;
    b.h_sum = sieve_h_sum(s, std::sqrt(L));
    b.bound = std::pow(2 * L, s.k) / b.h_sum;
    b.literal_bound = std::pow(2.0 * static_cast<double>(s.N), s.k) / sieve_h_sum(s, std::sqrt(static_cast<double>(s.N)));
    for (const auto& [p, res] : s.omega) b.h_table.emplace_back(p, sieve_h(s, p));
    return b;
}

inline constexpr i64 kSiftedCountMaxN = 1000;

// #{x in [-N, N]^k : x mod p not in Omega_p for every p}.
inline u64 sifted_count(const SieveSystem& s, unsigned threads = 1) {
    if (s.N > kSiftedCountMaxN) throw CapacityError("sifted_count needs N <= 1000");
    struct Mask {
        i64 p;
        std::vector<char> bad;
    };
    std::vector<Mask> masks;
    for (const auto& [p, res] : s.omega) {
        const i64 q = static_cast<i64>(p);
        Mask m{q, std::vector<char>(static_cast<size_t>(s.k == 1 ? q : q * q), 0)};
        for (auto [u, v] : res) m.bad[static_cast<size_t>(s.k == 1 ? u : u * q + v)] = 1;
        masks.push_back(std::move(m));
    }
    const i64 N = s.N;
    const size_t rows = static_cast<size_t>(2 * N + 1);
    std::vector<u64> part(rows, 0);
    parallel_chunks(rows, resolve_threads(threads), [&](size_t row) {
        const i64 x = static_cast<i64>(row) - N;
        u64 c = 0;
        for (i64 y = (s.k == 1 ? 0 : -N); y <= (s.k == 1 ? 0 : N); ++y) {
            bool ok = true;
            for (const auto& m : masks) {
                const i64 u = ((x % m.p) + m.p) % m.p;
                const i64 v = ((y % m.p) + m.p) % m.p;
                if (m.bad[static_cast<size_t>(s.k == 1 ? u : u * m.p + v)]) {
                    ok = false;
                    break;
                }
            }
            c += ok;
        }
        part[row] = c;
    });
    u64 total = 0;
    for (u64 c : part) total += c;
    return total;
}

enum class RankinStatus { Pass, Fail, Inconclusive };

inline const char* to_string(RankinStatus s) {
    switch (s) {
        case RankinStatus::Pass: return "pass";
        case RankinStatus::Fail: return "fail";
        case RankinStatus::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct RankinCheck {
    double lhs = 0;          // sum_{q <= N^{1/2}} mu^2 h
    double rhs = 0;          // (1/2) prod_{p <= W} (1 - alpha_p)^{-1}
    double markov_lhs = 0;   // sum alpha_p log p
    double markov_rhs = 0;   // (log N) / 4
    bool markov = false;
    RankinStatus status = RankinStatus::Inconclusive;
};

// The lower bound is only claimed when sum alpha_p log p < (log N)/4.
inline RankinCheck rankin_lower_bound_check(const SieveSystem& s) {
    RankinCheck r;
    r.lhs = sieve_h_sum(s, std::sqrt(static_cast<double>(s.N)));
    double prod = 1;
    KahanSumD mk;
    for (const auto& [p, res] : s.omega) {
        const double a = s.alpha(p);
        prod /= 1 - a;
        mk.add(a * std::log(static_cast<double>(p)));
    }
    r.rhs = 0.5 * prod;
    r.markov_lhs = mk.value();
    r.markov_rhs = std::log(static_cast<double>(s.N)) / 4;
    r.markov = r.markov_lhs < r.markov_rhs;
    if (!r.markov)
        r.status = RankinStatus::Inconclusive;
    else
        r.status = r.lhs >= r.rhs * (1 - 1e-12) ? RankinStatus::Pass : RankinStatus::Fail;
    return r;
}

}  // namespace bqp
