#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bqp/arith.hpp"
#include "bqp/errors.hpp"
#include "bqp/parallel.hpp"

namespace bqp {

// Finitely supported f : Z -> C, values[i] = f(lo + i).
struct ArithFunction {
    i64 lo = 0;
    std::vector<cplx> values;

    ArithFunction() = default;
    ArithFunction(i64 lo_, std::vector<cplx> v) : lo(lo_), values(std::move(v)) {}

    i64 hi() const { return lo + static_cast<i64>(values.size()); }  // exclusive
    size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }

    cplx operator()(i64 x) const {
        if (x < lo || x >= hi()) return {};
        return values[static_cast<size_t>(x - lo)];
    }
    // f at num/den; zero off Z.
    cplx at(i64 num, i64 den) const {
        if (den == 0) throw DomainError("zero denominator");
        if (num % den != 0) return {};
        return (*this)(num / den);
    }

    double l1() const {
        double s = 0;
        for (auto v : values) s += std::abs(v);
        return s;
    }
    double linf() const {
        double s = 0;
        for (auto v : values) s = std::max(s, std::abs(v));
        return s;
    }
    bool one_bounded(double tol = 1e-12) const { return linf() <= 1 + tol; }
    bool supported_in(i64 a, i64 b) const {
        for (size_t i = 0; i < values.size(); ++i) {
            const i64 x = lo + static_cast<i64>(i);
            if (values[i] != cplx{} && (x < a || x > b)) return false;
        }
        return true;
    }

    // 1 on [a, b].
    static ArithFunction indicator(i64 a, i64 b) {
        if (b < a) return {};
        return {a, std::vector<cplx>(static_cast<size_t>(b - a + 1), cplx{1, 0})};
    }
    // 1_[N] = 1 on {1, ..., N}.
    static ArithFunction interval(i64 N) { return indicator(1, N); }

    ArithFunction conj() const {
        ArithFunction g = *this;
        for (auto& v : g.values) v = std::conj(v);
        return g;
    }
    ArithFunction times_phase(double theta) const {
        ArithFunction g = *this;
        for (size_t i = 0; i < g.values.size(); ++i)
            g.values[i] *= std::polar(1.0, 2 * std::numbers::pi * theta * static_cast<double>(lo + static_cast<i64>(i)));
        return g;
    }
};

// Delta_h f(x) = f(x) conj f(x+h).
inline ArithFunction difference(const ArithFunction& f, i64 h) {
    const i64 lo = std::max(f.lo, f.lo - h), hi = std::min(f.hi(), f.hi() - h);
    if (hi <= lo) return {};
    ArithFunction g(lo, std::vector<cplx>(static_cast<size_t>(hi - lo)));
    for (i64 x = lo; x < hi; ++x) g.values[static_cast<size_t>(x - lo)] = f(x) * std::conj(f(x + h));
    return g;
}

inline ArithFunction difference(const ArithFunction& f, i64 num, i64 den) {
    if (den == 0) throw DomainError("zero denominator");
    if (num % den != 0) return {};
    return difference(f, num / den);
}

// Delta_{(h,h')} f(x) = f(x+h) conj f(x+h').
inline ArithFunction difference_pair(const ArithFunction& f, i64 h, i64 hp) {
    const i64 lo = std::max(f.lo - h, f.lo - hp), hi = std::min(f.hi() - h, f.hi() - hp);
    if (hi <= lo) return {};
    ArithFunction g(lo, std::vector<cplx>(static_cast<size_t>(hi - lo)));
    for (i64 x = lo; x < hi; ++x) g.values[static_cast<size_t>(x - lo)] = f(x + h) * std::conj(f(x + hp));
    return g;
}

inline ArithFunction difference_pair(const ArithFunction& f, i64 hn, i64 hpn, i64 den) {
    if (den == 0) throw DomainError("zero denominator");
    if (hn % den != 0 || hpn % den != 0) return {};
    return difference_pair(f, hn / den, hpn / den);
}

// Forward complex DFT with plans cached per size. Plans are made on scratch
// buffers with FFTW_UNALIGNED so they can run on any vector.
class FftPlans {
  public:
    static FftPlans& instance() {
        static FftPlans p;
        return p;
    }
    void forward(std::vector<cplx>& in, std::vector<cplx>& out) { run(in, out, FFTW_FORWARD); }
    void backward(std::vector<cplx>& in, std::vector<cplx>& out) { run(in, out, FFTW_BACKWARD); }

  private:
    void run(std::vector<cplx>& in, std::vector<cplx>& out, int dir) {
        const int n = static_cast<int>(in.size());
        out.resize(in.size());
        fftw_plan p;
        {
            std::lock_guard<std::mutex> lk(mu_);
            auto& slot = dir == FFTW_FORWARD ? fwd_[n] : bwd_[n];
            if (!slot) {
                std::vector<cplx> a(n), b(n);
                slot = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(a.data()),
                                        reinterpret_cast<fftw_complex*>(b.data()), dir, FFTW_ESTIMATE | FFTW_UNALIGNED);
            }
            p = slot;
        }
        fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
    }
    ~FftPlans() {
        for (auto& [n, p] : fwd_) fftw_destroy_plan(p);
        for (auto& [n, p] : bwd_) fftw_destroy_plan(p);
    }
    std::mutex mu_;
    std::unordered_map<int, fftw_plan> fwd_, bwd_;
};

inline size_t next_pow2(size_t n) {
    size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

// sum_{x,h1,h2} Delta_{h1} Delta_{h2} f(x) = sum_t |A_f(t)|^2 with A_f the autocorrelation.
inline double u2_power_raw(const ArithFunction& f) {
    const size_t L = f.size();
    if (L == 0) return 0.0;
    if (L <= 64) {
        KahanSumD s;
        for (size_t t = 0; t < L; ++t) {
            cplx a{};
            for (size_t x = 0; x + t < L; ++x) a += f.values[x] * std::conj(f.values[x + t]);
            s.add((t == 0 ? 1.0 : 2.0) * std::norm(a));
        }
        return s.value();
    }
    const size_t M = next_pow2(2 * L - 1);
    std::vector<cplx> in(M), out;
    std::copy(f.values.begin(), f.values.end(), in.begin());
    FftPlans::instance().forward(in, out);
    KahanSumD s;
    for (auto v : out) {
        const double q = std::norm(v);
        s.add(q * q);
    }
    return s.value() / static_cast<double>(M);
}

inline size_t uk_support_guard(int k) {
    switch (k) {
        case 2: return size_t{1} << 24;
        case 3: return size_t{1} << 14;
        case 4: return size_t{1} << 10;
        case 5: return size_t{1} << 8;
        default: return 0;
    }
}

inline double uk_power_rec(const ArithFunction& f, int k) {
    if (f.empty()) return 0.0;
    if (k == 2) return u2_power_raw(f);
    const i64 L = static_cast<i64>(f.size());
    KahanSumD s;
    s.add(uk_power_rec(difference(f, 0), k - 1));
    for (i64 h = 1; h < L; ++h) s.add(2.0 * uk_power_rec(difference(f, h), k - 1));
    return s.value();
}

// Bound on the absolute sum of all terms in the defining sum.
inline double uk_scale(const ArithFunction& f, int k) {
    const double L = static_cast<double>(std::max<size_t>(f.size(), 1));
    return f.l1() * std::pow(f.linf(), (1 << k) - 1) * std::pow(2 * L, k);
}

// ||f||_{U^k(Z)}^{2^k}, by recursion on h with U^2 as the base.
inline double uk_norm_power(const ArithFunction& f, int k, unsigned threads = 1) {
    if (k < 2 || k > 5) throw DomainError("U^k needs 2 <= k <= 5");
    if (f.size() > uk_support_guard(k)) throw CapacityError("support too large for U^" + std::to_string(k));
    double v;
    if (k == 2 || threads <= 1) {
        v = uk_power_rec(f, k);
    } else {
        const i64 L = static_cast<i64>(f.size());
        std::vector<double> vals(static_cast<size_t>(L));
        parallel_chunks(static_cast<size_t>(L), resolve_threads(threads),
                        [&](size_t h) { vals[h] = uk_power_rec(difference(f, static_cast<i64>(h)), k - 1); });
        KahanSumD s;
        for (i64 h = 0; h < L; ++h) s.add((h == 0 ? 1.0 : 2.0) * vals[static_cast<size_t>(h)]);
        v = s.value();
    }
    const double scale = uk_scale(f, k);
    if (v < -1e-9 * scale) throw IdentityError("negative Gowers norm power");
    return std::max(v, 0.0);
}

// ||f||_{U^k[N]} = ||f||_{U^k(Z)} / ||1_[N]||_{U^k(Z)}.
inline double uk_norm_normalized(const ArithFunction& f, int k, i64 N, unsigned threads = 1) {
    require(N >= 1, "N must be positive");
    const double num = uk_norm_power(f, k, threads);
    const double den = uk_norm_power(ArithFunction::interval(N), k, threads);
    return std::pow(num / den, 1.0 / (1 << k));
}

// Probability measure on (1/den)Z with atoms mirrored about 0; den is a power of two.
struct SymmetricMeasure {
    i64 den = 1;
    std::vector<std::pair<i64, double>> atoms;  // (offset in units of 1/den, mass), sorted

    size_t support_size() const { return atoms.size(); }
    i64 max_abs_units() const { return atoms.empty() ? 0 : std::max(std::abs(atoms.front().first), atoms.back().first); }
    double max_abs() const { return static_cast<double>(max_abs_units()) / static_cast<double>(den); }
    double mass_at(i64 units) const {
        auto it = std::lower_bound(atoms.begin(), atoms.end(), std::make_pair(units, -1.0));
        return it != atoms.end() && it->first == units ? it->second : 0.0;
    }

    // Validates total mass and symmetry, then mirrors masses exactly.
    static SymmetricMeasure from_atoms(std::vector<std::pair<i64, double>> raw, i64 den = 1, double tol = 1e-12) {
        if (den < 1 || (den & (den - 1)) != 0) throw DomainError("measure denominator must be a power of two");
        std::map<i64, double> m;
        for (auto [x, w] : raw) {
            if (!(w >= 0) || !std::isfinite(w)) throw DomainError("measure masses must be nonnegative");
            m[x] += w;
        }
        // reduce the denominator while every offset stays integral
        while (den > 1 && std::all_of(m.begin(), m.end(), [](const auto& kv) { return kv.first % 2 == 0; })) {
            std::map<i64, double> r;
            for (auto [x, w] : m) r[x / 2] += w;
            m.swap(r);
            den /= 2;
        }
        double total = 0;
        for (auto [x, w] : m) total += w;
        if (std::fabs(total - 1) > tol) throw DomainError("measure mass does not sum to 1");
        SymmetricMeasure mu;
        mu.den = den;
        for (auto [x, w] : m) {
            auto it = m.find(-x);
            const double w2 = it == m.end() ? 0.0 : it->second;
            if (std::fabs(w - w2) > tol) throw DomainError("measure is not symmetric");
            const double avg = 0.5 * (w + w2);
            if (avg > 0) mu.atoms.emplace_back(x, avg);
        }
        return mu;
    }

    static SymmetricMeasure delta0() { return from_atoms({{0, 1.0}}); }

    // Uniform on the integers of [-N, N].
    static SymmetricMeasure uniform_interval(i64 N) {
        require(N >= 0, "N must be nonnegative");
        std::vector<std::pair<i64, double>> a;
        const double w = 1.0 / static_cast<double>(2 * N + 1);
        for (i64 x = -N; x <= N; ++x) a.emplace_back(x, w);
        return from_atoms(std::move(a));
    }

    // Uniform on a multiset of offsets num/den; the multiset must be symmetric.
    static SymmetricMeasure uniform_multiset(const std::vector<i64>& S, i64 den = 1) {
        if (S.empty()) throw DomainError("empty multiset");
        std::vector<std::pair<i64, double>> a;
        const double w = 1.0 / static_cast<double>(S.size());
        for (i64 x : S) a.emplace_back(x, w);
        return from_atoms(std::move(a), den);
    }

    SymmetricMeasure with_den(i64 d) const {
        if (d % den != 0) throw DomainError("incompatible measure denominators");
        SymmetricMeasure r;
        r.den = d;
        for (auto [x, w] : atoms) r.atoms.emplace_back(x * (d / den), w);
        return r;
    }
};

inline SymmetricMeasure convolve(const SymmetricMeasure& a, const SymmetricMeasure& b) {
    const i64 d = std::max(a.den, b.den);
    auto A = a.with_den(d), B = b.with_den(d);
    std::map<i64, double> m;
    for (auto [x, u] : A.atoms)
        for (auto [y, v] : B.atoms) m[x + y] += u * v;
    std::vector<std::pair<i64, double>> raw(m.begin(), m.end());
    return SymmetricMeasure::from_atoms(std::move(raw), d, 1e-9);
}

// Same convolution through the FFT; agrees with convolve() to rounding.
inline SymmetricMeasure convolve_fft(const SymmetricMeasure& a, const SymmetricMeasure& b) {
    const i64 d = std::max(a.den, b.den);
    auto A = a.with_den(d), B = b.with_den(d);
    const i64 ra = A.max_abs_units(), rb = B.max_abs_units();
    const size_t M = next_pow2(static_cast<size_t>(2 * (ra + rb) + 1));
    std::vector<cplx> fa(M), fb(M), Fa, Fb, out;
    for (auto [x, w] : A.atoms) fa[static_cast<size_t>(x + ra)] = w;
    for (auto [x, w] : B.atoms) fb[static_cast<size_t>(x + rb)] = w;
    FftPlans::instance().forward(fa, Fa);
    FftPlans::instance().forward(fb, Fb);
    for (size_t i = 0; i < M; ++i) Fa[i] *= Fb[i];
    FftPlans::instance().backward(Fa, out);
    std::vector<std::pair<i64, double>> raw;
    for (size_t i = 0; i < M; ++i) {
        const double w = out[i].real() / static_cast<double>(M);
        if (w > 1e-15) raw.emplace_back(static_cast<i64>(i) - ra - rb, w);
    }
    double tot = 0;
    for (auto& [x, w] : raw) tot += w;
    for (auto& [x, w] : raw) w /= tot;
    return SymmetricMeasure::from_atoms(std::move(raw), d, 1e-9);
}

inline double l2_norm_sq(const SymmetricMeasure& mu) {
    double s = 0;
    for (auto [x, w] : mu.atoms) s += w * w;
    return s;
}

inline SymmetricMeasure uniform_multiset(const std::vector<i64>& S, i64 den = 1) {
    return SymmetricMeasure::uniform_multiset(S, den);
}

inline SymmetricMeasure conv_power(const SymmetricMeasure& mu, int m) {
    require(m >= 0, "convolution power must be nonnegative");
    SymmetricMeasure r = SymmetricMeasure::delta0();
    for (int i = 0; i < m; ++i) r = convolve(r, mu);
    return r;
}

struct GPOptions {
    double budget = 1 << 27;   // max inner-loop operations for exact evaluation
    bool sampling = false;     // allow Monte Carlo when the exact budget is exceeded
    std::uint64_t seed = 0;
    std::uint64_t samples = 20000;
};

struct GPValue {
    double value = 0;          // pair form, clamped at 0
    double conv_value = 0;     // single-difference form with mu * mu
    double rel_diff = 0;       // |pair - conv| / scale
    double scale = 0;          // (1/N) ||f||_1 ||f||_inf^{2^k - 1}
    bool sampled = false;
    double std_error = 0;
};

namespace detail {

inline i64 common_den(const std::vector<SymmetricMeasure>& ms) {
    i64 d = 1;
    for (const auto& m : ms) d = std::max(d, m.den);
    return d;
}

// f carried onto (1/den)Z: grid point j holds f(j/den).
inline ArithFunction to_grid(const ArithFunction& f, i64 den) {
    if (den == 1 || f.empty()) return f;
    ArithFunction g(f.lo * den, std::vector<cplx>((f.size() - 1) * static_cast<size_t>(den) + 1));
    for (size_t i = 0; i < f.size(); ++i) g.values[i * static_cast<size_t>(den)] = f.values[i];
    return g;
}

inline cplx sum_values(const ArithFunction& g) {
    KahanSumC s;
    for (auto v : g.values) s.add(v);
    return s.value();
}

inline void pair_dfs(const ArithFunction& g, const std::vector<SymmetricMeasure>& ms, size_t i, double weight,
                     KahanSumC& acc) {
    if (g.empty()) return;
    if (i == ms.size()) {
        acc.add(weight * sum_values(g));
        return;
    }
    for (auto [a, wa] : ms[i].atoms)
        for (auto [b, wb] : ms[i].atoms) pair_dfs(difference_pair(g, a, b), ms, i + 1, weight * wa * wb, acc);
}

inline void single_dfs(const ArithFunction& g, const std::vector<SymmetricMeasure>& ms, size_t i, double weight,
                       KahanSumC& acc) {
    if (g.empty()) return;
    if (i == ms.size()) {
        acc.add(weight * sum_values(g));
        return;
    }
    for (auto [h, w] : ms[i].atoms) single_dfs(difference(g, h), ms, i + 1, weight * w, acc);
}

inline double pair_cost(const std::vector<SymmetricMeasure>& ms, double L) {
    double c = 0, prod = 1;
    for (const auto& m : ms) {
        prod *= static_cast<double>(m.support_size() * m.support_size());
        c += prod * L;
    }
    return c;
}

}  // namespace detail

// ||f||_{U_GP[N; mu_1..mu_k]}^{2^k} evaluated in the pair form
// (1/N) sum_x E Delta_{(h1,h1')}...Delta_{(hk,hk')} f(x) and in the
// single-difference form with mu_i * mu_i; x runs over the common grid
// (1/den)Z of the measures so the two agree exactly.
inline GPValue gp_norm_power(const ArithFunction& f, i64 N, const std::vector<SymmetricMeasure>& measures,
                             const GPOptions& opt = {}) {
    require(N >= 1, "N must be positive");
    const int k = static_cast<int>(measures.size());
    GPValue r;
    r.scale = f.l1() * std::pow(f.linf(), (1 << k) - 1) / static_cast<double>(N);
    if (f.empty() || r.scale == 0) return r;
    const i64 den = detail::common_den(measures);
    std::vector<SymmetricMeasure> ms, ms2;
    for (const auto& m : measures) {
        ms.push_back(m.with_den(den));
        ms2.push_back(convolve(m, m).with_den(den));
    }
    const ArithFunction g = detail::to_grid(f, den);
    const double L = static_cast<double>(g.size());
    const double cost = detail::pair_cost(ms, L) + detail::pair_cost(ms2, L);
    if (cost > opt.budget) {
        if (!opt.sampling) throw CapacityError("Gowers-Peluse evaluation exceeds budget");
        std::mt19937_64 rng(opt.seed);
        std::vector<std::discrete_distribution<size_t>> pick;
        for (const auto& m : ms) {
            std::vector<double> w;
            for (auto [x, p] : m.atoms) w.push_back(p);
            pick.emplace_back(w.begin(), w.end());
        }
        double mean = 0, m2 = 0;
        for (std::uint64_t s = 1; s <= opt.samples; ++s) {
            ArithFunction cur = g;
            for (size_t i = 0; i < ms.size() && !cur.empty(); ++i) {
                const i64 a = ms[i].atoms[pick[i](rng)].first;
                const i64 b = ms[i].atoms[pick[i](rng)].first;
                cur = difference_pair(cur, a, b);
            }
            const double v = detail::sum_values(cur).real() / static_cast<double>(N);
            const double d = v - mean;
            mean += d / static_cast<double>(s);
            m2 += d * (v - mean);
        }
        r.sampled = true;
        r.value = std::max(mean, 0.0);
        r.conv_value = mean;
        r.std_error = opt.samples > 1 ? std::sqrt(m2 / static_cast<double>(opt.samples - 1) / static_cast<double>(opt.samples)) : 0;
        return r;
    }
    KahanSumC pair, single;
    detail::pair_dfs(g, ms, 0, 1.0, pair);
    detail::single_dfs(g, ms2, 0, 1.0, single);
    const double pv = pair.value().real() / static_cast<double>(N);
    const double sv = single.value().real() / static_cast<double>(N);
    r.conv_value = sv;
    r.rel_diff = std::fabs(pv - sv) / r.scale;
    if (r.rel_diff > 1e-9) throw IdentityError("pair and convolution forms of the Gowers-Peluse norm disagree");
    if (pv < -1e-9 * r.scale) throw IdentityError("negative Gowers-Peluse norm power");
    r.value = std::max(pv, 0.0);
    return r;
}

// (1/N) sum_x f(x): the norm power with no measures (used as the k = 0 stage).
inline cplx gp_mean(const ArithFunction& f, i64 N) { return detail::sum_values(f) / static_cast<double>(N); }

struct GPInner {
    cplx inner;
    double norm_product;
    double scale;
    bool holds;
};

// <(f_omega)> of dimension k = log2(#functions) and the Gowers-Cauchy-Schwarz bound.
inline GPInner gp_inner_product(const std::vector<ArithFunction>& fs, i64 N, const std::vector<SymmetricMeasure>& measures,
                                const GPOptions& opt = {}) {
    const int k = static_cast<int>(measures.size());
    if (fs.size() != (size_t{1} << k)) throw DomainError("need 2^k functions for k measures");
    require(N >= 1, "N must be positive");
    const i64 den = detail::common_den(measures);
    std::vector<SymmetricMeasure> ms;
    for (const auto& m : measures) ms.push_back(m.with_den(den));
    std::vector<ArithFunction> gs;
    for (const auto& f : fs) gs.push_back(detail::to_grid(f, den));
    double tuples = 1;
    for (const auto& m : ms) tuples *= static_cast<double>(m.support_size() * m.support_size());
    if (tuples * static_cast<double>(gs[0].size() + 1) * static_cast<double>(fs.size()) > opt.budget)
        throw CapacityError("Gowers-Peluse inner product exceeds budget");

    KahanSumC acc;
    std::vector<size_t> ia(k, 0), ib(k, 0);
    std::vector<i64> h(k), hp(k);
    for (;;) {
        double w = 1;
        i64 hsum = 0;
        for (int i = 0; i < k; ++i) {
            h[i] = ms[i].atoms[ia[i]].first;
            hp[i] = ms[i].atoms[ib[i]].first;
            w *= ms[i].atoms[ia[i]].second * ms[i].atoms[ib[i]].second;
            hsum += h[i];
        }
        if (!gs[0].empty()) {
            for (i64 x = gs[0].lo - hsum; x < gs[0].hi() - hsum; ++x) {
                cplx prod{1, 0};
                for (size_t om = 0; om < gs.size() && prod != cplx{}; ++om) {
                    i64 pt = x;
                    for (int i = 0; i < k; ++i) pt += (om >> i & 1) ? hp[i] : h[i];
                    cplx v = gs[om](pt);
                    if (std::popcount(om) % 2) v = std::conj(v);
                    prod *= v;
                }
                if (prod != cplx{}) acc.add(w * prod);
            }
        }
        int i = 0;
        for (; i < k; ++i) {
            if (++ib[i] < ms[i].support_size()) break;
            ib[i] = 0;
            if (++ia[i] < ms[i].support_size()) break;
            ia[i] = 0;
        }
        if (i == k) break;
    }
    GPInner r;
    r.inner = acc.value() / static_cast<double>(N);
    r.norm_product = 1;
    for (const auto& f : fs) r.norm_product *= std::pow(gp_norm_power(f, N, measures, opt).value, 1.0 / static_cast<double>(fs.size()));
    double sc = fs[0].l1();
    for (size_t i = 1; i < fs.size(); ++i) sc *= fs[i].linf();
    r.scale = sc / static_cast<double>(N);
    r.holds = std::abs(r.inner) <= r.norm_product + 1e-9 * std::max(r.scale, 1e-300);
    return r;
}

inline void require_gp_support(const ArithFunction& f, i64 N, const std::vector<SymmetricMeasure>& ms) {
    if (!f.one_bounded()) throw DomainError("f must be 1-bounded");
    if (!f.supported_in(-N, N)) throw DomainError("f must be supported on [-N, N]");
    for (const auto& m : ms)
        if (m.max_abs() > static_cast<double>(N)) throw DomainError("measures must be supported on [-N, N]");
}

struct MonotonicityCheck {
    double lhs;   // ||f||^{2^k} with mu_1..mu_k
    double rhs;   // |stage k-1 value|^2 / (2k + 3)
    bool pass;
};

inline MonotonicityCheck gp_monotonicity_check(const ArithFunction& f, i64 N, const std::vector<SymmetricMeasure>& measures,
                                               const GPOptions& opt = {}) {
    const int k = static_cast<int>(measures.size());
    require(k >= 1, "monotonicity needs at least one measure");
    require_gp_support(f, N, measures);
    const double lhs = gp_norm_power(f, N, measures, opt).value;
    const std::vector<SymmetricMeasure> prev(measures.begin(), measures.end() - 1);
    const double lower = k == 1 ? std::abs(gp_mean(f, N)) : gp_norm_power(f, N, prev, opt).value;
    const double rhs = lower * lower / (2.0 * k + 3.0);
    const double scale = f.l1() * std::pow(f.linf(), (1 << k) - 1) / static_cast<double>(N);
    return {lhs, rhs, lhs >= rhs - 1e-9 * std::max(scale, 1e-300)};
}

struct U2ChainResult {
    double delta;       // ||f||^2_{U_GP[N; mu]}
    double u2_power;    // ||f||^4_{U^2(Z)}
    double bound;       // delta^2 N^3 / T
    bool pass;
};

// ||f||^4_{U^2(Z)} >= delta^2 N^3 / T whenever ||mu||_2^2 <= T/N.
inline U2ChainResult u2_from_gp_chain(const ArithFunction& f, i64 N, const SymmetricMeasure& mu, double T) {
    require_gp_support(f, N, {mu});
    if (l2_norm_sq(mu) > T / static_cast<double>(N) * (1 + 1e-12)) throw DomainError("||mu||_2^2 exceeds T/N");
    U2ChainResult r;
    r.delta = gp_norm_power(f, N, {mu}).value;
    r.u2_power = uk_norm_power(f, 2);
    const double n = static_cast<double>(N);
    r.bound = r.delta * r.delta * n * n * n / T;
    r.pass = r.u2_power >= r.bound * (1 - 1e-9) - 1e-12;
    return r;
}

struct ProgressionSumReport {
    bool ratio_ok = false;       // |a| >= eta|b| and |b| >= eta|a|
    bool gcd_ok = false;         // gcd(Ma, Mb) <= 1/eta
    bool size_ok = false;        // N >= Q^2 / eta^3
    bool intervals_ok = false;   // I1, I2 inside [-N/(eta Q), N/(eta Q)]
    double Q = 0;
    double hypothesis_value = 0; // |sum_{x in I1, y in I2} f(ax + by)|
    double hypothesis_threshold = 0;  // eta N^2 / Q^2
    bool hypothesis_holds = false;
    double u2_normalized = 0;    // ||f||_{U^2[N]}
};

// a = a_num / M and b = b_num / M.
inline ProgressionSumReport progression_sum_experiment(const ArithFunction& f, i64 N, i64 a_num, i64 b_num, i64 M, std::pair<i64, i64> I1,
                                        std::pair<i64, i64> I2, double eta) {
    require(M >= 1 && a_num != 0 && b_num != 0, "need M >= 1 and nonzero a, b");
    require(eta > 0 && eta < 1, "eta must lie in (0, 1)");
    ProgressionSumReport r;
    const double a = static_cast<double>(a_num) / static_cast<double>(M);
    const double b = static_cast<double>(b_num) / static_cast<double>(M);
    r.ratio_ok = std::fabs(a) >= eta * std::fabs(b) && std::fabs(b) >= eta * std::fabs(a);
    r.gcd_ok = static_cast<double>(gcd_i(a_num, b_num)) <= 1 / eta;
    r.Q = std::max(std::fabs(a), std::fabs(b));
    const double n = static_cast<double>(N);
    r.size_ok = n >= r.Q * r.Q / (eta * eta * eta);
    const double R = n / (eta * r.Q);
    auto inside = [&](std::pair<i64, i64> I) { return I.first <= I.second && I.first >= -R && I.second <= R; };
    r.intervals_ok = inside(I1) && inside(I2);
    KahanSumC s;
    for (i64 x = I1.first; x <= I1.second; ++x)
        for (i64 y = I2.first; y <= I2.second; ++y) s.add(f.at(a_num * x + b_num * y, M));
    r.hypothesis_value = std::abs(s.value());
    r.hypothesis_threshold = eta * n * n / (r.Q * r.Q);
    r.hypothesis_holds = r.hypothesis_value >= r.hypothesis_threshold;
    r.u2_normalized = uk_norm_normalized(f, 2, N);
    return r;
}

// Level-t graph system over s measure slots: V_j subset [t], E_j unordered pairs of [t].
struct GraphSystem {
    int t = 1;
    int s = 1;
    std::vector<std::set<int>> V;
    std::vector<std::set<std::pair<int, int>>> E;

    static std::pair<int, int> edge(int v, int w) { return {std::min(v, w), std::max(v, w)}; }

    // V_j = {1}, E_j empty.
    static GraphSystem vertex_complete(int s) {
        GraphSystem g;
        g.t = 1;
        g.s = s;
        g.V.assign(s, {1});
        g.E.assign(s, {});
        return g;
    }
    // V_j empty, E_j all pairs of [t].
    static GraphSystem edge_complete(int s, int t) {
        GraphSystem g;
        g.t = t;
        g.s = s;
        g.V.assign(s, {});
        g.E.assign(s, {});
        for (auto& e : g.E)
            for (int v = 1; v <= t; ++v)
                for (int w = v + 1; w <= t; ++w) e.insert({v, w});
        return g;
    }
    bool valid() const {
        if (static_cast<int>(V.size()) != s || static_cast<int>(E.size()) != s) return false;
        for (int j = 0; j < s; ++j) {
            for (int v : V[j])
                if (v < 1 || v > t) return false;
            for (auto [v, w] : E[j])
                if (v < 1 || w > t || v >= w) return false;
        }
        return true;
    }
    size_t measure_count() const {
        size_t c = 0;
        for (int j = 0; j < s; ++j) c += V[j].size() + E[j].size();
        return c;
    }
    friend bool operator==(const GraphSystem&, const GraphSystem&) = default;
};

// Duplication along (k, u), with k in [s] and u in V_k (both 1-based).
inline GraphSystem graph_duplicate(const GraphSystem& G, int k, int u) {
    if (k < 1 || k > G.s) throw DomainError("slot index out of range");
    if (!G.V[k - 1].count(u)) throw DomainError("duplication vertex not in V_k");
    GraphSystem H;
    H.t = G.t + 1;
    H.s = G.s;
    H.V.assign(G.s, {});
    H.E.assign(G.s, {});
    const int nv = G.t + 1;
    for (int j = 1; j <= G.s; ++j) {
        auto& V = H.V[j - 1];
        if (j != k) {
            for (int v : G.V[j - 1])
                if (v != u) V.insert(v);
            if (G.V[j - 1].count(u)) {
                V.insert(u);
                V.insert(nv);
            }
        } else {
            V = G.V[j - 1];
            V.erase(u);
        }
        for (auto [v, w] : G.E[j - 1]) {
            if (v != u && w != u) {
                H.E[j - 1].insert({v, w});
            } else {
                const int other = v == u ? w : v;
                H.E[j - 1].insert(GraphSystem::edge(other, u));
                H.E[j - 1].insert(GraphSystem::edge(other, nv));
            }
        }
    }
    H.E[k - 1].insert(GraphSystem::edge(u, nv));
    return H;
}

// Adds edges on the same vertex set [t].
inline GraphSystem graph_enlarge(const GraphSystem& G, int j, const std::vector<std::pair<int, int>>& edges) {
    if (j < 1 || j > G.s) throw DomainError("slot index out of range");
    GraphSystem H = G;
    for (auto [v, w] : edges) {
        if (v < 1 || w < 1 || v > G.t || w > G.t || v == w) throw DomainError("edge outside [t]");
        H.E[j - 1].insert(GraphSystem::edge(v, w));
    }
    return H;
}

// families[j][i] = mu_{(j+1) i}. Returns mu_{j i_v} for v in V_j and mu_{j i_v} * mu_{j i_w} for {v,w} in E_j.
inline std::vector<SymmetricMeasure> graph_measures(const GraphSystem& G,
                                                    const std::vector<std::vector<SymmetricMeasure>>& families,
                                                    const std::vector<size_t>& tuple) {
    if (static_cast<int>(families.size()) != G.s) throw DomainError("family count differs from s");
    if (static_cast<int>(tuple.size()) != G.t) throw DomainError("tuple length differs from level");
    std::vector<SymmetricMeasure> out;
    for (int j = 0; j < G.s; ++j) {
        for (int v : G.V[j]) out.push_back(families[j].at(tuple[v - 1]));
        for (auto [v, w] : G.E[j]) out.push_back(convolve(families[j].at(tuple[v - 1]), families[j].at(tuple[w - 1])));
    }
    return out;
}

struct ConcatLevel {
    int level;
    size_t measures;
    double average;   // E_{i_1..i_t} ||f||^bullet over Omega^Gamma
};

struct ConcatReport {
    double hypothesis;              // E_i ||f||^bullet_{U_GP[N; Omega_i]}
    std::vector<ConcatLevel> levels;  // successive duplications
    double completed = 0;           // edge-complete system at level t
    int t = 0;
    double max_identity_residual = 0;  // worst pair-versus-convolution residual over all evaluations
    double graph_residual = 0;         // single-edge system against a direct convolved-measure evaluation
    bool identities_pass = false;
};

// Averages of ||f||^bullet over I^level for each graph system in the
// duplication sequence from the vertex-complete system, then for the
// edge-complete system at level t (default 2^s).
inline ConcatReport concat_experiment(const ArithFunction& f, i64 N,
                                      const std::vector<std::vector<SymmetricMeasure>>& families, int m = 2,
                                      std::optional<int> t_opt = std::nullopt, const GPOptions& opt = {}) {
    if (m != 2) throw DomainError("only m = 2 is supported");
    const int s = static_cast<int>(families.size());
    require(s >= 1, "need at least one measure family");
    const size_t I = families[0].size();
    require(I >= 1, "empty index set");
    for (const auto& fam : families)
        if (fam.size() != I) throw DomainError("families must share one index set");
    const int t = t_opt ? *t_opt : (1 << s);
    require(t >= 1 && t <= 8, "level t must lie in [1, 8]");

    ConcatReport rep;
    rep.t = t;
    auto average = [&](const GraphSystem& G) {
        double total = std::pow(static_cast<double>(I), G.t);
        if (total > 1e6) throw CapacityError("too many index tuples");
        std::vector<size_t> tup(G.t, 0);
        KahanSumD acc;
        for (;;) {
            auto ms = graph_measures(G, families, tup);
            auto v = ms.empty() ? GPValue{std::abs(gp_mean(f, N)), std::abs(gp_mean(f, N)), 0, 0, false, 0}
                                : gp_norm_power(f, N, ms, opt);
            rep.max_identity_residual = std::max(rep.max_identity_residual, v.rel_diff);
            acc.add(v.value);
            int i = 0;
            for (; i < G.t; ++i) {
                if (++tup[i] < I) break;
                tup[i] = 0;
            }
            if (i == G.t) break;
        }
        return acc.value() / total;
    };

    GraphSystem G = GraphSystem::vertex_complete(s);
    rep.hypothesis = average(G);
    rep.levels.push_back({G.t, G.measure_count(), rep.hypothesis});
    while (G.t < t) {
        int k = -1, u = -1;
        for (int j = 0; j < s && k < 0; ++j)
            if (!G.V[j].empty()) {
                k = j + 1;
                u = *G.V[j].begin();
            }
        if (k < 0) break;
        G = graph_duplicate(G, k, u);
        rep.levels.push_back({G.t, G.measure_count(), average(G)});
    }
    rep.completed = average(GraphSystem::edge_complete(s, t));

    // A single edge {1,2} in slot 1 must reproduce the convolved measure directly.
    GraphSystem one;
    one.t = 2;
    one.s = s;
    one.V.assign(s, {});
    one.E.assign(s, {});
    one.E[0].insert({1, 2});
    const std::vector<size_t> tup{0, I > 1 ? size_t{1} : size_t{0}};
    const auto via_graph = gp_norm_power(f, N, graph_measures(one, families, tup), opt).value;
    const auto direct = gp_norm_power(f, N, {convolve(families[0][tup[0]], families[0][tup[1]])}, opt).value;
    const double sc = std::max(f.l1() * std::pow(f.linf(), 1) / static_cast<double>(N), 1e-300);
    rep.graph_residual = std::fabs(via_graph - direct) / sc;
    rep.identities_pass = rep.max_identity_residual <= 1e-9 && rep.graph_residual <= 1e-9;
    return rep;
}

struct NestingReport {
    double u2;     // ||f||_{U^2[N]}
    double u3;     // ||f||_{U^3[N]}
    double ratio;  // u2 / u3; no constant is asserted
};

inline NestingReport gowers_nesting_report(const ArithFunction& f, i64 N, unsigned threads = 1) {
    const double u2 = uk_norm_normalized(f, 2, N, threads);
    const double u3 = uk_norm_normalized(f, 3, N, threads);
    return {u2, u3, u3 > 0 ? u2 / u3 : 0.0};
}

}  // namespace bqp
