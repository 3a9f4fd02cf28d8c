#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "bqp/arith.hpp"
#include "bqp/parallel.hpp"

namespace bqp {

// Kronecker symbol (a|b) for arbitrary integers.
inline int kronecker(i64 a, i64 b) {
    static constexpr int tab[8] = {0, 1, 0, -1, 0, -1, 0, 1};
    if (b == 0) return (a == 1 || a == -1) ? 1 : 0;
    if ((a & 1) == 0 && (b & 1) == 0) return 0;
    int v = 0;
    while ((b & 1) == 0) {
        ++v;
        b /= 2;
    }
    int k = (v & 1) ? tab[a & 7] : 1;
    if (b < 0) {
        b = -b;
        if (a < 0) k = -k;
    }
    for (;;) {
        if (a == 0) return b > 1 ? 0 : k;
        v = 0;
        while ((a & 1) == 0) {
            ++v;
            a /= 2;
        }
        if (v & 1) k *= tab[b & 7];
        if (a & b & 2) k = -k;
        i64 r = a < 0 ? -a : a;
        a = b % r;
        b = r;
    }
}

// x with x^2 = a (mod p), p an odd prime and a a quadratic residue.
inline u64 sqrt_mod(u64 a, u64 p) {
    a %= p;
    if (a == 0) return 0;
    if (p % 4 == 3) return powmod(a, (p + 1) / 4, p);
    u64 q = p - 1;
    int s = 0;
    while ((q & 1) == 0) {
        q >>= 1;
        ++s;
    }
    u64 z = 2;
    while (powmod(z, (p - 1) / 2, p) != p - 1) ++z;
    u64 m = s, c = powmod(z, q, p), t = powmod(a, q, p), r = powmod(a, (q + 1) / 2, p);
    while (t != 1) {
        u64 i = 0, tt = t;
        while (tt != 1) {
            tt = mulmod(tt, tt, p);
            ++i;
        }
        u64 b = c;
        for (u64 j = 0; j + i + 1 < m; ++j) b = mulmod(b, b, p);
        m = i;
        c = mulmod(b, b, p);
        t = mulmod(t, c, p);
        r = mulmod(r, b, p);
    }
    return r;
}

struct ExtGcd {
    i64 u, v, d;
};

// u*x + v*y = d = gcd(x, y) >= 0.
inline ExtGcd ext_gcd(i64 x, i64 y) {
    i64 old_r = x, r = y, old_s = 1, s = 0, old_t = 0, t = 1;
    while (r != 0) {
        i64 q = old_r / r;
        std::tie(old_r, r) = std::make_tuple(r, old_r - q * r);
        std::tie(old_s, s) = std::make_tuple(s, old_s - q * s);
        std::tie(old_t, t) = std::make_tuple(t, old_t - q * t);
    }
    if (old_r < 0) return {-old_s, -old_t, -old_r};
    return {old_s, old_t, old_r};
}

inline i64 floor_mod(i64 a, i64 m) {
    i64 r = a % m;
    return r < 0 ? r + m : r;
}

// Positive definite binary quadratic form ax^2 + bxy + cy^2.
struct QuadForm {
    i64 a, b, c;
    i64 disc() const { return b * b - 4 * a * c; }
    bool reduced() const {
        i64 ab = b < 0 ? -b : b;
        if (!(ab <= a && a <= c)) return false;
        if ((ab == a || a == c) && b < 0) return false;
        return true;
    }
    friend bool operator==(const QuadForm&, const QuadForm&) = default;
};

inline QuadForm reduce(QuadForm f) {
    const i64 D = f.disc();
    auto normalize = [&](QuadForm& g) {
        if (-g.a < g.b && g.b <= g.a) return;
        i64 r = floor_mod(g.b, 2 * g.a);
        if (r > g.a) r -= 2 * g.a;
        g.b = r;
        g.c = static_cast<i64>((static_cast<i128>(r) * r - D) / (4 * static_cast<i128>(g.a)));
    };
    normalize(f);
    while (f.a > f.c) {
        f = {f.c, -f.b, f.a};
        normalize(f);
    }
    if (f.a == f.c && f.b < 0) f.b = -f.b;
    return f;
}

// Gauss composition of forms of equal discriminant, reduced.
inline QuadForm compose(QuadForm f1, QuadForm f2) {
    const i64 D = f1.disc();
    if (f2.disc() != D) throw DomainError("composition of forms with different discriminants");
    if (f1.a > f2.a) std::swap(f1, f2);
    const i64 s = (f1.b + f2.b) / 2;
    const i64 n = f2.b - s;
    i64 y1, d;
    if (f2.a % f1.a == 0) {
        y1 = 0;
        d = f1.a;
    } else {
        auto g = ext_gcd(f2.a, f1.a);
        y1 = g.u;
        d = g.d;
    }
    i64 x2, y2, d1;
    if (s % d == 0) {
        y2 = -1;
        x2 = 0;
        d1 = d;
    } else {
        auto g = ext_gcd(s, d);
        x2 = g.u;
        y2 = -g.v;
        d1 = g.d;
    }
    const i64 v1 = f1.a / d1, v2 = f2.a / d1;
    const i128 rr = (static_cast<i128>(y1) * y2 * n - static_cast<i128>(x2) * f2.c) % v1;
    const i64 r = static_cast<i64>(rr < 0 ? rr + v1 : rr);
    const i64 b3 = f2.b + 2 * v2 * r;
    const i64 a3 = v1 * v2;
    const i128 num = static_cast<i128>(b3) * b3 - D;
    if (num % (4 * static_cast<i128>(a3)) != 0) throw IdentityError("composition produced a non-integral form");
    return reduce({a3, b3, static_cast<i64>(num / (4 * static_cast<i128>(a3)))});
}

enum class Splitting { Split, Inert, Ramified };

inline const char* to_string(Splitting s) {
    switch (s) {
        case Splitting::Split: return "split";
        case Splitting::Inert: return "inert";
        default: return "ramified";
    }
}

// Invariants of K = Q(sqrt(-n)) with n = n_star * r^2.
struct FieldInvariants {
    i64 n = 0;
    i64 n_star = 0;
    i64 r = 0;
    int omega_den = 1;  // omega = 1 / omega_den
    i64 delta = 0;
    int unit_count = 0;
    i64 class_number = 0;
    std::vector<QuadForm> forms;       // reduced forms, forms[0] principal
    std::vector<std::uint32_t> table;  // table[i*h + j] = index of forms[i]*forms[j]
    std::vector<std::uint32_t> inverse;

    double omega() const { return 1.0 / omega_den; }

    std::uint32_t class_of(const QuadForm& f) const {
        QuadForm g = reduce(f);
        auto it = lookup_.find(key(g.a, g.b));
        if (it == lookup_.end()) throw IdentityError("form not found in class group");
        return it->second;
    }
    std::uint32_t mul(std::uint32_t i, std::uint32_t j) const { return table[static_cast<size_t>(i) * class_number + j]; }
    std::uint32_t pow(std::uint32_t i, u64 e) const {
        std::uint32_t acc = 0, base = i;
        while (e) {
            if (e & 1) acc = mul(acc, base);
            base = mul(base, base);
            e >>= 1;
        }
        return acc;
    }

    void index_forms() {
        lookup_.clear();
        for (size_t i = 0; i < forms.size(); ++i) lookup_[key(forms[i].a, forms[i].b)] = static_cast<std::uint32_t>(i);
    }

  private:
    static u64 key(i64 a, i64 b) { return (static_cast<u64>(a) << 32) ^ static_cast<u64>(b + (i64{1} << 31)); }
    std::unordered_map<u64, std::uint32_t> lookup_;
};

// Reduced primitive forms of discriminant D < 0, sorted by (a, b).
inline std::vector<QuadForm> reduced_forms(i64 D) {
    std::vector<QuadForm> out;
    const i64 absD = -D;
    for (i64 a = 1; 3 * a * a <= absD; ++a) {
        for (i64 b = -a + 1; b <= a; ++b) {
            if (((b - D) & 1) != 0) continue;
            i64 num = b * b - D;
            if (num % (4 * a)) continue;
            i64 c = num / (4 * a);
            if (c < a) continue;
            if (b < 0 && a == c) continue;
            if (gcd_i(gcd_i(a, b), c) != 1) continue;
            out.push_back({a, b, c});
        }
    }
    return out;
}

inline FieldInvariants field_invariants(i64 n) {
    require(n >= 1, "field_invariants needs n >= 1");
    if (n > 10'000'000) throw CapacityError("n above 1e7");
    FieldInvariants inv;
    inv.n = n;
    inv.n_star = 1;
    inv.r = 1;
    for (auto [p, e] : factorize(static_cast<u64>(n))) {
        if (e & 1) inv.n_star *= static_cast<i64>(p);
        for (int k = 0; k < e / 2; ++k) inv.r *= static_cast<i64>(p);
    }
    inv.omega_den = (inv.n_star % 4 == 3) ? 2 : 1;
    inv.delta = inv.omega_den == 1 ? -4 * inv.n_star : -inv.n_star;
    inv.unit_count = inv.n_star == 1 ? 4 : (inv.n_star == 3 ? 6 : 2);
    inv.forms = reduced_forms(inv.delta);
    inv.class_number = static_cast<i64>(inv.forms.size());
    if (inv.class_number > 4096) throw CapacityError("class number above 4096");
    inv.index_forms();
    const size_t h = inv.forms.size();
    inv.table.resize(h * h);
    inv.inverse.resize(h);
    for (size_t i = 0; i < h; ++i) {
        for (size_t j = i; j < h; ++j) {
            auto k = inv.class_of(compose(inv.forms[i], inv.forms[j]));
            inv.table[i * h + j] = inv.table[j * h + i] = k;
        }
        const auto& f = inv.forms[i];
        inv.inverse[i] = inv.class_of({f.a, -f.b, f.c});
    }
    return inv;
}

inline int kronecker(const FieldInvariants& inv, u64 m) { return kronecker(inv.delta, static_cast<i64>(m)); }

inline Splitting splitting_type(const FieldInvariants& inv, u64 p) {
    if (!is_prime_64(p)) throw DomainError("splitting_type needs a prime");
    int k = kronecker(inv.delta, static_cast<i64>(p));
    return k == 1 ? Splitting::Split : (k == -1 ? Splitting::Inert : Splitting::Ramified);
}

// L(1, chi_Delta) = 2 pi h / (|O^*| sqrt|Delta|).
inline double l_one_chi(const FieldInvariants& inv) {
    return 2.0 * std::numbers::pi * static_cast<double>(inv.class_number) /
           (inv.unit_count * std::sqrt(static_cast<double>(-inv.delta)));
}

// #{(x, y) in Z^2 : x^2 + n y^2 = t}.
inline u64 rep_count(const FieldInvariants& inv, u64 t) {
    if (t > 1'000'000'000'000ULL) throw CapacityError("rep_count above 1e12");
    const u64 n = static_cast<u64>(inv.n);
    u64 count = 0;
    for (u64 y = 0; n * y * y <= t; ++y) {
        u64 rest = t - n * y * y;
        u64 s = isqrt(rest);
        if (s * s != rest) continue;
        u64 xs = s == 0 ? 1 : 2;
        u64 ys = y == 0 ? 1 : 2;
        count += xs * ys;
    }
    return count;
}

struct IdealCount {
    u64 count;
    double density;
};

// #{ideals of norm <= X} = sum_{d <= X} (Delta|d) floor(X/d).
inline IdealCount ideal_count(const FieldInvariants& inv, u64 X) {
    require(X >= 1, "ideal_count needs X >= 1");
    if (X > 1'000'000'000ULL) throw CapacityError("ideal_count above 1e9");
    i64 total = 0;
    for (u64 d = 1; d <= X; ++d) total += kronecker(inv.delta, static_cast<i64>(d)) * static_cast<i64>(X / d);
    return {static_cast<u64>(total), static_cast<double>(total) / static_cast<double>(X)};
}

// sum over prime ideals of norm <= X of 1/N(p).
inline double prime_ideal_reciprocal_sum(const FieldInvariants& inv, u64 X) {
    require(X >= 2, "prime_ideal_reciprocal_sum needs X >= 2");
    PrimeTable pt(X);
    KahanSumD acc;
    pt.for_each_prime(2, X, [&](u64 p) {
        int k = kronecker(inv.delta, static_cast<i64>(p));
        double dp = static_cast<double>(p);
        if (k == 1)
            acc.add(2.0 / dp);
        else if (k == 0)
            acc.add(1.0 / dp);
        else if (p <= X / p)
            acc.add(1.0 / (dp * dp));
    });
    return acc.value();
}

}  // namespace bqp
