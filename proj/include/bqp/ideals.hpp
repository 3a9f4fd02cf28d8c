#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bqp/arith.hpp"
#include "bqp/parallel.hpp"
#include "bqp/quadfield.hpp"

namespace bqp {

enum class PrimeKind : std::uint8_t { Split = 0, Inert = 1, Ramified = 2 };

// A prime ideal of O_K. For split and ramified primes the ideal is
// pZ + ((-b + sqrt(Delta))/2)Z, equivalently the class of the form (p, b, c).
struct PrimeIdealTag {
    u64 p = 0;
    PrimeKind kind = PrimeKind::Split;
    bool conjugate = false;
    u64 norm = 0;
    i64 b = 0;
    u64 root = 0;  // r = sqrt(-n) mod the ideal, as a residue mod p
    std::uint32_t class_index = 0;

    auto order_key() const { return std::make_tuple(norm, p, static_cast<int>(kind), conjugate); }
};

inline constexpr std::uint32_t kNoTag = std::numeric_limits<std::uint32_t>::max();

// All prime ideals of norm <= X, strictly increasing in order_key.
class PrimeIdealTable {
  public:
    PrimeIdealTable(const FieldInvariants& inv, u64 X) : inv_(&inv), X_(X) {
        if (X > 400'000'000ULL) throw CapacityError("prime ideal table above 4e8");
        if (X < 2) return;
        PrimeTable pt(X);
        const i64 D = inv.delta;
        pt.for_each_prime(2, X, [&](u64 p) {
            const int k = kronecker(D, static_cast<i64>(p));
            if (k == -1) {
                if (p <= X / p) tags_.push_back(make_inert(p));
                return;
            }
            if (k == 0) {
                tags_.push_back(make_tag(p, ramified_b(p), PrimeKind::Ramified, false));
                return;
            }
            auto [b0, b1] = split_bs(p);
            tags_.push_back(make_tag(p, b0, PrimeKind::Split, false));
            tags_.push_back(make_tag(p, b1, PrimeKind::Split, true));
        });
        std::stable_sort(tags_.begin(), tags_.end(),
                         [](const PrimeIdealTag& a, const PrimeIdealTag& b) { return a.order_key() < b.order_key(); });
        for (std::uint32_t i = 0; i < tags_.size(); ++i) {
            auto it = first_.find(tags_[i].p);
            if (it == first_.end()) first_.emplace(tags_[i].p, i);
        }
    }

    const FieldInvariants& field() const { return *inv_; }
    u64 X() const { return X_; }
    size_t size() const { return tags_.size(); }
    const PrimeIdealTag& operator[](size_t i) const { return tags_[i]; }
    const std::vector<PrimeIdealTag>& tags() const { return tags_; }

    // First tag above p (the non-conjugate one when split), or kNoTag.
    std::uint32_t first_tag_of(u64 p) const {
        auto it = first_.find(p);
        return it == first_.end() ? kNoTag : it->second;
    }

    // Smallest tag index whose norm is >= t (size() if none).
    std::uint32_t first_with_norm_at_least(double t) const {
        auto it = std::partition_point(tags_.begin(), tags_.end(),
                                       [&](const PrimeIdealTag& g) { return static_cast<double>(g.norm) < t; });
        return static_cast<std::uint32_t>(it - tags_.begin());
    }

  private:
    PrimeIdealTag make_inert(u64 p) const {
        PrimeIdealTag t;
        t.p = p;
        t.kind = PrimeKind::Inert;
        t.norm = p * p;
        return t;
    }

    PrimeIdealTag make_tag(u64 p, i64 b, PrimeKind kind, bool conj) const {
        PrimeIdealTag t;
        t.p = p;
        t.kind = kind;
        t.conjugate = conj;
        t.norm = p;
        t.b = b;
        const i64 P = static_cast<i64>(p);
        const i128 c = (static_cast<i128>(b) * b - inv_->delta) / (4 * static_cast<i128>(P));
        t.class_index = inv_->class_of({P, b, static_cast<i64>(c)});
        // sqrt(Delta) = b modulo the ideal, and sqrt(-n) = r sqrt(Delta) / (2 / omega_den).
        // b is even whenever 4 | Delta, so the halving is exact.
        const i64 half = inv_->omega_den == 1 ? b / 2 : b;
        t.root = mulmod(static_cast<u64>(inv_->r) % p, static_cast<u64>(floor_mod(half, P)), p);
        return t;
    }

    std::pair<i64, i64> split_bs(u64 p) const {
        const i64 D = inv_->delta;
        const i64 P = static_cast<i64>(p);
        if (p == 2) return {1, 3};
        u64 t = sqrt_mod(static_cast<u64>(floor_mod(D, P)), p);
        u64 t0 = std::min(t, p - t);
        auto lift = [&](i64 res) {
            i64 b = res;
            if (floor_mod(b - D, 2) != 0) b += P;
            return b;
        };
        return {lift(static_cast<i64>(t0)), lift(P - static_cast<i64>(t0))};
    }

    i64 ramified_b(u64 p) const {
        const i64 D = inv_->delta;
        const i128 m = 4 * static_cast<i128>(p);
        for (i64 b = 0; b < 2 * static_cast<i64>(p); ++b) {
            if (floor_mod(b - D, 2) != 0) continue;
            i128 v = (static_cast<i128>(b) * b - D) % m;
            if (v == 0) return b;
        }
        throw IdentityError("no square root of the discriminant at a ramified prime");
    }

    const FieldInvariants* inv_;
    u64 X_;
    std::vector<PrimeIdealTag> tags_;
    std::unordered_map<u64, std::uint32_t> first_;
};

// Prime ideals of norm <= X in increasing order key.
inline std::vector<PrimeIdealTag> enumerate_prime_ideals(const FieldInvariants& inv, u64 X) {
    return PrimeIdealTable(inv, X).tags();
}

struct IdealFactor {
    std::uint32_t tag;
    std::uint32_t exp;
    friend bool operator==(const IdealFactor&, const IdealFactor&) = default;
    friend auto operator<=>(const IdealFactor&, const IdealFactor&) = default;
};

// Product of tagged prime ideals; factors sorted by tag index. Tag indices
// refer to one PrimeIdealTable.
struct FormalIdeal {
    std::vector<IdealFactor> factors;
    u128 norm = 1;

    bool is_unit() const { return factors.empty(); }
    friend bool operator==(const FormalIdeal& a, const FormalIdeal& b) { return a.factors == b.factors; }
    friend bool operator<(const FormalIdeal& a, const FormalIdeal& b) {
        if (a.norm != b.norm) return a.norm < b.norm;
        return a.factors < b.factors;
    }
};

struct FormalIdealHash {
    size_t operator()(const FormalIdeal& a) const {
        u64 h = 0x9e3779b97f4a7c15ULL;
        for (auto f : a.factors) {
            h ^= (static_cast<u64>(f.tag) << 8 | f.exp) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return static_cast<size_t>(h);
    }
};

inline u128 ideal_norm(const PrimeIdealTable& t, const std::vector<IdealFactor>& fs) {
    u128 n = 1;
    for (auto f : fs)
        for (std::uint32_t e = 0; e < f.exp; ++e) n *= t[f.tag].norm;
    return n;
}

inline FormalIdeal make_ideal(const PrimeIdealTable& t, std::vector<IdealFactor> fs) {
    std::sort(fs.begin(), fs.end());
    std::vector<IdealFactor> merged;
    for (auto f : fs) {
        if (f.exp == 0) continue;
        if (!merged.empty() && merged.back().tag == f.tag)
            merged.back().exp += f.exp;
        else
            merged.push_back(f);
    }
    FormalIdeal a{std::move(merged), 1};
    a.norm = ideal_norm(t, a.factors);
    return a;
}

inline FormalIdeal ideal_mul(const FormalIdeal& a, const FormalIdeal& b) {
    FormalIdeal c;
    size_t i = 0, j = 0;
    while (i < a.factors.size() || j < b.factors.size()) {
        if (j == b.factors.size() || (i < a.factors.size() && a.factors[i].tag < b.factors[j].tag))
            c.factors.push_back(a.factors[i++]);
        else if (i == a.factors.size() || b.factors[j].tag < a.factors[i].tag)
            c.factors.push_back(b.factors[j++]);
        else {
            c.factors.push_back({a.factors[i].tag, a.factors[i].exp + b.factors[j].exp});
            ++i;
            ++j;
        }
    }
    c.norm = a.norm * b.norm;
    return c;
}

inline bool ideal_divides(const FormalIdeal& d, const FormalIdeal& a) {
    size_t j = 0;
    for (auto f : d.factors) {
        while (j < a.factors.size() && a.factors[j].tag < f.tag) ++j;
        if (j == a.factors.size() || a.factors[j].tag != f.tag || a.factors[j].exp < f.exp) return false;
    }
    return true;
}

// a / d, assuming d | a.
inline FormalIdeal ideal_quotient(const FormalIdeal& a, const FormalIdeal& d) {
    FormalIdeal q;
    size_t j = 0;
    for (auto f : a.factors) {
        std::uint32_t e = f.exp;
        if (j < d.factors.size() && d.factors[j].tag == f.tag) e -= d.factors[j++].exp;
        if (e) q.factors.push_back({f.tag, e});
    }
    q.norm = a.norm / d.norm;
    return q;
}

inline std::uint32_t ideal_class(const PrimeIdealTable& t, const FormalIdeal& a) {
    const auto& inv = t.field();
    std::uint32_t c = 0;
    for (auto f : a.factors) c = inv.mul(c, inv.pow(t[f.tag].class_index, f.exp));
    return c;
}

// Lambda_K(a) = log N(p) when a = p^k, else 0.
inline double lambda_K(const PrimeIdealTable& t, const FormalIdeal& a) {
    if (a.factors.size() != 1) return 0.0;
    return std::log(static_cast<double>(t[a.factors[0].tag].norm));
}

// All divisors of a, in lexicographic exponent order.
inline std::vector<FormalIdeal> ideal_divisors(const PrimeIdealTable& t, const FormalIdeal& a) {
    std::vector<FormalIdeal> out{FormalIdeal{}};
    for (auto f : a.factors) {
        const size_t base = out.size();
        for (size_t i = 0; i < base; ++i) {
            FormalIdeal cur = out[i];
            for (std::uint32_t e = 1; e <= f.exp; ++e) {
                if (!cur.factors.empty() && cur.factors.back().tag == f.tag)
                    cur.factors.back().exp = e;
                else
                    cur.factors.push_back({f.tag, e});
                cur.norm *= t[f.tag].norm;
                out.push_back(cur);
            }
        }
    }
    return out;
}

inline std::string ideal_to_string(const PrimeIdealTable& t, const FormalIdeal& a) {
    if (a.is_unit()) return "(1)";
    std::string s;
    for (auto f : a.factors) {
        const auto& g = t[f.tag];
        if (!s.empty()) s += "*";
        s += "P" + std::to_string(g.p);
        if (g.kind == PrimeKind::Split) s += g.conjugate ? "'" : "";
        if (g.kind == PrimeKind::Inert) s += "i";
        if (f.exp > 1) s += "^" + std::to_string(f.exp);
    }
    return s;
}

// Factorization of the principal ideal (x + y sqrt(-n)), whose norm must be
// at most the table bound. The element is written (X + Y sqrt(Delta))/2 and
// valuations are read off from the rational content and the lattice test
// (X + bY)/2 = 0 (mod p) for the split prime pZ + ((-b + sqrt(Delta))/2)Z.
class ElementFactorizer {
  public:
    ElementFactorizer(const PrimeIdealTable& table, const FactorSieve* sieve = nullptr) : t_(&table), sieve_(sieve) {}

    FormalIdeal factor(i64 x, i64 y) const {
        const auto& inv = t_->field();
        const u64 N = static_cast<u64>(static_cast<i128>(x) * x + static_cast<i128>(inv.n) * y * y);
        if (N == 0) throw DomainError("cannot factor the zero element");
        if (N > t_->X()) throw DomainError("element norm above the prime ideal table bound");
        const i64 Y = y * inv.r * inv.omega_den;
        const i64 X2 = 2 * x;
        Factorization nf = sieve_ ? sieve_->factor(N) : factorize(N);
        std::vector<IdealFactor> fs;
        for (auto [p, e] : nf) {
            const std::uint32_t idx = t_->first_tag_of(p);
            if (idx == kNoTag) throw IdentityError("prime missing from ideal table");
            const auto& tag = (*t_)[idx];
            if (tag.kind == PrimeKind::Inert) {
                if (e % 2) throw IdentityError("odd valuation at an inert prime");
                fs.push_back({idx, static_cast<std::uint32_t>(e / 2)});
            } else if (tag.kind == PrimeKind::Ramified) {
                fs.push_back({idx, static_cast<std::uint32_t>(e)});
            } else {
                i64 a = X2, b = Y;
                int c = 0;
                const i64 P = static_cast<i64>(p);
                while (a % P == 0 && b % P == 0 && floor_mod(a / P - (b / P) * floor_mod(inv.delta, 2), 2) == 0) {
                    a /= P;
                    b /= P;
                    ++c;
                }
                const int rest = e - 2 * c;
                std::uint32_t e0 = c, e1 = c;
                if (rest > 0) {
                    i128 v = (static_cast<i128>(a) + static_cast<i128>(tag.b) * b) / 2;
                    if (v % P == 0)
                        e0 += rest;
                    else
                        e1 += rest;
                }
                if (e0) fs.push_back({idx, e0});
                if (e1) fs.push_back({idx + 1, e1});
            }
        }
        return make_ideal(*t_, std::move(fs));
    }

  private:
    const PrimeIdealTable* t_;
    const FactorSieve* sieve_;
};

struct PrincipalEntry {
    FormalIdeal ideal;
    std::vector<std::pair<i64, i64>> gens;
};

// Principal ideals of norm <= X keyed by their integer generators x + y sqrt(-n).
class PrincipalIndex {
  public:
    PrincipalIndex() = default;

    u64 X() const { return X_; }
    i64 n() const { return n_; }
    const std::vector<PrincipalEntry>& entries() const { return entries_; }
    size_t size() const { return entries_.size(); }

    const PrincipalEntry* find(const FormalIdeal& a) const {
        auto it = pos_.find(a);
        return it == pos_.end() ? nullptr : &entries_[it->second];
    }

    u64 generator_count() const {
        u64 c = 0;
        for (const auto& e : entries_) c += e.gens.size();
        return c;
    }

    static constexpr char kMagic[8] = {'B', 'Q', 'P', 'I', 'D', 'X', '0', '1'};
    static constexpr std::uint32_t kVersion = 1;

    void save(const std::string& path) const {
        std::vector<char> buf;
        auto put = [&](const auto& v) {
            const char* p = reinterpret_cast<const char*>(&v);
            buf.insert(buf.end(), p, p + sizeof(v));
        };
        buf.insert(buf.end(), kMagic, kMagic + 8);
        put(kVersion);
        put(n_);
        put(X_);
        put(static_cast<u64>(entries_.size()));
        for (const auto& e : entries_) {
            put(static_cast<std::uint32_t>(e.ideal.factors.size()));
            for (auto f : e.ideal.factors) {
                put(f.tag);
                put(f.exp);
            }
            put(static_cast<std::uint32_t>(e.gens.size()));
            for (auto [x, y] : e.gens) {
                put(x);
                put(y);
            }
        }
        put(checksum(buf.data(), buf.size()));
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!out) throw StateError("cannot write index cache " + path);
    }

    // Empty optional when the file is absent, corrupt or built for other parameters.
    static std::optional<PrincipalIndex> load(const std::string& path, const PrimeIdealTable& t, u64 X) {
        std::ifstream in(path, std::ios::binary);
        if (!in) return std::nullopt;
        std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (buf.size() < 8 + 4 + 8 + 8 + 8 + 8) return std::nullopt;
        const size_t body = buf.size() - 8;
        u64 stored;
        std::memcpy(&stored, buf.data() + body, 8);
        if (stored != checksum(buf.data(), body)) return std::nullopt;
        if (std::memcmp(buf.data(), kMagic, 8) != 0) return std::nullopt;
        size_t off = 8;
        auto get = [&](auto& v) {
            if (off + sizeof(v) > body) throw std::out_of_range("cache truncated");
            std::memcpy(&v, buf.data() + off, sizeof(v));
            off += sizeof(v);
        };
        try {
            std::uint32_t version;
            i64 n;
            u64 x, count;
            get(version);
            get(n);
            get(x);
            get(count);
            if (version != kVersion || n != t.field().n || x != X) return std::nullopt;
            PrincipalIndex idx;
            idx.n_ = n;
            idx.X_ = x;
            idx.entries_.resize(count);
            for (auto& e : idx.entries_) {
                std::uint32_t nf, ng;
                get(nf);
                e.ideal.factors.resize(nf);
                for (auto& f : e.ideal.factors) {
                    get(f.tag);
                    get(f.exp);
                    if (f.tag >= t.size()) return std::nullopt;
                }
                e.ideal.norm = ideal_norm(t, e.ideal.factors);
                get(ng);
                e.gens.resize(ng);
                for (auto& [gx, gy] : e.gens) {
                    get(gx);
                    get(gy);
                }
            }
            if (off != body) return std::nullopt;
            idx.reindex();
            return idx;
        } catch (const std::out_of_range&) {
            return std::nullopt;
        }
    }

    friend PrincipalIndex build_principal_index(const PrimeIdealTable&, u64, unsigned);

  private:
    static u64 checksum(const char* data, size_t len) {
        u64 h = 1469598103934665603ULL;
        for (size_t i = 0; i < len; ++i) {
            h ^= static_cast<unsigned char>(data[i]);
            h *= 1099511628211ULL;
        }
        return h;
    }
    void reindex() {
        pos_.clear();
        pos_.reserve(entries_.size());
        for (std::uint32_t i = 0; i < entries_.size(); ++i) pos_.emplace(entries_[i].ideal, i);
    }

    i64 n_ = 0;
    u64 X_ = 0;
    std::vector<PrincipalEntry> entries_;
    std::unordered_map<FormalIdeal, std::uint32_t, FormalIdealHash> pos_;
};

inline constexpr u64 kPrincipalIndexMaxX = 100'000'000ULL;

inline PrincipalIndex build_principal_index(const PrimeIdealTable& t, u64 X, unsigned threads = 0) {
    if (X > kPrincipalIndexMaxX) throw CapacityError("principal index above 1e8");
    if (X > t.X()) throw DomainError("prime ideal table smaller than index bound");
    const auto& inv = t.field();
    FactorSieve sieve(std::max<u64>(X, 2));
    ElementFactorizer fz(t, &sieve);
    const i64 xmax = static_cast<i64>(isqrt(X));
    const i64 n = inv.n;
    struct Rec {
        FormalIdeal ideal;
        i64 x, y;
    };
    const size_t stripes = static_cast<size_t>(2 * xmax + 1);
    const size_t chunks = std::min<size_t>(stripes, 256);
    std::vector<std::vector<Rec>> parts(chunks);
    parallel_chunks(chunks, resolve_threads(threads), [&](size_t c) {
        const i64 lo = -xmax + static_cast<i64>(stripes * c / chunks);
        const i64 hi = -xmax + static_cast<i64>(stripes * (c + 1) / chunks);
        for (i64 x = lo; x < hi; ++x) {
            const u64 rest = X - static_cast<u64>(x * x);
            const i64 ymax = static_cast<i64>(isqrt(rest / static_cast<u64>(n)));
            for (i64 y = -ymax; y <= ymax; ++y) {
                if (x == 0 && y == 0) continue;
                parts[c].push_back({fz.factor(x, y), x, y});
            }
        }
    });
    std::vector<Rec> all;
    size_t total = 0;
    for (auto& p : parts) total += p.size();
    all.reserve(total);
    for (auto& p : parts) {
        for (auto& r : p) all.push_back(std::move(r));
        p.clear();
        p.shrink_to_fit();
    }
    std::sort(all.begin(), all.end(), [](const Rec& a, const Rec& b) {
        if (a.ideal < b.ideal) return true;
        if (b.ideal < a.ideal) return false;
        return std::tie(a.x, a.y) < std::tie(b.x, b.y);
    });
    PrincipalIndex idx;
    idx.n_ = n;
    idx.X_ = X;
    for (auto& r : all) {
        if (idx.entries_.empty() || !(idx.entries_.back().ideal == r.ideal))
            idx.entries_.push_back({std::move(r.ideal), {}});
        idx.entries_.back().gens.emplace_back(r.x, r.y);
    }
    idx.reindex();
    return idx;
}

// Loads the cache when it matches (n, X) and is intact, otherwise rebuilds and rewrites it.
inline PrincipalIndex load_or_build_principal_index(const PrimeIdealTable& t, u64 X, const std::string& cache_path,
                                                    unsigned threads = 0, bool* rebuilt = nullptr) {
    if (!cache_path.empty()) {
        if (auto idx = PrincipalIndex::load(cache_path, t, X)) {
            if (rebuilt) *rebuilt = false;
            return std::move(*idx);
        }
    }
    PrincipalIndex idx = build_principal_index(t, X, threads);
    if (!cache_path.empty()) idx.save(cache_path);
    if (rebuilt) *rebuilt = true;
    return idx;
}

struct IndexAudit {
    u64 lattice_points;
    u64 registered;
    u64 class_violations;
    u64 norm_violations;
};

// Conservation, class consistency and generator norms of a principal index.
inline IndexAudit audit_principal_index(const PrimeIdealTable& t, const PrincipalIndex& idx) {
    IndexAudit a{0, idx.generator_count(), 0, 0};
    const i64 n = t.field().n;
    const i64 xmax = static_cast<i64>(isqrt(idx.X()));
    for (i64 x = -xmax; x <= xmax; ++x) {
        const u64 rest = idx.X() - static_cast<u64>(x * x);
        const i64 ymax = static_cast<i64>(isqrt(rest / static_cast<u64>(n)));
        a.lattice_points += static_cast<u64>(2 * ymax + 1) - (x == 0 ? 1 : 0);
    }
    for (const auto& e : idx.entries()) {
        if (ideal_class(t, e.ideal) != 0) ++a.class_violations;
        for (auto [x, y] : e.gens)
            if (static_cast<u128>(x * x + n * y * y) != e.ideal.norm) ++a.norm_violations;
    }
    return a;
}

// Every ideal of norm <= X, stored flat and sorted by (norm, factors).
class IdealSet {
  public:
    IdealSet(const PrimeIdealTable& t, u64 X) : t_(&t), X_(X) {
        if (X > 10'000'000ULL) throw CapacityError("ideal enumeration above 1e7");
        if (X > t.X()) throw DomainError("prime ideal table smaller than enumeration bound");
        std::vector<u64> norms;
        std::vector<std::uint32_t> starts;
        std::vector<IdealFactor> pool;
        std::vector<IdealFactor> stack;
        std::function<void(std::uint32_t, u64)> rec = [&](std::uint32_t from, u64 cur) {
            norms.push_back(cur);
            starts.push_back(static_cast<std::uint32_t>(pool.size()));
            pool.insert(pool.end(), stack.begin(), stack.end());
            for (std::uint32_t k = from; k < t.size(); ++k) {
                const u64 q = t[k].norm;
                if (q > X / cur) break;
                u64 v = cur;
                std::uint32_t e = 0;
                while (q <= X / v) {
                    v *= q;
                    ++e;
                    stack.push_back({k, e});
                    rec(k + 1, v);
                    stack.pop_back();
                }
            }
        };
        rec(0, 1);
        starts.push_back(static_cast<std::uint32_t>(pool.size()));
        std::vector<std::uint32_t> order(norms.size());
        std::iota(order.begin(), order.end(), 0);
        auto fac_less = [&](std::uint32_t a, std::uint32_t b) {
            if (norms[a] != norms[b]) return norms[a] < norms[b];
            return std::lexicographical_compare(pool.begin() + starts[a], pool.begin() + starts[a + 1],
                                                pool.begin() + starts[b], pool.begin() + starts[b + 1]);
        };
        std::sort(order.begin(), order.end(), fac_less);
        norm_.reserve(order.size());
        start_.reserve(order.size() + 1);
        fac_.reserve(pool.size());
        for (auto i : order) {
            norm_.push_back(norms[i]);
            start_.push_back(static_cast<std::uint32_t>(fac_.size()));
            fac_.insert(fac_.end(), pool.begin() + starts[i], pool.begin() + starts[i + 1]);
        }
        start_.push_back(static_cast<std::uint32_t>(fac_.size()));
    }

    const PrimeIdealTable& table() const { return *t_; }
    u64 X() const { return X_; }
    size_t size() const { return norm_.size(); }
    u64 norm(size_t i) const { return norm_[i]; }
    const IdealFactor* begin(size_t i) const { return fac_.data() + start_[i]; }
    const IdealFactor* end(size_t i) const { return fac_.data() + start_[i + 1]; }
    size_t num_factors(size_t i) const { return start_[i + 1] - start_[i]; }
    std::uint32_t min_tag(size_t i) const { return num_factors(i) ? fac_[start_[i]].tag : kNoTag; }

    FormalIdeal ideal(size_t i) const {
        FormalIdeal a{std::vector<IdealFactor>(begin(i), end(i)), norm_[i]};
        return a;
    }

    // Position of a, or size() when a is absent.
    size_t find(const FormalIdeal& a) const {
        if (a.norm > X_) return size();
        u64 nm = static_cast<u64>(a.norm);
        auto lo = std::lower_bound(norm_.begin(), norm_.end(), nm) - norm_.begin();
        auto hi = std::upper_bound(norm_.begin(), norm_.end(), nm) - norm_.begin();
        for (auto i = lo; i < hi; ++i)
            if (std::equal(begin(i), end(i), a.factors.begin(), a.factors.end())) return static_cast<size_t>(i);
        return size();
    }

  private:
    const PrimeIdealTable* t_;
    u64 X_;
    std::vector<u64> norm_;
    std::vector<std::uint32_t> start_;
    std::vector<IdealFactor> fac_;
};

// Up-set of prime ideals {tags >= first}.
struct UpSet {
    std::uint32_t first = 0;
    static UpSet from_tag(std::uint32_t tag) { return {tag}; }
    static UpSet from_norm(const PrimeIdealTable& t, double threshold) { return {t.first_with_norm_at_least(threshold)}; }
    bool contains(std::uint32_t tag) const { return tag >= first; }
};

// S(A, I): sum of w over ideals in A whose prime factors all lie in I.
template <class Pred>
cplx weighted_sum_S(const IdealSet& s, const std::vector<cplx>& w, Pred&& in_A, UpSet I) {
    KahanSumC acc;
    for (size_t i = 0; i < s.size(); ++i) {
        const std::uint32_t m = s.min_tag(i);
        if (m != kNoTag && !I.contains(m)) continue;
        if (!in_A(i)) continue;
        acc.add(w[i]);
    }
    return acc.value();
}

inline bool set_divisible_by(const IdealSet& s, size_t i, std::uint32_t tag) {
    for (auto f = s.begin(i); f != s.end(i); ++f)
        if (f->tag == tag) return true;
    return false;
}

inline double weight_scale(const std::vector<cplx>& w) {
    double s = 0;
    for (auto v : w) s += std::abs(v);
    return std::max(s, 1e-300);
}

struct BuchstabReport {
    cplx lhs;          // S(C, I(z))
    cplx s_u;          // S(C, I(u))
    cplx middle;       // sum_{u <= Np < z} S(C_p, I(u))
    cplx pairs;        // sum_{Np >= u, Nq < z, p < q} S(C_pq, I(p))
    cplx rhs;
    double residual = 0;  // |lhs - rhs| / scale
    bool sieved_checked = false;
    cplx unit_term, prime_term, semiprime_term, sieved_rhs;
    double sieved_residual = 0;
    double scale = 0;
};

// Both sides of the Buchstab identity and, when z^3 > X, the split of S(C, I(z))
// into the unit ideal, primes and products of two primes of norm >= z.
inline BuchstabReport buchstab_check(const IdealSet& s, const std::vector<cplx>& w, double u, double z) {
    const auto& t = s.table();
    const double X = static_cast<double>(s.X());
    if (!(2 <= u && u <= z && z <= X)) throw DomainError("buchstab_check needs 2 <= u <= z <= X");
    if (w.size() != s.size()) throw DomainError("weight vector does not match ideal set");
    const UpSet Iu = UpSet::from_norm(t, u), Iz = UpSet::from_norm(t, z);
    BuchstabReport r;
    r.scale = weight_scale(w);
    auto all = [](size_t) { return true; };
    r.lhs = weighted_sum_S(s, w, all, Iz);
    r.s_u = weighted_sum_S(s, w, all, Iu);

    // Per-prime accumulators S(C_p, I(u)) and sum_q S(C_pq, I(p)).
    std::vector<KahanSumC> mid(t.size()), pr(t.size());
    for (size_t i = 0; i < s.size(); ++i) {
        const std::uint32_t m = s.min_tag(i);
        if (m == kNoTag) continue;
        const IdealFactor* b = s.begin(i);
        const IdealFactor* e = s.end(i);
        if (Iu.contains(m)) {
            for (auto f = b; f != e; ++f)
                if (static_cast<double>(t[f->tag].norm) < z) mid[f->tag].add(w[i]);
        }
        // p must be the least prime of a (all factors lie in I(p)); q any larger prime factor.
        if (static_cast<double>(t[m].norm) >= u) {
            for (auto f = b + 1; f != e; ++f)
                if (static_cast<double>(t[f->tag].norm) < z) pr[m].add(w[i]);
        }
    }
    KahanSumC msum, psum;
    for (std::uint32_t k = 0; k < t.size(); ++k) {
        msum.add(mid[k].value());
        psum.add(pr[k].value());
    }
    r.middle = msum.value();
    r.pairs = psum.value();
    r.rhs = r.s_u - r.middle + r.pairs;
    r.residual = std::abs(r.lhs - r.rhs) / r.scale;

    if (z * z * z > X) {
        r.sieved_checked = true;
        r.unit_term = w[0];
        KahanSumC ps, ss;
        const std::uint32_t first = Iz.first;
        for (std::uint32_t k = first; k < t.size(); ++k) {
            const u64 q = t[k].norm;
            if (q > s.X()) break;
            FormalIdeal single = make_ideal(t, {{k, 1}});
            ps.add(w[s.find(single)]);
            for (std::uint32_t l = k; l < t.size(); ++l) {
                if (t[l].norm > s.X() / q) break;
                FormalIdeal pair = make_ideal(t, {{k, 1}, {l, 1}});
                ss.add(w[s.find(pair)]);
            }
        }
        r.prime_term = ps.value();
        r.semiprime_term = ss.value();
        r.sieved_rhs = r.unit_term + r.prime_term + r.semiprime_term;
        r.sieved_residual = std::abs(r.lhs - r.sieved_rhs) / r.scale;
    }
    return r;
}

// Parameters of the sieve decomposition: prescribed values and the values
// actually used (clamped into 2 <= u <= y <= z <= X^{1/2} when degenerate).
struct DfiParams {
    double X = 0, A = 0, B = 0, C = 0;
    double D = 0, u = 0, z = 0, y = 0, M = 0;
    double D_eff = 0, u_eff = 0, z_eff = 0, y_eff = 0;
    int M_eff = 0;
    bool clamped = false;
};

inline DfiParams dfi_params(double X, double A, double C, std::optional<double> u_override = std::nullopt,
                            std::optional<double> z_override = std::nullopt, std::optional<int> M_override = std::nullopt,
                            int M_cap = 64) {
    DfiParams p;
    p.X = X;
    p.A = A;
    p.B = 2 * A + 4;
    p.C = C;
    const double L = std::log(X);
    const double LL = std::log(L);
    p.D = std::sqrt(X) * std::pow(L, -C);
    p.u = std::pow(L, C);
    p.z = std::sqrt(X) * std::exp(-LL * LL);
    p.y = std::pow(X, 3.0 / 8.0);
    p.M = std::pow(L, 1 + p.B / 2);

    p.y_eff = p.y;
    p.z_eff = z_override ? *z_override : std::clamp(p.z, p.y_eff, std::sqrt(X));
    p.u_eff = u_override ? *u_override : std::clamp(p.u, 2.0, p.y_eff);
    p.D_eff = std::clamp(p.D, 1.0, X);
    p.M_eff = M_override ? *M_override : std::clamp(static_cast<int>(std::ceil(p.M)), 1, M_cap);
    p.clamped = p.z_eff != p.z || p.u_eff != p.u || p.D_eff != p.D || p.M_eff != static_cast<int>(std::ceil(p.M));
    return p;
}

struct DfiReport {
    DfiParams params;
    std::vector<double> levels;  // y_0 = y > y_1 > ... > y_M = u
    cplx type1_lhs;              // S(C, I(u)) - sum_{u <= Np < z} S(C_p, I(u))
    cplx type1_small, type1_large;  // Moebius expansion split at N(d) <= D and > D
    double type1_residual = 0;
    cplx third;                  // sum_{Np >= u, Nq < z, p < q} S(C_pq, I(p))
    cplx large_p;                // part with Np >= y
    cplx large_p_direct;         // sum w(pq) over the same range
    cplx rem;                    // part with u <= Np < y
    std::vector<cplx> E1, E2, E3;
    cplx E_total;
    double levels_residual = 0;  // |rem - sum E| / scale
    double split_residual = 0;   // |third - large_p - rem| / scale
    double large_p_residual = 0;
    std::vector<double> e1_shape;  // X (log X)^2 / M^2 per level, reported against |E1_m|
    double scale = 0;
};

inline DfiReport dfi_decomposition(const IdealSet& s, const std::vector<cplx>& w, const DfiParams& prm) {
    const auto& t = s.table();
    if (w.size() != s.size()) throw DomainError("weight vector does not match ideal set");
    DfiReport r;
    r.params = prm;
    r.scale = weight_scale(w);
    const double u = prm.u_eff, z = prm.z_eff, y = prm.y_eff;
    const int M = prm.M_eff;
    if (!(2 <= u && u <= y && y <= z)) throw DomainError("dfi parameters need 2 <= u <= y <= z");
    r.levels.resize(M + 1);
    for (int m = 0; m <= M; ++m) r.levels[m] = y * std::pow(u / y, static_cast<double>(m) / M);
    r.levels[M] = u;
    auto band = [&](double nrm) {
        // m with y_{m+1} <= nrm < y_m, or -1
        if (nrm < u || nrm >= y) return -1;
        int m = static_cast<int>(std::upper_bound(r.levels.begin(), r.levels.end(), nrm, std::greater<double>()) -
                                 r.levels.begin()) - 1;
        while (m + 1 <= M && nrm < r.levels[m + 1]) ++m;
        while (m > 0 && nrm >= r.levels[m]) --m;
        return m;
    };
    auto N = [&](std::uint32_t tag) { return static_cast<double>(t[tag].norm); };

    // Type I portion, directly and through the Moebius expansion over d | P(z), d in Pi_u.
    const UpSet Iu = UpSet::from_norm(t, u);
    KahanSumC lhs1;
    for (size_t i = 0; i < s.size(); ++i) {
        const std::uint32_t m = s.min_tag(i);
        if (m != kNoTag && !Iu.contains(m)) continue;
        int big = 0;
        for (auto f = s.begin(i); f != s.end(i); ++f)
            if (N(f->tag) < z) ++big;
        lhs1.add(w[i] * static_cast<double>(1 - big));
    }
    r.type1_lhs = lhs1.value();
    {
        // Multiples-sums g(d) = sum_{d | a} w(a), accumulated per squarefree d from each a.
        std::unordered_map<FormalIdeal, KahanSumC, FormalIdealHash> g;
        std::vector<std::pair<FormalIdeal, int>> ds;  // (d, mu)
        for (size_t i = 0; i < s.size(); ++i) {
            if (w[i] == cplx{}) continue;
            std::vector<std::uint32_t> small_tags, big_tags;
            for (auto f = s.begin(i); f != s.end(i); ++f) {
                if (N(f->tag) >= z) continue;
                (N(f->tag) < u ? small_tags : big_tags).push_back(f->tag);
            }
            const size_t ns = small_tags.size();
            if (ns > 20) throw CapacityError("too many small prime factors");
            for (u64 mask = 0; mask < (u64{1} << ns); ++mask) {
                std::vector<IdealFactor> base;
                for (size_t j = 0; j < ns; ++j)
                    if (mask >> j & 1) base.push_back({small_tags[j], 1});
                auto add = [&](std::vector<IdealFactor> fs) {
                    FormalIdeal d = make_ideal(t, std::move(fs));
                    g[d].add(w[i]);
                };
                add(base);
                for (auto bt : big_tags) {
                    auto fs = base;
                    fs.push_back({bt, 1});
                    add(fs);
                }
            }
        }
        std::vector<std::pair<FormalIdeal, cplx>> terms;
        terms.reserve(g.size());
        for (auto& [d, acc] : g) terms.emplace_back(d, acc.value());
        std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        KahanSumC small, large;
        for (auto& [d, v] : terms) {
            const double mu = (d.factors.size() % 2) ? -1.0 : 1.0;
            if (static_cast<double>(d.norm) <= prm.D_eff)
                small.add(mu * v);
            else
                large.add(mu * v);
        }
        r.type1_small = small.value();
        r.type1_large = large.value();
        r.type1_residual = std::abs(r.type1_lhs - (r.type1_small + r.type1_large)) / r.scale;
    }

    // Third Buchstab term and its level decomposition; p is always the least prime of a.
    KahanSumC third, largep, rem;
    std::vector<KahanSumC> e1(M), e2(M), e3(M);
    for (size_t i = 0; i < s.size(); ++i) {
        const std::uint32_t m = s.min_tag(i);
        if (m == kNoTag || w[i] == cplx{}) continue;
        const IdealFactor* b = s.begin(i);
        const IdealFactor* e = s.end(i);
        const size_t k = static_cast<size_t>(e - b);
        // Third term: p = least prime, q > p any other prime factor with Nq < z.
        if (N(m) >= u) {
            for (auto f = b + 1; f != e; ++f) {
                if (N(f->tag) >= z) continue;
                third.add(w[i]);
                if (N(m) >= y)
                    largep.add(w[i]);
                else
                    rem.add(w[i]);
            }
        }
        // E1_m: p least, p < q, both norms in [y_{m+1}, y_m).
        if (int bm = band(N(m)); bm >= 0) {
            for (auto f = b + 1; f != e; ++f)
                if (N(f->tag) < r.levels[bm]) e1[bm].add(w[i]);
        }
        // E2_m: all primes of a in I(y_{m+1}); p in [y_{m+1}, y_m), q in [y_m, z).
        // E3_m: r least prime with N r >= y_{m+1}, r < p, p in [y_{m+1}, y_m), q in [y_m, z).
        for (size_t a = 0; a < k; ++a) {
            const int bm = band(N(b[a].tag));
            if (bm < 0) continue;
            const double lo = r.levels[bm + 1], hi = r.levels[bm];
            for (size_t c = 0; c < k; ++c) {
                if (c == a) continue;
                const double nq = N(b[c].tag);
                if (!(hi <= nq && nq < z)) continue;
                if (N(m) >= lo) e2[bm].add(w[i]);
                if (m != b[a].tag && N(m) >= lo) e3[bm].add(-w[i]);
            }
        }
    }
    r.third = third.value();
    r.large_p = largep.value();
    r.rem = rem.value();
    r.split_residual = std::abs(r.third - r.large_p - r.rem) / r.scale;
    r.E1.resize(M);
    r.E2.resize(M);
    r.E3.resize(M);
    KahanSumC tot;
    const double logX = std::log(prm.X);
    for (int m = 0; m < M; ++m) {
        r.E1[m] = e1[m].value();
        r.E2[m] = e2[m].value();
        r.E3[m] = e3[m].value();
        tot.add(r.E1[m]);
        tot.add(r.E2[m]);
        tot.add(r.E3[m]);
        r.e1_shape.push_back(prm.X * logX * logX / (static_cast<double>(M) * M));
    }
    r.E_total = tot.value();
    r.levels_residual = std::abs(r.rem - r.E_total) / r.scale;

    // Large-p part evaluated as sum of w(pq) over Np >= y, Nq < z, p < q.
    KahanSumC lpd;
    const std::uint32_t fy = t.first_with_norm_at_least(y);
    for (std::uint32_t a = fy; a < t.size(); ++a) {
        if (t[a].norm > s.X()) break;
        for (std::uint32_t c = a + 1; c < t.size(); ++c) {
            if (N(c) >= z || t[c].norm > s.X() / t[a].norm) break;
            size_t pos = s.find(make_ideal(t, {{a, 1}, {c, 1}}));
            if (pos < s.size()) lpd.add(w[pos]);
        }
    }
    r.large_p_direct = lpd.value();
    r.large_p_residual = std::abs(r.large_p - r.large_p_direct) / r.scale;
    return r;
}

// Characters of the class group as exponents mod h: chi(c) = e(k[c] / h).
// Character 0 is principal.
inline std::vector<std::vector<std::uint32_t>> class_group_characters(const FieldInvariants& inv) {
    const std::uint32_t h = static_cast<std::uint32_t>(inv.class_number);
    std::vector<bool> in_H(h, false);
    std::vector<std::uint32_t> H{0};
    in_H[0] = true;
    std::vector<std::vector<std::uint32_t>> chars{std::vector<std::uint32_t>(h, 0)};
    while (H.size() < h) {
        std::uint32_t g = 0;
        while (in_H[g]) ++g;
        std::uint32_t d = 1, gd = g;
        while (!in_H[gd]) {
            gd = inv.mul(gd, g);
            ++d;
        }
        std::vector<std::uint32_t> newH;
        std::vector<std::uint32_t> gpow(d);
        gpow[0] = 0;
        for (std::uint32_t i = 1; i < d; ++i) gpow[i] = inv.mul(gpow[i - 1], g);
        for (std::uint32_t i = 0; i < d; ++i)
            for (auto x : H) newH.push_back(inv.mul(x, gpow[i]));
        std::vector<std::vector<std::uint32_t>> next;
        for (const auto& psi : chars) {
            const std::uint32_t c = psi[gd];
            if (c % d != 0 || h % d != 0) throw IdentityError("character extension left the h-th roots of unity");
            for (std::uint32_t j = 0; j < d; ++j) {
                const std::uint32_t z = (c / d + j * (h / d)) % h;
                std::vector<std::uint32_t> chi(h, 0);
                for (std::uint32_t i = 0; i < d; ++i)
                    for (auto x : H) chi[inv.mul(x, gpow[i])] = static_cast<std::uint32_t>((psi[x] + static_cast<u64>(i) * z) % h);
                next.push_back(std::move(chi));
            }
        }
        chars = std::move(next);
        H = std::move(newH);
        for (auto x : H) in_H[x] = true;
    }
    return chars;
}

inline cplx root_of_unity(std::uint32_t k, std::uint32_t h) {
    if (k == 0) return {1.0, 0.0};
    return std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(h));
}

struct PsiReport {
    cplx value;
    double X;
    bool principal;
    cplx expected;  // X for the principal character, 0 otherwise
};

// sum_{N a <= X} Lambda_K(a) chi([a]).
inline PsiReport psi_prime_sum(const FieldInvariants& inv, u64 X, size_t chi_index) {
    if (X > kPrincipalIndexMaxX) throw CapacityError("psi_prime_sum above 1e8");
    require(X >= 2, "psi_prime_sum needs X >= 2");
    auto chars = class_group_characters(inv);
    if (chi_index >= chars.size()) throw DomainError("character index out of range");
    const auto& chi = chars[chi_index];
    const std::uint32_t h = static_cast<std::uint32_t>(inv.class_number);
    PrimeIdealTable t(inv, X);
    KahanSumC acc;
    for (const auto& g : t.tags()) {
        const double lg = std::log(static_cast<double>(g.norm));
        std::uint32_t c = g.class_index;
        u64 q = g.norm;
        for (;;) {
            acc.add(lg * root_of_unity(chi[c], h));
            if (q > X / g.norm) break;
            q *= g.norm;
            c = inv.mul(c, g.class_index);
        }
    }
    const bool principal = chi_index == 0;
    return {acc.value(), static_cast<double>(X), principal, principal ? cplx(static_cast<double>(X), 0) : cplx{}};
}

}  // namespace bqp
