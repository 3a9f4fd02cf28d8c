#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bqp/errors.hpp"
#include "bqp/gowers.hpp"
#include "bqp/largesieve.hpp"

namespace bqp {

using json = nlohmann::json;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

inline i64 parse_int(const std::string& s, const std::string& what) {
    size_t pos = 0;
    i64 v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        throw DomainError("bad integer for " + what + ": '" + s + "'");
    }
    if (pos != s.size()) throw DomainError("bad integer for " + what + ": '" + s + "'");
    return v;
}

inline double parse_double(const std::string& s, const std::string& what) {
    size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw DomainError("bad number for " + what + ": '" + s + "'");
    }
    if (pos != s.size() || !std::isfinite(v)) throw DomainError("bad number for " + what + ": '" + s + "'");
    return v;
}

inline std::vector<std::vector<std::string>> read_csv_rows(std::istream& in, const std::vector<std::string>& header) {
    std::string line;
    size_t lineno = 0;
    bool seen_header = false;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto cells = split(line, ',');
        if (!seen_header) {
            if (cells != header) {
                std::string want;
                for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
                throw DomainError("CSV header must be '" + want + "'");
            }
            seen_header = true;
            continue;
        }
        if (cells.size() != header.size()) throw DomainError("CSV line " + std::to_string(lineno) + " has the wrong column count");
        rows.push_back(std::move(cells));
    }
    if (!seen_header) throw DomainError("CSV input is empty");
    return rows;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open " + path);
    return in;
}

inline std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace detail

// CSV `x,re,im`; missing x inside the window are 0.
inline ArithFunction read_arith_csv(std::istream& in) {
    auto rows = detail::read_csv_rows(in, {"x", "re", "im"});
    std::map<i64, cplx> m;
    for (const auto& r : rows) {
        const i64 x = detail::parse_int(r[0], "x");
        if (m.count(x)) throw DomainError("duplicate x in function CSV: " + r[0]);
        m[x] = {detail::parse_double(r[1], "re"), detail::parse_double(r[2], "im")};
    }
    if (m.empty()) return {};
    const i64 lo = m.begin()->first, hi = m.rbegin()->first;
    if (hi - lo >= (i64{1} << 28)) throw CapacityError("function CSV window above 2^28");
    std::vector<cplx> v(static_cast<size_t>(hi - lo + 1));
    for (auto [x, c] : m) v[static_cast<size_t>(x - lo)] = c;
    return {lo, std::move(v)};
}

inline ArithFunction read_arith_csv(const std::string& path) {
    auto in = detail::open_in(path);
    return read_arith_csv(in);
}

inline void write_arith_csv(std::ostream& out, const ArithFunction& f) {
    out << "x,re,im\n";
    for (size_t i = 0; i < f.size(); ++i) {
        if (f.values[i] == cplx{}) continue;
        out << f.lo + static_cast<i64>(i) << ',' << detail::fmt_double(f.values[i].real()) << ','
            << detail::fmt_double(f.values[i].imag()) << '\n';
    }
}

// CSV `offset,mass`; offsets are integers or p/q with q a power of two.
inline SymmetricMeasure read_measure_csv(std::istream& in) {
    auto rows = detail::read_csv_rows(in, {"offset", "mass"});
    std::vector<std::pair<i64, i64>> offs;
    std::vector<double> masses;
    i64 den = 1;
    for (const auto& r : rows) {
        i64 num, q = 1;
        if (auto slash = r[0].find('/'); slash != std::string::npos) {
            num = detail::parse_int(detail::trim(r[0].substr(0, slash)), "offset");
            q = detail::parse_int(detail::trim(r[0].substr(slash + 1)), "offset denominator");
            if (q < 1 || (q & (q - 1)) != 0) throw DomainError("offset denominators must be powers of two");
        } else {
            num = detail::parse_int(r[0], "offset");
        }
        den = std::max(den, q);
        offs.emplace_back(num, q);
        masses.push_back(detail::parse_double(r[1], "mass"));
    }
    if (den > (i64{1} << 20)) throw CapacityError("measure denominator above 2^20");
    std::vector<std::pair<i64, double>> raw;
    for (size_t i = 0; i < offs.size(); ++i) raw.emplace_back(offs[i].first * (den / offs[i].second), masses[i]);
    return SymmetricMeasure::from_atoms(std::move(raw), den);
}

inline SymmetricMeasure read_measure_csv(const std::string& path) {
    auto in = detail::open_in(path);
    return read_measure_csv(in);
}

inline void write_measure_csv(std::ostream& out, const SymmetricMeasure& mu) {
    out << "offset,mass\n";
    for (auto [x, w] : mu.atoms) {
        if (mu.den == 1)
            out << x;
        else
            out << x << '/' << mu.den;
        out << ',' << detail::fmt_double(w) << '\n';
    }
}

// {k, N, omega: [{p, residues: [[u, v], ...]} | {p, polys: [[[c, i, j], ...], ...]}]}
inline SieveSystem sieve_system_from_json(const json& j) {
    try {
        auto s = SieveSystem::make(j.at("k").get<int>(), j.at("N").get<i64>());
        for (const auto& e : j.value("omega", json::array())) {
            const u64 p = e.at("p").get<u64>();
            if (e.contains("residues")) {
                std::vector<std::pair<i64, i64>> res;
                for (const auto& r : e.at("residues")) {
                    if (s.k == 1)
                        res.emplace_back(r.is_array() ? r.at(0).get<i64>() : r.get<i64>(), 0);
                    else
                        res.emplace_back(r.at(0).get<i64>(), r.at(1).get<i64>());
                }
                s.set_residues(p, std::move(res));
            } else if (e.contains("polys")) {
                std::vector<Polynomial> polys;
                for (const auto& pj : e.at("polys")) {
                    Polynomial f;
                    for (const auto& m : pj) f.push_back({m.at(0).get<i64>(), m.at(1).get<int>(), m.at(2).get<int>()});
                    polys.push_back(std::move(f));
                }
                s.set_polynomials(p, polys);
            } else {
                throw DomainError("omega entry needs residues or polys");
            }
        }
        if (j.contains("W")) {
            const i64 W = j.at("W").get<i64>();
            for (const auto& [p, r] : s.omega)
                if (static_cast<i64>(p) > W) throw DomainError("omega given above W");
        }
        return s;
    } catch (const json::exception& e) {
        throw DomainError(std::string("bad sieve system JSON: ") + e.what());
    }
}

inline json sieve_system_to_json(const SieveSystem& s) {
    json j{{"k", s.k}, {"N", s.N}, {"W", s.W()}, {"omega", json::array()}};
    for (const auto& [p, res] : s.omega) {
        json r = json::array();
        for (auto [u, v] : res) r.push_back(s.k == 1 ? json(u) : json::array({u, v}));
        j["omega"].push_back({{"p", p}, {"residues", r}});
    }
    return j;
}

// FNV-1a over the canonical (sorted-key) dump.
inline std::string config_hash(const json& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// Lists JSON paths holding non-finite numbers (NaN and infinities serialise as null).
inline void collect_nonfinite(const json& j, const std::string& path, std::vector<std::string>& out) {
    if (j.is_number_float() && !std::isfinite(j.get<double>())) out.push_back(path);
    if (j.is_object())
        for (auto it = j.begin(); it != j.end(); ++it) collect_nonfinite(it.value(), path + "/" + it.key(), out);
    if (j.is_array())
        for (size_t i = 0; i < j.size(); ++i) collect_nonfinite(j[i], path + "/" + std::to_string(i), out);
}

namespace detail {

inline void flat_rows(std::ostream& out, const json& j, const std::string& prefix) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) flat_rows(out, it.value(), prefix.empty() ? it.key() : prefix + "." + it.key());
    } else if (j.is_array()) {
        for (size_t i = 0; i < j.size(); ++i) flat_rows(out, j[i], prefix + "." + std::to_string(i));
    } else {
        out << prefix << ',' << (j.is_string() ? j.get<std::string>() : j.dump()) << '\n';
    }
}

}  // namespace detail

// Scalars as `path,value` lines.
inline void write_flat_csv(std::ostream& out, const json& j) {
    out << "key,value\n";
    detail::flat_rows(out, j, "");
}

}  // namespace bqp
