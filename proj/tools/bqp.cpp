// bqp: command-line front end. Every subcommand writes one JSON (or flat CSV)
// document {command, config, result, provenance}.
//
// Exit codes: 0 ok, 2 validation error, 3 capacity guard, 4 failed identity or
// failed acceptance criterion.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bqp/acceptance.hpp"
#include "bqp/commands.hpp"

namespace {

using bqp::json;

enum class Kind { Int, Num, Str, Flag, StrList, IntList };

struct OptSpec {
    const char* flag;  // long name without dashes
    const char* key;   // config key
    Kind kind;
    const char* help;
};

// Values land here as strings and are typed when the config object is built.
struct Captured {
    std::map<std::string, std::string> scalars;
    std::map<std::string, std::vector<std::string>> lists;
    std::map<std::string, bool> flags;
};

const std::map<std::string, std::vector<OptSpec>>& option_table() {
    static const std::map<std::string, std::vector<OptSpec>> t{
        {"kappa",
         {{"n", "n", Kind::Int, "field parameter, n = 0 or 4 mod 6"},
          {"prime-limit", "prime_limit", Kind::Num, "prime limit P"},
          {"method", "method", Kind::Str, "direct | regularized"},
          {"tol", "tol", Kind::Num, "tail tolerance for the regularized route"},
          {"trace", "trace", Kind::Flag, "include partial products"}}},
        {"count",
         {{"n", "n", Kind::Int, "field parameter"},
          {"X", "X", Kind::Num, "norm bound"},
          {"ell", "ell", Kind::Int, "archimedean frequency"},
          {"fx", "fx", Kind::Str, "weight on x: lambda_prime | lambda | cramer | sharp | lambda_prime_minus_cramer | one | csv:PATH"},
          {"fy", "fy", Kind::Str, "weight on y, same choices"},
          {"no-main-term", "main_term", Kind::Flag, "skip kappa and the ratio"}}},
        {"mainterm",
         {{"n", "n", Kind::Int, "field parameter"},
          {"X", "X", Kind::Num, "norm bound"},
          {"ell", "ell", Kind::Int, "archimedean frequency"},
          {"Q", "Q", Kind::Num, "Cramer sieving level"},
          {"t", "t", Kind::Num, "divisor truncation"},
          {"no-main-term", "main_term", Kind::Flag, "skip kappa and the ratio"}}},
        {"gowers",
         {{"k", "k", Kind::Int, "norm order, 2..5"},
          {"N", "N", Kind::Int, "interval length"},
          {"function", "function", Kind::Str, "interval | random_signs | lambda_prime | lambda_prime_minus_cramer"},
          {"input", "input", Kind::Str, "function CSV (x,re,im)"},
          {"seed", "seed", Kind::Int, "seed for random_signs"},
          {"nesting", "nesting", Kind::Flag, "report U^2 / U^3"}}},
        {"gpnorm",
         {{"N", "N", Kind::Int, "interval length"},
          {"function", "function", Kind::Str, "as for gowers"},
          {"input", "input", Kind::Str, "function CSV (x,re,im)"},
          {"seed", "seed", Kind::Int, "seed for random functions and sampling"},
          {"measures", "measures", Kind::StrList, "delta0 | pm1 | uniform:M | measure CSV path, one per level"},
          {"budget", "budget", Kind::Num, "exact-evaluation operation budget"},
          {"sampling", "sampling", Kind::Flag, "allow Monte Carlo above the budget"},
          {"samples", "samples", Kind::Int, "Monte Carlo sample count"},
          {"monotonicity", "monotonicity", Kind::Flag, "check the level-to-level lower bound"}}},
        {"buchstab",
         {{"n", "n", Kind::Int, "field parameter"},
          {"X", "X", Kind::Num, "norm bound, <= 1e7"},
          {"u", "u", Kind::Num, "lower sifting level"},
          {"z", "z", Kind::Num, "upper sifting level"},
          {"weight", "weight", Kind::Str, "one | principal | lambda_k | random"},
          {"seed", "seed", Kind::Int, "seed for random weights"},
          {"dfi", "dfi", Kind::Flag, "also run the E1/E2/E3 decomposition"},
          {"A", "A", Kind::Num, "decomposition exponent A"},
          {"C", "C", Kind::Num, "decomposition constant C"},
          {"M", "M", Kind::Int, "number of dyadic levels"},
          {"dfi-u", "dfi_u", Kind::Num, "override for the decomposition's u"},
          {"dfi-z", "dfi_z", Kind::Num, "override for the decomposition's z"}}},
        {"typesum",
         {{"n", "n", Kind::Int, "field parameter"},
          {"X", "X", Kind::Num, "norm bound"},
          {"L", "L", Kind::Num, "divisor band [L, 2L)"},
          {"type", "type", Kind::Str, "I | II"},
          {"f", "f", Kind::Str, "weight on x"},
          {"fprime", "fprime", Kind::Str, "weight on y"},
          {"ell", "ell", Kind::Int, "archimedean frequency"},
          {"alpha", "alpha", Kind::Str, "Type II coefficients: random | mobius | constant:c"},
          {"beta", "beta", Kind::Str, "Type II coefficients, same choices"},
          {"seed", "seed", Kind::Int, "seed for random coefficients"},
          {"index-cache", "index_cache", Kind::Str, "principal-index cache file"}}},
        {"sigma",
         {{"n", "n", Kind::Int, "even field parameter"},
          {"s1", "s1", Kind::Str, "comma-separated primes"},
          {"s2", "s2", Kind::Str, "comma-separated primes"}}},
        {"largesieve",
         {{"system", "system", Kind::Str, "sieve system JSON file"},
          {"preset", "preset", Kind::Str, "origin | binary_form"},
          {"k", "k", Kind::Int, "dimension for the origin preset"},
          {"N", "N", Kind::Int, "box size"},
          {"W", "W", Kind::Int, "largest sieving prime"},
          {"n", "n", Kind::Int, "binary_form: x^2 + n y^2"},
          {"a1", "a1", Kind::Int, "binary_form: first linear form"},
          {"b1", "b1", Kind::Int, "binary_form: first linear form"},
          {"a2", "a2", Kind::Int, "binary_form: second linear form"},
          {"b2", "b2", Kind::Int, "binary_form: second linear form"},
          {"farey-N", "farey_N", Kind::Int, "also check the Farey inequality at this N"},
          {"seed", "seed", Kind::Int, "seed for the Farey coefficients"}}},
        {"idealstats",
         {{"n", "n", Kind::Int, "field parameter"},
          {"X", "X", Kind::Num, "norm bound"},
          {"max-characters", "max_characters", Kind::Int, "class-group characters to sum over"}}},
        {"cramer",
         {{"X", "X", Kind::Num, "scale"},
          {"Q", "Q", Kind::Num, "sieving level override"},
          {"t", "t", Kind::Num, "divisor truncation override"},
          {"Y", "Y", Kind::Num, "mean-value range"},
          {"points", "points", Kind::IntList, "points at which to evaluate the weights"}}},
    };
    return t;
}

json build_config(const std::vector<OptSpec>& specs, const Captured& cap) {
    json c = json::object();
    for (const auto& s : specs) {
        switch (s.kind) {
            case Kind::Flag:
                if (cap.flags.at(s.key)) c[s.key] = std::string(s.flag).rfind("no-", 0) == 0 ? false : true;
                break;
            case Kind::StrList:
            case Kind::IntList: {
                const auto& v = cap.lists.at(s.key);
                if (v.empty()) break;
                json a = json::array();
                for (const auto& x : v) {
                    if (s.kind == Kind::IntList)
                        a.push_back(bqp::detail::parse_int(x, s.flag));
                    else
                        a.push_back(x);
                }
                c[s.key] = a;
                break;
            }
            default: {
                auto it = cap.scalars.find(s.key);
                if (it == cap.scalars.end()) break;
                if (s.kind == Kind::Int)
                    c[s.key] = bqp::detail::parse_int(it->second, s.flag);
                else if (s.kind == Kind::Num)
                    c[s.key] = bqp::detail::parse_double(it->second, s.flag);
                else
                    c[s.key] = it->second;
            }
        }
    }
    return c;
}

void emit(const json& doc, const std::string& out, const std::string& format) {
    std::ofstream file;
    if (!out.empty()) {
        file.open(out);
        if (!file) throw bqp::DomainError("cannot write " + out);
    }
    std::ostream& os = out.empty() ? std::cout : file;
    if (format == "csv")
        bqp::write_flat_csv(os, doc);
    else
        os << doc.dump(2) << '\n';
}

int run_report(const std::string& suite, const std::vector<int>& which, unsigned threads, std::uint64_t seed, const std::string& out,
               const std::string& format) {
    const auto t0 = std::chrono::steady_clock::now();
    const unsigned th = bqp::resolve_threads(threads);
    json rows = json::array();
    bool ok = true;
    bqp::acceptance::run(th, seed, which, [&](const bqp::acceptance::CriterionResult& r) {
        std::cerr << bqp::acceptance::pass_line(r) << '\n';
        rows.push_back(bqp::acceptance::to_json(r));
        ok = ok && r.pass;
    });
    json result{{"suite", suite}, {"criteria", rows}, {"all_pass", ok}};
    if (suite == "full") result["trends"] = bqp::acceptance::trend_tables(th);
    const json config{{"suite", suite}, {"criteria", which}, {"seed", seed}};
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const json doc{{"command", "report"},
                   {"config", config},
                   {"result", result},
                   {"provenance", {{"threads", th}, {"runtime_ms", ms}, {"version", bqp::kVersion}, {"config_hash", bqp::config_hash(config)}}}};
    emit(doc, out, format);
    return ok ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prime-counting experiments for x^2 + n y^2 with prime coordinates"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    app.set_config("--config", "", "key = value file; global keys at top, subcommand keys under [subcommand]");
    app.allow_config_extras(CLI::config_extras_mode::error);

    unsigned threads = 0;
    std::uint64_t seed = 0;
    std::string out, format = "json";
    app.add_option("--threads", threads, "worker threads (default: BQP_THREADS, then core count)");
    app.add_option("--seed", seed, "default seed for subcommands that draw random numbers");
    app.add_option("--out", out, "output path (default stdout)");
    app.add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));

    std::map<std::string, Captured> captured;
    std::map<std::string, CLI::App*> subs;
    const std::map<std::string, std::string> blurbs{
        {"kappa", "singular constant kappa_n, direct or regularized"},
        {"count", "weighted count of primes x^2 + n y^2 <= X"},
        {"mainterm", "the same count with sharp divisor-sum weights"},
        {"gowers", "U^k norms of a function on [N]"},
        {"gpnorm", "Gowers-Peluse norms with prescribed difference measures"},
        {"buchstab", "Buchstab and sieved-sum identities over ideals"},
        {"typesum", "Type I / Type II sums of the product weight"},
        {"sigma", "local density sigma(n, S1, S2), formula and brute force"},
        {"largesieve", "large-sieve bound versus the sifted count"},
        {"idealstats", "field invariants, ideal counts and prime ideal sums"},
        {"cramer", "Cramer model parameters and weights"}};
    for (const auto& [name, specs] : option_table()) {
        auto* sub = app.add_subcommand(name, blurbs.at(name));
        subs[name] = sub;
        auto& cap = captured[name];
        for (const auto& s : specs) {
            const std::string flag = std::string("--") + s.flag;
            switch (s.kind) {
                case Kind::Flag:
                    cap.flags[s.key] = false;
                    sub->add_flag(flag, cap.flags[s.key], s.help);
                    break;
                case Kind::StrList:
                case Kind::IntList:
                    cap.lists[s.key];
                    sub->add_option(flag, cap.lists[s.key], s.help)->delimiter(',');
                    break;
                default:
                    sub->add_option_function<std::string>(flag, [&cap, key = std::string(s.key)](const std::string& v) { cap.scalars[key] = v; },
                                                          s.help);
            }
        }
    }
    std::string suite = "acceptance";
    std::vector<int> which;
    auto* report = app.add_subcommand("report", "run the acceptance suite (full adds trend tables)");
    report->add_option("--suite", suite, "acceptance | full")->check(CLI::IsMember({"acceptance", "full"}));
    report->add_option("--criteria", which, "restrict to these criterion numbers")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (report->parsed()) return run_report(suite, which, threads, seed, out, format);
        for (const auto& [name, sub] : subs) {
            if (!sub->parsed()) continue;
            const auto& specs = option_table().at(name);
            json cfg = build_config(specs, captured[name]);
            const bool takes_seed = std::any_of(specs.begin(), specs.end(), [](const OptSpec& s) { return std::string(s.key) == "seed"; });
            if (takes_seed && !cfg.contains("seed")) cfg["seed"] = seed;
            emit(bqp::run_document(name, cfg, threads), out, format);
            return 0;
        }
    } catch (const bqp::DomainError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const bqp::CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << '\n';
        return 3;
    } catch (const bqp::IdentityError& e) {
        std::cerr << "identity check failed: " << e.what() << '\n';
        return 4;
    } catch (const bqp::StateError& e) {
        std::cerr << "state error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
