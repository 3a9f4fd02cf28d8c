#include <gtest/gtest.h>

#include <cmath>

#include "bqp/commands.hpp"

using namespace bqp;

namespace {
const std::string kData = BQP_TEST_DATA;
}

TEST(Commands, SigmaGaussianEmptySets) {
    const auto d = run_document("sigma", json{{"n", 4}}, 1);
    const auto& r = d.at("result");
    EXPECT_EQ(r.at("sigma_exact"), "2");
    EXPECT_EQ(r.at("sigma").get<double>(), 2.0);
    EXPECT_EQ(r.at("brute_count"), 16);
    EXPECT_TRUE(r.at("agree").get<bool>());
    EXPECT_EQ(d.at("command"), "sigma");
    EXPECT_EQ(d.at("provenance").at("version"), "1.0.0");
    EXPECT_EQ(d.at("provenance").at("config_hash"), config_hash(json{{"n", 4}}));
}

TEST(Commands, CountAtFifty) {
    const auto r = run_document("count", json{{"n", 4}, {"X", 50}, {"main_term", false}}, 1).at("result");
    EXPECT_NEAR(r.at("value_re").get<double>(), 4 * std::log(5.0) * std::log(2.0), 1e-12);
    EXPECT_EQ(r.at("prime_points"), 4);
    EXPECT_FALSE(r.contains("ratio"));
}

TEST(Commands, HeadlineModulusValidation) {
    EXPECT_THROW(run_document("count", json{{"n", 5}, {"X", 100}}, 1), DomainError);
    EXPECT_THROW(run_document("mainterm", json{{"n", 8}, {"X", 1000}}, 1), DomainError);
    EXPECT_THROW(run_document("mainterm", json{{"n", 4}, {"X", 10}}, 1), DomainError);
    EXPECT_THROW(run_document("count", json{{"n", 4}, {"X", "many"}}, 1), DomainError);
    EXPECT_THROW(run_document("count", json{{"n", 4}, {"X", 1.5}}, 1), DomainError);
}

TEST(Commands, UnknownCommand) { EXPECT_THROW(run_document("nope", json::object(), 1), DomainError); }

TEST(Commands, EveryCommandRunsOnDefaultsOrSmallConfig) {
    const std::map<std::string, json> cfg{
        {"kappa", {{"n", 4}, {"method", "direct"}, {"prime_limit", 10000}}},
        {"count", {{"n", 4}, {"X", 10000}, {"main_term", false}}},
        {"mainterm", {{"n", 6}, {"X", 10000}, {"main_term", false}}},
        {"gowers", {{"k", 2}, {"N", 64}, {"function", "interval"}}},
        {"gpnorm", {{"N", 32}, {"function", "random_signs"}, {"measures", {"pm1", "uniform:2"}}}},
        {"buchstab", {{"n", 4}, {"X", 5000}, {"u", 5}, {"z", 30}}},
        {"typesum", {{"n", 4}, {"X", 5000}, {"L", 20}, {"type", "I"}}},
        {"sigma", {{"n", 6}, {"s1", "5"}}},
        {"largesieve", {{"N", 100}, {"W", 7}}},
        {"idealstats", {{"n", 5}, {"X", 10000}}},
        {"cramer", {{"X", 1e6}}}};
    ASSERT_EQ(cfg.size(), cmd::registry().size());
    for (const auto& [name, c] : cfg) {
        json d;
        ASSERT_NO_THROW(d = run_document(name, c, 1)) << name;
        EXPECT_EQ(d.at("config"), c) << name;
        EXPECT_TRUE(d.at("result").is_object()) << name;
    }
}

TEST(Commands, InputFilesAreAccepted) {
    const auto g = run_document("gowers", json{{"k", 2}, {"input", kData + "/interval8.csv"}, {"N", 8}}, 1);
    EXPECT_TRUE(g.at("result").is_object());
    const auto p = run_document("gpnorm", json{{"N", 8}, {"input", kData + "/interval8.csv"}, {"measures", {kData + "/half_step.csv"}}}, 1);
    EXPECT_TRUE(p.at("result").is_object());
    const auto s = run_document("largesieve", json{{"system", kData + "/sieve_small.json"}}, 1).at("result");
    EXPECT_TRUE(s.at("holds").get<bool>());
    EXPECT_THROW(run_document("largesieve", json{{"system", kData + "/missing.json"}}, 1), DomainError);
}

TEST(Commands, ResultsIndependentOfThreads) {
    const json c{{"n", 4}, {"X", 200000}, {"ell", 2}, {"main_term", false}};
    EXPECT_EQ(run_document("count", c, 1).at("result"), run_document("count", c, 3).at("result"));
}
