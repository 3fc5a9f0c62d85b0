#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>

#include "ltpolicy/config.hpp"

using namespace ltp;
using config::json;

namespace {

std::string field_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ValidationError& e) {
        return e.field();
    }
    return "<no error>";
}

}  // namespace

TEST(Reader, TypedAccessAndDefaults) {
    const json j = json::parse(R"({"a": 1, "b": 2.5, "c": "x", "d": [1, 2], "e": true})");
    config::Reader r(j, "");
    EXPECT_EQ(r.get<long>("a"), 1);
    EXPECT_DOUBLE_EQ(r.get<double>("a"), 1.0);
    EXPECT_DOUBLE_EQ(r.get<double>("b"), 2.5);
    EXPECT_EQ(r.get<std::string>("c"), "x");
    EXPECT_EQ(r.get<std::vector<long>>("d"), (std::vector<long>{1, 2}));
    EXPECT_TRUE(r.get<bool>("e"));
    EXPECT_EQ(r.get_or<long>("missing", 7), 7);
    EXPECT_FALSE(r.maybe<double>("missing").has_value());
    EXPECT_NO_THROW(r.finish());
}

TEST(Reader, TypeErrorsNameTheField) {
    const json j = json::parse(R"({"sec": {"n": 1.5, "v": [1, "x"], "s": 3, "u": -1}})");
    config::Reader root(j, "");
    auto sec = root.child("sec");
    EXPECT_EQ(field_of([&] { sec.get<long>("n"); }), "sec.n");
    EXPECT_EQ(field_of([&] { sec.get<std::vector<double>>("v"); }), "sec.v[1]");
    EXPECT_EQ(field_of([&] { sec.get<std::string>("s"); }), "sec.s");
    EXPECT_EQ(field_of([&] { sec.get<std::uint64_t>("u"); }), "sec.u");
    EXPECT_EQ(field_of([&] { sec.get<double>("absent"); }), "sec.absent");
    EXPECT_EQ(field_of([&] { root.child("nope"); }), "nope");
}

TEST(Reader, UnknownKeysRejected) {
    const json j = json::parse(R"({"model": {"rates": [1, 1], "prices": [2, 1], "rtaes": 3}})");
    config::Reader root(j, "");
    EXPECT_EQ(field_of([&] { config::read_model(root.child("model"), true, true); }), "model.rtaes");
    const json top = json::parse(R"({"a": 1, "b": 2})");
    config::Reader r(top, "");
    r.get<long>("a");
    EXPECT_EQ(field_of([&] { r.finish(); }), "b");
}

TEST(Reader, NonObjectRejected) {
    const json j = json::parse("[1, 2]");
    EXPECT_THROW(config::Reader(j, ""), ValidationError);
}

TEST(Model, InstanceFromAlphaOrInventory) {
    const json j = json::parse(R"({"rates": [1, 1], "prices": [2, 1], "horizon": 100, "alpha": 1.5})");
    const auto m = config::read_model(config::Reader(j, "model"), true, true);
    const auto p = m.instance();
    EXPECT_EQ(p.initial_inventory(), 150);
    const json k = json::parse(R"({"rates": [1, 1], "prices": [2, 1], "horizon": 10, "initial_inventory": 4})");
    EXPECT_EQ(config::read_model(config::Reader(k, "model"), true, true).instance().initial_inventory(), 4);
    const json both = json::parse(R"({"rates": [1, 1], "prices": [2, 1], "horizon": 10, "alpha": 1, "initial_inventory": 4})");
    EXPECT_EQ(field_of([&] { config::read_model(config::Reader(both, "model"), true, true).instance(); }),
              "model.alpha");
}

TEST(Model, Validation) {
    auto check = [](const char* text) {
        return field_of([&] { config::read_model(config::Reader(json::parse(text), "model"), true, true); });
    };
    EXPECT_EQ(check(R"({"rates": [1], "prices": [2]})"), "model.rates");
    EXPECT_EQ(check(R"({"rates": [1, -1], "prices": [2, 1]})"), "model.rates");
    EXPECT_EQ(check(R"({"rates": [1, 1], "prices": [1, 2]})"), "model.prices");
    EXPECT_EQ(check(R"({"rates": [1, 1], "prices": [2, 1, 0.5]})"), "model.prices");
    EXPECT_EQ(check(R"({"rates": [1, 1], "prices": [2, 1], "horizon": 0})"), "model.horizon");
    EXPECT_EQ(check(R"({"rates": [1, 1]})"), "model.prices");
    EXPECT_EQ(field_of([] { config::read_model(config::Reader(json::parse(R"({"rates": [1, 1], "horizon": 5})"), "model"), false, false); }),
              "model.horizon");
}

TEST(Policy, ParsesEveryType) {
    const std::vector<double> rates{1, 1}, prices{2, 1};
    auto parse = [&](const char* text) { return config::read_policy(config::Reader(json::parse(text), "policy"), rates, prices); };
    EXPECT_EQ(std::get<BetaLT>(parse(R"({"type": "beta_lt", "beta": 1.5})")).beta, 1.5);
    EXPECT_EQ(std::get<VectorBetaLT>(parse(R"({"type": "vector_beta_lt", "betas": [1.5]})")).betas,
              (std::vector<double>{1.5}));
    EXPECT_TRUE(std::holds_alternative<AcceptAll>(parse(R"({"type": "accept_all"})")));
    const auto t = std::get<ThresholdTable>(parse(R"({"type": "threshold_table", "breakpoints": [0, 1], "values": [0, 2]})"));
    EXPECT_EQ(t.value_at(1.5), 2);
    const auto eo = std::get<ExtrapolatedOptimal>(
        parse(R"({"type": "extrapolated_optimal", "t_cut": 1, "slope": 1.44, "breakpoints": [0, 0.5], "values": [0, 1]})"));
    EXPECT_EQ(eo.value_at(3.0), 3);
}

TEST(Policy, ThresholdCsvFile) {
    const auto path = std::filesystem::temp_directory_path() / "ltp_test_theta.csv";
    {
        std::ofstream out(path);
        out << "t_breakpoint,theta_value\n0,0\n0.7,1\n";
    }
    const std::string text = R"({"type": "threshold_table", "csv": ")" + path.string() + R"("})";
    const auto spec = config::read_policy(config::Reader(json::parse(text), "policy"), {1, 1}, {2, 1});
    EXPECT_EQ(std::get<ThresholdTable>(spec).value_at(1.0), 1);
    std::filesystem::remove(path);
    EXPECT_THROW(config::read_policy(config::Reader(json::parse(text), "policy"), {1, 1}, {2, 1}), RuntimeError);
}

TEST(Policy, EoFromDynamicProgram) {
    const auto spec = config::read_policy(
        config::Reader(json::parse(R"({"type": "extrapolated_optimal", "t_cut": 20})"), "policy"), {1, 1}, {2, 1});
    const auto& eo = std::get<ExtrapolatedOptimal>(spec);
    EXPECT_EQ(eo.t_cut, 20.0);
    EXPECT_GT(eo.slope, 1.2);
    EXPECT_LT(eo.slope, 1.7);
}

TEST(Policy, ErrorsNameTheField) {
    const std::vector<double> rates{1, 1}, prices{2, 1};
    auto field = [&](const char* text) {
        return field_of([&] { config::read_policy(config::Reader(json::parse(text), "policy"), rates, prices); });
    };
    EXPECT_EQ(field(R"({"type": "beta_lt", "beta": 0})"), "policy.beta");
    EXPECT_EQ(field(R"({"type": "beta_lt", "beta": -2})"), "policy.beta");
    EXPECT_EQ(field(R"({"type": "beta_lt"})"), "policy.beta");
    EXPECT_EQ(field(R"({"type": "beta_lt", "beta": 1.5, "gamma": 1})"), "policy.gamma");
    EXPECT_EQ(field(R"({"type": "magic"})"), "policy.type");
    EXPECT_EQ(field(R"({"type": "threshold_table", "breakpoints": [1], "values": [0]})"), "policy.breakpoints");
    EXPECT_EQ(field(R"({"type": "extrapolated_optimal", "dt": 0.5})"), "policy.dt");
}

TEST(Policy, JsonRoundTrip) {
    const std::vector<double> rates{1, 1}, prices{2, 1};
    const std::vector<PolicySpec> specs{BetaLT{1.37}, VectorBetaLT{{1.5, 2.5}}, AcceptAll{},
                                        ThresholdTable({0.0, 0.5}, {0, 3}),
                                        ExtrapolatedOptimal{ThresholdTable({0.0, 0.5}, {0, 3}), 2.0, 1.5}};
    for (const auto& spec : specs) {
        const json j = config::policy_to_json(spec);
        const auto back = config::read_policy(config::Reader(j, "policy"), rates, prices);
        EXPECT_EQ(config::policy_to_json(back), j);
    }
}

TEST(Files, MissingAndMalformed) {
    EXPECT_EQ(field_of([] { config::load_file("/nonexistent/ltp.json"); }), "--config");
    const auto path = std::filesystem::temp_directory_path() / "ltp_test_bad.json";
    {
        std::ofstream out(path);
        out << "{\"a\": ";
    }
    EXPECT_THROW(config::load_file(path.string()), ValidationError);
    std::filesystem::remove(path);
    EXPECT_THROW(config::parse_text("{"), ValidationError);
    EXPECT_EQ(config::parse_text(R"({"a": 1})").at("a"), 1);
}
