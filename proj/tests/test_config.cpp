#include <string>

#include <gtest/gtest.h>

#include "gmsde/config.hpp"

using namespace gmsde;

namespace {

std::string error_key(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST(ParseConfig, EmptyDocumentGivesDefaults) {
  for (const char* text : {"", "  \n", "{}"}) {
    const auto c = parse_config(text);
    EXPECT_EQ(c, ExperimentConfig{});
    EXPECT_EQ(c.p, 1.0);
    EXPECT_EQ(c.alpha, 0.25);
    EXPECT_EQ(c.L, 1.0);
    EXPECT_EQ(c.eps_list, (std::vector<double>{0.1, 0.03, 0.01, 0.003}));
    EXPECT_EQ(c.paths_per_scenario, 200u);
    EXPECT_EQ(c.n_constant, 5u);
    EXPECT_EQ(c.n_switching, 3u);
    EXPECT_EQ(c.steps_per_unit_time, 512u);
    EXPECT_EQ(c.seed, 42u);
  }
}

TEST(ParseConfig, AlphaOutOfRangeNamesAlpha) {
  EXPECT_EQ(error_key(R"({"alpha": 1.5})"), "alpha");
  try {
    parse_config(R"({"alpha": 1.5})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("alpha"), std::string::npos);
  }
}

TEST(ParseConfig, GrowingHorizonNeedsOptIn) {
  EXPECT_EQ(error_key(R"({"alpha": 0.6})"), "alpha");
  EXPECT_NO_THROW(parse_config(R"({"alpha": 0.6, "allow_growing_horizon": true})"));
}

TEST(ParseConfig, EpsListMustDecrease) {
  EXPECT_EQ(error_key(R"({"eps_list": [0.1, 0.2]})"), "eps_list");
  EXPECT_EQ(error_key(R"({"eps_list": [0.1, 0.1]})"), "eps_list");
  EXPECT_EQ(error_key(R"({"eps_list": []})"), "eps_list");
}

TEST(ParseConfig, UnknownKeysRejected) {
  EXPECT_EQ(error_key(R"({"alpah": 0.2})"), "alpah");
  EXPECT_EQ(error_key(R"({"band": {"sigma_hi": 2}})"), "band.sigma_hi");
  EXPECT_EQ(error_key(R"({"scenarios": {"n_constant": 3, "extra": 1}})"), "scenarios.extra");
}

TEST(ParseConfig, TypeAndRangeErrorsNameTheKey) {
  EXPECT_EQ(error_key(R"({"p": "one"})"), "p");
  EXPECT_EQ(error_key(R"({"p": 0.5})"), "p");
  EXPECT_EQ(error_key(R"({"paths_per_scenario": -3})"), "paths_per_scenario");
  EXPECT_EQ(error_key(R"({"band": {"sigma_low_sq": 3, "sigma_high_sq": 2}})"), "band");
  EXPECT_EQ(error_key(R"({"potential": {"kind": "indicator_interval", "low": 0.5, "high": 2}})"), "potential.low");
  EXPECT_EQ(error_key(R"({"scheme": {"kind": "implicit"}})"), "scheme.kind");
  EXPECT_EQ(error_key(R"({"preset": "heston"})"), "preset");
  EXPECT_EQ(error_key(R"({"probes_delta2": [0.1, 0]})"), "probes_delta2");
  EXPECT_EQ(error_key("[1, 2]"), "<root>");
  EXPECT_EQ(error_key("{not json"), "<root>");
}

TEST(ParseConfig, ReadsNestedValues) {
  const auto c = parse_config(R"({
    "preset": "example4",
    "preset_params": {"k_trunc": 50, "m": 4},
    "band": {"sigma_low_sq": 0.5, "sigma_high_sq": 3},
    "potential": {"kind": "log_cosh", "weight": 2},
    "scheme": {"kind": "penalization", "eps_yosida": 0.05},
    "x0": 0.3,
    "eps_list": [0.2, 0.02, 0.002],
    "scenarios": {"n_constant": 3, "n_switching": 0, "switch_points": 0},
    "seed": 7,
    "threads": 2
  })");
  EXPECT_EQ(c.preset, "example4");
  EXPECT_EQ(c.preset_params.k_trunc, 50u);
  EXPECT_EQ(c.sigma_high_sq, 3.0);
  EXPECT_EQ(c.potential.kind, "log_cosh");
  EXPECT_EQ(c.scheme.eps_yosida, 0.05);
  EXPECT_EQ(c.x0, (std::vector<double>{0.3}));
  EXPECT_EQ(c.n_switching, 0u);
  EXPECT_EQ(c.seed, 7u);
  const auto exp = build_experiment(c);
  EXPECT_EQ(exp.original.dims().noise, 4u);
  EXPECT_TRUE(std::holds_alternative<Penalization>(exp.scheme));
  EXPECT_EQ(exp.scenarios(1.0).size(), 3u);
}

TEST(ParseConfig, RoundTrip) {
  const auto c = parse_config(R"({
    "preset": "bs_market",
    "preset_params": {"bs_drift": 0.1, "bs_volatility": 0.3},
    "potential": {"kind": "indicator_interval", "low": -2, "high": 7},
    "eps_list": [0.5, 0.05],
    "probes_delta2": [0.3],
    "output_dir": "out/x",
    "emit_paths": true,
    "slope_floor": 0.25
  })");
  const auto again = parse_config(to_json(c).dump());
  EXPECT_EQ(again, c);
  EXPECT_EQ(parse_config(to_json(ExperimentConfig{}).dump()), ExperimentConfig{});
}

TEST(BuildExperiment, RejectsDimensionMismatchAndStartOutsideDomain) {
  ExperimentConfig c;
  c.x0 = {1.0, 2.0};
  EXPECT_THROW(build_experiment(c), ConfigError);
  c.x0 = {6.0};
  EXPECT_THROW(build_experiment(c), ConfigError);
}
