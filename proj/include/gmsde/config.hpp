#pragma once

// Experiment configuration: a JSON document with every key optional.
// Unknown keys and out-of-range values are errors that name the key path.

#include <cstddef>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gmsde/coeffs.hpp"
#include "gmsde/convex.hpp"
#include "gmsde/harness.hpp"
#include "gmsde/solver.hpp"

namespace gmsde {

using json = nlohmann::json;

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::invalid_argument("config: " + key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct PotentialSpec {
  // indicator_interval | indicator_box | zero | quadratic | log_cosh
  std::string kind = "indicator_interval";
  std::vector<double> low{-5.0};
  std::vector<double> high{5.0};
  double weight = 1.0;
  bool operator==(const PotentialSpec&) const = default;
};

struct SchemeSpec {
  // projection | penalization
  std::string kind = "projection";
  double eps_yosida = 0.01;
  bool operator==(const SchemeSpec&) const = default;
};

struct ExperimentConfig {
  std::string preset = "decaying";
  PresetParams preset_params;
  double sigma_low_sq = 1.0;
  double sigma_high_sq = 2.0;
  PotentialSpec potential;
  SchemeSpec scheme;
  std::vector<double> x0{1.0};
  double p = 1.0;
  double alpha = 0.25;
  double L = 1.0;
  double t_max = 100.0;
  bool allow_growing_horizon = false;
  std::vector<double> eps_list{0.1, 0.03, 0.01, 0.003};
  std::size_t paths_per_scenario = 200;
  std::size_t n_constant = 5;
  std::size_t n_switching = 3;
  std::size_t switch_points = 4;
  std::size_t steps_per_unit_time = 512;
  std::uint64_t seed = 42;
  std::vector<double> probes_delta2{0.05, 0.1, 0.2};
  double slope_floor = 0.5;
  std::string output_dir = "results";
  bool emit_paths = false;
  unsigned threads = 0;

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline void reject_unknown(const json& obj, const std::string& prefix,
                           const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(prefix.empty() ? "<root>" : prefix, "must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(prefix.empty() ? key : prefix + "." + key, "unknown key");
  }
}

inline double get_number(const json& obj, const std::string& key, const std::string& path, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(path, "must be a number");
  return v.get<double>();
}

inline std::uint64_t get_count(const json& obj, const std::string& key, const std::string& path,
                               std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned()) {
    throw ConfigError(path, "must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

inline bool get_bool(const json& obj, const std::string& key, const std::string& path, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) throw ConfigError(path, "must be a boolean");
  return obj.at(key).get<bool>();
}

inline std::string get_string(const json& obj, const std::string& key, const std::string& path,
                              const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) throw ConfigError(path, "must be a string");
  return obj.at(key).get<std::string>();
}

inline std::vector<double> get_numbers(const json& obj, const std::string& key, const std::string& path,
                                       const std::vector<double>& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw ConfigError(path, "must be a number or an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(path, "must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
  bool known_preset = false;
  for (const auto& n : preset_names()) known_preset = known_preset || n == c.preset;
  if (!known_preset) throw ConfigError("preset", "unknown preset '" + c.preset + "'");
  if (!(c.preset_params.gamma >= 0.0)) throw ConfigError("preset_params.gamma", "must be >= 0");
  if (c.preset_params.k_trunc < 1) throw ConfigError("preset_params.k_trunc", "must be >= 1");
  if (c.preset_params.m < 1) throw ConfigError("preset_params.m", "must be >= 1");

  if (!(c.sigma_low_sq >= 0.0)) throw ConfigError("band.sigma_low_sq", "must be >= 0");
  if (!(c.sigma_high_sq > 0.0)) throw ConfigError("band.sigma_high_sq", "must be > 0");
  if (!(c.sigma_low_sq <= c.sigma_high_sq)) throw ConfigError("band", "sigma_low_sq must not exceed sigma_high_sq");

  const auto& pk = c.potential.kind;
  if (pk == "indicator_interval" || pk == "indicator_box") {
    if (c.potential.low.size() != c.potential.high.size() || c.potential.low.empty()) {
      throw ConfigError("potential", "low and high must have the same non-zero length");
    }
    if (pk == "indicator_interval" && c.potential.low.size() != 1) {
      throw ConfigError("potential.low", "an interval takes scalar bounds");
    }
    for (std::size_t i = 0; i < c.potential.low.size(); ++i) {
      if (!(c.potential.low[i] < 0.0)) throw ConfigError("potential.low", "must be < 0 (0 interior to the domain)");
      if (!(c.potential.high[i] > 0.0)) throw ConfigError("potential.high", "must be > 0 (0 interior to the domain)");
    }
  } else if (pk == "quadratic" || pk == "log_cosh") {
    if (!(c.potential.weight >= 0.0)) throw ConfigError("potential.weight", "must be >= 0");
  } else if (pk != "zero") {
    throw ConfigError("potential.kind", "unknown potential kind '" + pk + "'");
  }

  if (c.scheme.kind == "penalization") {
    if (!(c.scheme.eps_yosida > 0.0)) throw ConfigError("scheme.eps_yosida", "must be > 0");
  } else if (c.scheme.kind != "projection") {
    throw ConfigError("scheme.kind", "must be 'projection' or 'penalization'");
  }

  if (c.x0.empty()) throw ConfigError("x0", "must not be empty");
  if (!(c.p >= 1.0)) throw ConfigError("p", "must be >= 1");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha", "must lie in (0, 1)");
  if (c.alpha >= 0.5 && !c.allow_growing_horizon) {
    throw ConfigError("alpha", "must be < 1/2 unless allow_growing_horizon is set");
  }
  if (!(c.L > 0.0)) throw ConfigError("L", "must be > 0");
  if (!(c.t_max > 0.0)) throw ConfigError("T_max", "must be > 0");
  if (c.eps_list.empty()) throw ConfigError("eps_list", "must not be empty");
  for (std::size_t i = 0; i < c.eps_list.size(); ++i) {
    if (!(c.eps_list[i] > 0.0 && c.eps_list[i] <= 1.0)) throw ConfigError("eps_list", "entries must lie in (0, 1]");
    if (i > 0 && !(c.eps_list[i] < c.eps_list[i - 1])) {
      throw ConfigError("eps_list", "must be strictly decreasing");
    }
  }
  if (c.paths_per_scenario < 1) throw ConfigError("paths_per_scenario", "must be >= 1");
  if (c.n_constant < 2) throw ConfigError("scenarios.n_constant", "must be >= 2");
  if (c.steps_per_unit_time < 1) throw ConfigError("steps_per_unit_time", "must be >= 1");
  for (double d : c.probes_delta2) {
    if (!(d > 0.0)) throw ConfigError("probes_delta2", "entries must be > 0");
  }
  if (c.output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

inline ExperimentConfig parse_config(std::string_view text) {
  using namespace detail;
  json doc;
  const std::string_view trimmed = text.substr(0, text.find_last_not_of(" \t\r\n") + 1);
  if (trimmed.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    doc = json::object();
  } else {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError("<root>", std::string("malformed document: ") + e.what());
    }
  }
  reject_unknown(doc, "",
                 {"preset", "preset_params", "band", "potential", "scheme", "x0", "p", "alpha", "L", "T_max",
                  "allow_growing_horizon", "eps_list", "paths_per_scenario", "scenarios",
                  "steps_per_unit_time", "seed", "probes_delta2", "slope_floor", "output_dir", "emit_paths",
                  "threads"});
  ExperimentConfig c;
  c.preset = get_string(doc, "preset", "preset", c.preset);
  if (doc.contains("preset_params")) {
    const auto& pp = doc.at("preset_params");
    reject_unknown(pp, "preset_params", {"gamma", "k_trunc", "m", "bs_drift", "bs_qv_drift", "bs_volatility"});
    auto& P = c.preset_params;
    P.gamma = get_number(pp, "gamma", "preset_params.gamma", P.gamma);
    P.k_trunc = get_count(pp, "k_trunc", "preset_params.k_trunc", P.k_trunc);
    P.m = get_count(pp, "m", "preset_params.m", P.m);
    P.bs_drift = get_number(pp, "bs_drift", "preset_params.bs_drift", P.bs_drift);
    P.bs_qv_drift = get_number(pp, "bs_qv_drift", "preset_params.bs_qv_drift", P.bs_qv_drift);
    P.bs_volatility = get_number(pp, "bs_volatility", "preset_params.bs_volatility", P.bs_volatility);
  }
  if (doc.contains("band")) {
    const auto& b = doc.at("band");
    reject_unknown(b, "band", {"sigma_low_sq", "sigma_high_sq"});
    c.sigma_low_sq = get_number(b, "sigma_low_sq", "band.sigma_low_sq", c.sigma_low_sq);
    c.sigma_high_sq = get_number(b, "sigma_high_sq", "band.sigma_high_sq", c.sigma_high_sq);
  }
  if (doc.contains("potential")) {
    const auto& pt = doc.at("potential");
    reject_unknown(pt, "potential", {"kind", "low", "high", "weight"});
    c.potential.kind = get_string(pt, "kind", "potential.kind", c.potential.kind);
    c.potential.low = get_numbers(pt, "low", "potential.low", c.potential.low);
    c.potential.high = get_numbers(pt, "high", "potential.high", c.potential.high);
    c.potential.weight = get_number(pt, "weight", "potential.weight", c.potential.weight);
  }
  if (doc.contains("scheme")) {
    const auto& sc = doc.at("scheme");
    reject_unknown(sc, "scheme", {"kind", "eps_yosida"});
    c.scheme.kind = get_string(sc, "kind", "scheme.kind", c.scheme.kind);
    c.scheme.eps_yosida = get_number(sc, "eps_yosida", "scheme.eps_yosida", c.scheme.eps_yosida);
  }
  c.x0 = get_numbers(doc, "x0", "x0", c.x0);
  c.p = get_number(doc, "p", "p", c.p);
  c.alpha = get_number(doc, "alpha", "alpha", c.alpha);
  c.L = get_number(doc, "L", "L", c.L);
  c.t_max = get_number(doc, "T_max", "T_max", c.t_max);
  c.allow_growing_horizon = get_bool(doc, "allow_growing_horizon", "allow_growing_horizon", c.allow_growing_horizon);
  c.eps_list = get_numbers(doc, "eps_list", "eps_list", c.eps_list);
  c.paths_per_scenario = get_count(doc, "paths_per_scenario", "paths_per_scenario", c.paths_per_scenario);
  if (doc.contains("scenarios")) {
    const auto& s = doc.at("scenarios");
    reject_unknown(s, "scenarios", {"n_constant", "n_switching", "switch_points"});
    c.n_constant = get_count(s, "n_constant", "scenarios.n_constant", c.n_constant);
    c.n_switching = get_count(s, "n_switching", "scenarios.n_switching", c.n_switching);
    c.switch_points = get_count(s, "switch_points", "scenarios.switch_points", c.switch_points);
  }
  c.steps_per_unit_time = get_count(doc, "steps_per_unit_time", "steps_per_unit_time", c.steps_per_unit_time);
  c.seed = get_count(doc, "seed", "seed", c.seed);
  c.probes_delta2 = get_numbers(doc, "probes_delta2", "probes_delta2", c.probes_delta2);
  c.slope_floor = get_number(doc, "slope_floor", "slope_floor", c.slope_floor);
  c.output_dir = get_string(doc, "output_dir", "output_dir", c.output_dir);
  c.emit_paths = get_bool(doc, "emit_paths", "emit_paths", c.emit_paths);
  c.threads = static_cast<unsigned>(get_count(doc, "threads", "threads", c.threads));
  validate(c);
  return c;
}

inline json to_json(const ExperimentConfig& c) {
  const auto& P = c.preset_params;
  return json{
      {"preset", c.preset},
      {"preset_params",
       {{"gamma", P.gamma}, {"k_trunc", P.k_trunc}, {"m", P.m}, {"bs_drift", P.bs_drift},
        {"bs_qv_drift", P.bs_qv_drift}, {"bs_volatility", P.bs_volatility}}},
      {"band", {{"sigma_low_sq", c.sigma_low_sq}, {"sigma_high_sq", c.sigma_high_sq}}},
      {"potential",
       {{"kind", c.potential.kind}, {"low", c.potential.low}, {"high", c.potential.high},
        {"weight", c.potential.weight}}},
      {"scheme", {{"kind", c.scheme.kind}, {"eps_yosida", c.scheme.eps_yosida}}},
      {"x0", c.x0},
      {"p", c.p},
      {"alpha", c.alpha},
      {"L", c.L},
      {"T_max", c.t_max},
      {"allow_growing_horizon", c.allow_growing_horizon},
      {"eps_list", c.eps_list},
      {"paths_per_scenario", c.paths_per_scenario},
      {"scenarios",
       {{"n_constant", c.n_constant}, {"n_switching", c.n_switching}, {"switch_points", c.switch_points}}},
      {"steps_per_unit_time", c.steps_per_unit_time},
      {"seed", c.seed},
      {"probes_delta2", c.probes_delta2},
      {"slope_floor", c.slope_floor},
      {"output_dir", c.output_dir},
      {"emit_paths", c.emit_paths},
      {"threads", c.threads},
  };
}

inline ConvexPotential build_potential(const PotentialSpec& spec, std::size_t dim) {
  if (spec.kind == "indicator_interval") return indicator_interval(spec.low.at(0), spec.high.at(0));
  if (spec.kind == "indicator_box") return indicator_box(spec.low, spec.high);
  if (spec.kind == "quadratic") return quadratic_potential(spec.weight, dim);
  if (spec.kind == "log_cosh") return log_cosh_potential(spec.weight, dim);
  return zero_potential(dim);
}

inline Scheme build_scheme(const SchemeSpec& spec) {
  if (spec.kind == "penalization") return Penalization{spec.eps_yosida};
  return Projection{};
}

inline AveragingExperiment build_experiment(const ExperimentConfig& c) {
  validate(c);
  Preset preset = make_preset(c.preset, c.preset_params);
  const std::size_t d = preset.original.dims().state;
  ConvexPotential pot = build_potential(c.potential, d);
  if (pot.dimension() != d) throw ConfigError("potential", "dimension does not match the preset state dimension");
  if (c.x0.size() != d) throw ConfigError("x0", "dimension does not match the preset state dimension");
  if (!pot.in_domain(c.x0)) throw ConfigError("x0", "must lie in the closed domain of the potential");
  AveragingExperiment exp{
      .preset_name = c.preset,
      .original = std::move(preset.original),
      .averaged = std::move(preset.averaged),
      .potential = std::move(pot),
      .x0 = c.x0,
      .band = VolatilityBand(c.sigma_low_sq, c.sigma_high_sq),
      .scheme = build_scheme(c.scheme),
      .p = c.p,
      .eps_list = c.eps_list,
      .L = c.L,
      .alpha = c.alpha,
      .t_max = c.t_max,
      .paths_per_scenario = c.paths_per_scenario,
      .n_constant = c.n_constant,
      .n_switching = c.n_switching,
      .switch_points = c.switch_points,
      .base_seed = c.seed,
      .steps_per_unit_time = c.steps_per_unit_time,
      .min_steps = 64,
      .probes_delta2 = c.probes_delta2,
      .threads = c.threads,
      .check_inclusions = true,
  };
  validate(exp);
  return exp;
}

}  // namespace gmsde
