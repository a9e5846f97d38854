#pragma once

// Result files: rates.csv, summary.json and plot.gp.

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "gmsde/config.hpp"
#include "gmsde/harness.hpp"

namespace gmsde {

inline constexpr const char* kVersion = "0.1.0";

// Shortest form is not required; 17 significant digits reproduce the double.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_rates_csv(std::ostream& os, const ConvergenceReport& rep) {
  os << "eps,horizon,err2p,stderr";
  if (!rep.rows.empty()) {
    for (double d : rep.rows.front().delta2) os << ",capacity@" << format_double(d);
  }
  os << '\n';
  for (const auto& r : rep.rows) {
    os << format_double(r.eps) << ',' << format_double(r.horizon) << ',' << format_double(r.err2p) << ','
       << format_double(r.stderr_err2p);
    for (const auto& c : r.capacity) os << ',' << format_double(c.value);
    os << '\n';
  }
}

inline json summary_json(const ConvergenceReport& rep, const ExperimentConfig& cfg) {
  json pass{
      {"monotone_error", rep.flags.monotone_error},
      {"slope_above_floor", rep.flags.slope_above_floor},
      {"capacity_halves", rep.flags.capacity_halves},
      {"chebyshev_dominated", rep.flags.chebyshev_dominated},
      {"discrete_inclusion", rep.flags.discrete_inclusion},
      {"all", rep.flags.all()},
  };
  std::size_t vi_checks = 0, vi_viol = 0, vi_vacuous = 0, mono_checks = 0, mono_viol = 0;
  json rows = json::array();
  for (const auto& r : rep.rows) {
    vi_checks += r.inclusion.checks;
    vi_viol += r.inclusion.violations;
    vi_vacuous += r.inclusion.vacuous;
    mono_checks += r.monotonicity.checks;
    mono_viol += r.monotonicity.violations;
    json caps = json::array();
    for (std::size_t i = 0; i < r.delta2.size(); ++i) {
      caps.push_back({{"delta2", r.delta2[i]},
                      {"capacity", r.capacity[i].value},
                      {"stderr", r.capacity[i].standard_error},
                      {"argmax_scenario", r.capacity[i].argmax_scenario}});
    }
    rows.push_back({{"eps", r.eps},
                    {"horizon", r.horizon},
                    {"n_steps", r.n_steps},
                    {"err2p", r.err2p},
                    {"stderr", r.stderr_err2p},
                    {"argmax_scenario", r.argmax_scenario},
                    {"per_scenario_means", r.per_scenario_means},
                    {"capacity", caps}});
  }
  json out{
      {"version", kVersion},
      {"preset", cfg.preset},
      {"estimator", "lower estimate: max over a finite volatility-scenario family"},
      {"slope", rep.fit_ok ? json(rep.fit.slope) : json(nullptr)},
      {"intercept", rep.fit_ok ? json(rep.fit.log_intercept) : json(nullptr)},
      {"Q", rep.fit_ok ? json(rep.Q) : json(nullptr)},
      {"slope_floor", rep.slope_floor},
      {"bound_slope", 1.0 - cfg.alpha},
      {"identically_zero", rep.identically_zero},
      {"inversions", rep.inversions},
      {"pass", pass},
      {"discrete_checks",
       {{"inclusion_checks", vi_checks},
        {"inclusion_violations", vi_viol},
        {"inclusion_vacuous", vi_vacuous},
        {"monotonicity_checks", mono_checks},
        {"monotonicity_violations", mono_viol}}},
      {"seeds", {{"base_seed", cfg.seed}}},
      {"rows", rows},
      {"config", to_json(cfg)},
  };
  return out;
}

inline std::string plot_script(const ConvergenceReport& rep, const ExperimentConfig& cfg,
                               const std::string& timestamp) {
  std::ostringstream os;
  os << "# generated " << timestamp << '\n';
  os << "set datafile separator \",\"\n"
     << "set logscale xy\n"
     << "set key top left\n"
     << "set xlabel \"eps\"\n"
     << "set ylabel \"sup-distance moment of order 2p (lower estimate)\"\n"
     << "set terminal pngcairo size 800,600\n"
     << "set output \"rates.png\"\n"
     << "bound_slope = " << format_double(1.0 - cfg.alpha) << '\n';
  if (rep.fit_ok) {
    os << "slope = " << format_double(rep.fit.slope) << '\n'
       << "Q = " << format_double(rep.Q) << '\n'
       << "plot \"rates.csv\" every ::1 using 1:3:4 with yerrorbars title \"err2p\", \\\n"
       << "     Q * x**slope with lines title sprintf(\"fit, slope %.3f\", slope), \\\n"
       << "     Q * x**bound_slope with lines dashtype 2 title \"slope 1 - alpha\"\n";
  } else {
    os << "plot \"rates.csv\" every ::1 using 1:3:4 with yerrorbars title \"err2p\"\n";
  }
  return os.str();
}

}  // namespace gmsde
