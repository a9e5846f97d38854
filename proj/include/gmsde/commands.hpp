#pragma once

// The run, check and demo-example4 commands. Each returns a process exit
// status: 0 on success, 1 on I/O failure, 2 when a pass flag or check fails.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gmsde/checks.hpp"
#include "gmsde/coeffs.hpp"
#include "gmsde/config.hpp"
#include "gmsde/harness.hpp"
#include "gmsde/report.hpp"

namespace gmsde {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void ensure_writable_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw OutputError("cannot create output directory " + dir.string() + ": " + ec.message());
  const auto probe = dir / ".gmsde-write-probe";
  {
    std::ofstream os(probe);
    if (!os) throw OutputError("output directory " + dir.string() + " is not writable");
  }
  std::filesystem::remove(probe, ec);
}

inline void write_file(const std::filesystem::path& file, const std::string& content) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw OutputError("cannot open " + file.string() + " for writing");
  os << content;
  os.flush();
  if (!os) throw OutputError("write to " + file.string() + " failed");
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline void print_report(std::ostream& out, const ConvergenceReport& rep) {
  out << std::setw(10) << "eps" << std::setw(12) << "horizon" << std::setw(14) << "err2p" << std::setw(12)
      << "stderr";
  if (!rep.rows.empty()) {
    for (double d : rep.rows.front().delta2) {
      std::ostringstream label;
      label << "C@" << d;
      out << std::setw(12) << label.str();
    }
  }
  out << '\n';
  for (const auto& r : rep.rows) {
    out << std::setw(10) << r.eps << std::setw(12) << r.horizon << std::setw(14) << r.err2p << std::setw(12)
        << r.stderr_err2p;
    for (const auto& c : r.capacity) out << std::setw(12) << c.value;
    out << '\n';
  }
  if (rep.fit_ok) {
    out << "slope " << rep.fit.slope << " (floor " << rep.slope_floor << "), Q " << rep.Q << '\n';
  } else if (rep.identically_zero) {
    out << "error identically zero\n";
  }
  const auto flag = [&](const char* name, bool v) { out << "  " << (v ? "PASS " : "FAIL ") << name << '\n'; };
  flag("monotone_error", rep.flags.monotone_error);
  flag("slope_above_floor", rep.flags.slope_above_floor);
  flag("capacity_halves", rep.flags.capacity_halves);
  flag("chebyshev_dominated", rep.flags.chebyshev_dominated);
  flag("discrete_inclusion", rep.flags.discrete_inclusion);
}

inline ConvergenceReport run_and_write(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                                       json* summary_out) {
  ensure_writable_dir(dir);
  const AveragingExperiment exp = build_experiment(cfg);

  PathObserver observer;
  std::mutex io;
  std::ofstream paths;
  if (cfg.emit_paths) {
    paths.open(dir / "paths.csv", std::ios::binary);
    if (!paths) throw OutputError("cannot open " + (dir / "paths.csv").string() + " for writing");
    paths << "scenario,path,t,B,QV\n";
    // Threads may finish out of order; only the first path of each scenario is dumped.
    observer = [&](std::size_t s, std::size_t j, const GPath& gp, const TimeGrid& grid) {
      if (j != 0) return;
      std::ostringstream os;
      for (std::size_t k = 0; k <= grid.n_steps(); ++k) {
        os << s << ',' << j << ',' << format_double(grid.t(k)) << ',' << format_double(gp.b_at(k)) << ','
           << format_double(gp.qv[k]) << '\n';
      }
      std::lock_guard lock(io);
      paths << os.str();
    };
  }

  const ConvergenceReport rep = run_experiment(exp, cfg.slope_floor, observer);
  if (paths.is_open()) {
    paths.flush();
    if (!paths) throw OutputError("write to paths.csv failed");
  }

  std::ostringstream csv;
  write_rates_csv(csv, rep);
  write_file(dir / "rates.csv", csv.str());
  json summary = summary_json(rep, cfg);
  if (summary_out) {
    *summary_out = std::move(summary);
  } else {
    write_file(dir / "summary.json", summary.dump(2) + "\n");
  }
  write_file(dir / "plot.gp", plot_script(rep, cfg, utc_timestamp()));
  return rep;
}

}  // namespace detail

inline int cmd_run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const auto rep = detail::run_and_write(cfg, cfg.output_dir, nullptr);
    detail::print_report(out, rep);
    out << "wrote " << (std::filesystem::path(cfg.output_dir) / "rates.csv").string() << ", summary.json, plot.gp\n";
    return rep.flags.all() ? 0 : 2;
  } catch (const OutputError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

inline int cmd_check(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    detail::ensure_writable_dir(cfg.output_dir);
  } catch (const OutputError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  const auto rows = run_property_suite(cfg);
  bool all = true;
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  for (const auto& r : rows) {
    out << (r.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(static_cast<int>(width)) << r.name
        << std::right << "  " << r.detail << '\n';
    all = all && r.passed;
  }
  out << (all ? "all checks passed" : "some checks failed") << '\n';
  return all ? 0 : 2;
}

// Deviation of the example's coefficients from their closed-form averages
// at a few states and averaging windows.
inline std::string deviation_table(const CoefficientTriple& triple, const AveragedTriple& averaged,
                                   json& diagnostics) {
  std::ostringstream csv;
  csv << "x,T1,dev_f,dev_g,dev_sigma_sq,cesaro_f,cesaro_g,cesaro_sigma\n";
  diagnostics = json::array();
  const double pi = std::numbers::pi;
  for (double x : {0.5, 1.0, pi / 2.0, 2.0}) {
    for (double t1 : {pi, 2.0 * pi, 10.0, 100.0}) {
      const auto dev = averaging_deviation(triple, averaged, {x}, t1, 4097);
      csv << format_double(x) << ',' << format_double(t1) << ',' << format_double(dev.dev_f) << ','
          << format_double(dev.dev_g) << ',' << format_double(dev.dev_sigma_sq) << ','
          << format_double(dev.cesaro_f) << ',' << format_double(dev.cesaro_g) << ','
          << format_double(dev.cesaro_sigma) << '\n';
      diagnostics.push_back({{"x", x},
                             {"T1", t1},
                             {"dev_f", dev.dev_f},
                             {"dev_g", dev.dev_g},
                             {"dev_sigma_sq", dev.dev_sigma_sq},
                             {"cesaro_f", dev.cesaro_f},
                             {"cesaro_g", dev.cesaro_g},
                             {"cesaro_sigma", dev.cesaro_sigma}});
    }
  }
  return csv.str();
}

inline int cmd_demo_example4(const ExperimentConfig& base, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = base;
  cfg.preset = "example4";
  const std::filesystem::path dir = std::filesystem::path(base.output_dir) / "demo-example4";
  try {
    json summary;
    const auto rep = detail::run_and_write(cfg, dir, &summary);
    const Preset preset = make_preset("example4", cfg.preset_params);
    json diagnostics;
    detail::write_file(dir / "deviation.csv", deviation_table(preset.original, preset.averaged, diagnostics));
    const double fbar = preset.averaged.evaluate({std::numbers::pi / 2.0}).f[0];
    summary["deviation"] = {
        {"note",
         "|sin s| averages to 2/pi but |f - fbar| does not vanish as T1 grows; the Cesaro means of the "
         "signed difference oscillate and are not monotone in T1"},
        {"fbar_at_half_pi", fbar},
        {"rows", diagnostics},
    };
    detail::write_file(dir / "summary.json", summary.dump(2) + "\n");
    detail::print_report(out, rep);
    out << "fbar(pi/2) = " << format_double(fbar) << '\n';
    out << "wrote " << dir.string() << "/{rates.csv,summary.json,plot.gp,deviation.csv}\n";
    return rep.flags.all() ? 0 : 2;
  } catch (const OutputError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace gmsde
