#pragma once

// Averaging experiments: original and averaged rescaled equations driven by
// one shared noise path per (scenario, path), sublinear moment of the sup
// distance, capacity of large deviations, and a log-log rate fit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gmsde/coeffs.hpp"
#include "gmsde/convex.hpp"
#include "gmsde/gbm.hpp"
#include "gmsde/gexp.hpp"
#include "gmsde/rng.hpp"
#include "gmsde/solver.hpp"

namespace gmsde {

// Runs body(i) for i in [0, count) on up to `threads` workers. Results must
// be written to per-index slots; the first exception (lowest index) wins.
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < count; i += stride) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t, threads);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct AveragingExperiment {
  std::string preset_name;
  CoefficientTriple original;
  AveragedTriple averaged;
  ConvexPotential potential;
  Point x0;
  VolatilityBand band;
  Scheme scheme = Projection{};
  double p = 1.0;
  std::vector<double> eps_list{0.1, 0.03, 0.01, 0.003};
  double L = 1.0;
  double alpha = 0.25;
  double t_max = 100.0;
  std::size_t paths_per_scenario = 200;
  std::size_t n_constant = 5;
  std::size_t n_switching = 3;
  std::size_t switch_points = 4;
  std::uint64_t base_seed = 42;
  std::size_t steps_per_unit_time = 512;
  std::size_t min_steps = 64;
  std::vector<double> probes_delta2{0.05, 0.1, 0.2};
  unsigned threads = 0;
  bool check_inclusions = true;

  // L eps^{1/2 - alpha}, clipped to t_max.
  double horizon(double eps) const { return std::min(L * std::pow(eps, 0.5 - alpha), t_max); }

  std::size_t n_steps(double eps) const {
    const double raw = std::ceil(static_cast<double>(steps_per_unit_time) * horizon(eps));
    return std::max(min_steps, static_cast<std::size_t>(raw));
  }

  ScenarioSet scenarios(double horizon_value) const {
    return make_scenario_set(band, n_constant, n_switching, switch_points,
                             derive_seed(base_seed, 0xC0u), horizon_value);
  }
};

inline void validate(const AveragingExperiment& exp) {
  if (exp.eps_list.empty()) throw std::invalid_argument("eps_list must not be empty");
  for (std::size_t i = 0; i < exp.eps_list.size(); ++i) {
    const double e = exp.eps_list[i];
    if (!(e > 0.0 && e <= 1.0)) throw std::invalid_argument("eps_list entries must lie in (0, 1]");
    if (i > 0 && !(e < exp.eps_list[i - 1])) {
      throw std::invalid_argument("eps_list must be strictly decreasing");
    }
  }
  if (!(exp.p >= 1.0)) throw std::invalid_argument("p must be >= 1");
  if (!(exp.L > 0.0)) throw std::invalid_argument("L must be positive");
  if (!(exp.alpha > 0.0 && exp.alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (!(exp.t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
  if (exp.paths_per_scenario == 0) throw std::invalid_argument("paths_per_scenario must be positive");
  if (exp.steps_per_unit_time == 0) throw std::invalid_argument("steps_per_unit_time must be positive");
  for (double d : exp.probes_delta2) {
    if (!(d > 0.0)) throw std::invalid_argument("delta2 probes must be positive");
  }
  if (!(exp.original.dims() == exp.averaged.dims())) {
    throw std::invalid_argument("original and averaged triples differ in shape");
  }
}

struct CoupledResult {
  double eps = 0.0;
  double horizon = 0.0;
  std::size_t n_steps = 0;
  double err2p = 0.0;
  double stderr_err2p = 0.0;
  std::size_t argmax_scenario = 0;
  std::vector<double> per_scenario_means;
  std::vector<double> delta2;
  std::vector<CapacityEstimate> capacity;
  InclusionReport inclusion;
  InclusionReport monotonicity;
};

// Optional observer for the generated noise paths (debug dumps).
using PathObserver =
    std::function<void(std::size_t scenario, std::size_t path, const GPath&, const TimeGrid&)>;

inline std::vector<Point> inclusion_probes(const ConvexPotential& pot) {
  std::vector<Point> probes;
  const std::size_t d = pot.dimension();
  if (const auto* box = std::get_if<IndicatorBox>(&pot.kind())) {
    for (double frac : {0.0, 0.5, 1.0}) {
      Point lo(d);
      Point hi(d);
      for (std::size_t i = 0; i < d; ++i) {
        // Unbounded sides are probed at distance 1 from the origin.
        lo[i] = frac * (std::isfinite(box->low[i]) ? box->low[i] : -1.0);
        hi[i] = frac * (std::isfinite(box->high[i]) ? box->high[i] : 1.0);
      }
      probes.push_back(lo);
      if (frac > 0.0) probes.push_back(hi);
    }
  } else {
    for (double v : {-1.0, 0.0, 1.0}) probes.emplace_back(d, v);
  }
  return probes;
}

inline CoupledResult run_coupled(const AveragingExperiment& exp, std::size_t eps_index,
                                 const PathObserver& observer = {}) {
  if (eps_index >= exp.eps_list.size()) throw std::out_of_range("eps index outside eps_list");
  const double eps = exp.eps_list[eps_index];
  const double horizon = exp.horizon(eps);
  const TimeGrid grid(horizon, exp.n_steps(eps));
  const ScenarioSet set = exp.scenarios(horizon);
  const MSDEProblem problem(exp.original, exp.potential, exp.x0, exp.band, exp.scheme, grid,
                            exp.averaged);
  const std::vector<Point> probes = inclusion_probes(exp.potential);
  const std::size_t n_scen = set.size();
  const std::size_t n_paths = exp.paths_per_scenario;
  const std::size_t m = exp.original.dims().noise;

  std::vector<double> sup_dist(n_scen * n_paths, 0.0);
  std::vector<InclusionReport> incl(n_scen * n_paths);
  std::vector<InclusionReport> mono(n_scen * n_paths);

  parallel_for(n_scen * n_paths, exp.threads, [&](std::size_t idx) {
    const std::size_t s = idx / n_paths;
    const std::size_t j = idx % n_paths;
    const std::uint64_t seed = derive_seed(exp.base_seed, eps_index, s, j);
    const GPath gpath = sample_path(set.controls[s], grid, seed, m, s);
    if (observer) observer(s, j, gpath, grid);
    try {
      const auto xs = solve_rescaled(problem, gpath, eps, DynamicsKind::Original);
      const auto zs = solve_rescaled(problem, gpath, eps, DynamicsKind::Averaged);
      double best = 0.0;
      const std::size_t d = xs.dim;
      for (std::size_t n = 0; n <= grid.n_steps(); ++n) {
        double sq = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          const double diff = xs.x[n * d + i] - zs.x[n * d + i];
          sq += diff * diff;
        }
        best = std::max(best, sq);
      }
      sup_dist[idx] = std::sqrt(best);
      if (exp.check_inclusions) {
        incl[idx] = check_inclusion(problem, xs, probes);
        incl[idx] += check_inclusion(problem, zs, probes);
        mono[idx] = check_pair_monotonicity(problem, xs, zs);
      }
    } catch (const SolverBlowUp& e) {
      throw std::runtime_error(std::string(e.what()) + " (scenario " + std::to_string(s) +
                               ", path " + std::to_string(j) + ", eps " + std::to_string(eps) + ")");
    }
  });

  CoupledResult res;
  res.eps = eps;
  res.horizon = horizon;
  res.n_steps = grid.n_steps();
  ScenarioSamples stat(n_scen);
  for (std::size_t s = 0; s < n_scen; ++s) {
    for (std::size_t j = 0; j < n_paths; ++j) {
      stat[s].push_back(std::pow(sup_dist[s * n_paths + j], 2.0 * exp.p));
      res.inclusion += incl[s * n_paths + j];
      res.monotonicity += mono[s * n_paths + j];
    }
  }
  const auto est = sublinear_expectation(stat);
  res.err2p = est.value;
  res.stderr_err2p = est.standard_error;
  res.argmax_scenario = est.argmax_scenario;
  res.per_scenario_means = est.per_scenario_means;
  for (double delta : exp.probes_delta2) {
    ScenarioSamples events(n_scen);
    for (std::size_t s = 0; s < n_scen; ++s) {
      for (std::size_t j = 0; j < n_paths; ++j) {
        events[s].push_back(sup_dist[s * n_paths + j] > delta ? 1.0 : 0.0);
      }
    }
    res.delta2.push_back(delta);
    res.capacity.push_back(capacity(events));
  }
  return res;
}

struct RateFit {
  double slope = 0.0;
  double log_intercept = 0.0;
};

// Ordinary least squares of log(err) on log(eps) over rows with err > 0.
inline RateFit fit_rate(std::span<const double> eps, std::span<const double> err) {
  if (eps.size() != err.size()) throw std::invalid_argument("fit_rate: size mismatch");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (err[i] > 0.0 && eps[i] > 0.0) {
      lx.push_back(std::log(eps[i]));
      ly.push_back(std::log(err[i]));
    }
  }
  if (lx.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 positive rows");
  const double n = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_rate: eps values are not distinct");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.log_intercept = my - fit.slope * mx;
  return fit;
}

struct ConvergenceFlags {
  bool monotone_error = false;
  bool slope_above_floor = false;
  bool capacity_halves = false;
  bool chebyshev_dominated = false;
  bool discrete_inclusion = false;

  bool all() const {
    return monotone_error && slope_above_floor && capacity_halves && chebyshev_dominated &&
           discrete_inclusion;
  }
};

struct ConvergenceReport {
  std::vector<CoupledResult> rows;
  bool fit_ok = false;
  bool identically_zero = false;
  RateFit fit;
  double Q = std::numeric_limits<double>::quiet_NaN();
  double slope_floor = 0.5;
  std::size_t inversions = 0;
  ConvergenceFlags flags;
};

// err2p strictly decreasing except for at most one inversion that stays
// within two combined standard errors.
inline bool monotone_with_tolerance(const std::vector<CoupledResult>& rows, std::size_t* inversions = nullptr) {
  std::size_t inv = 0;
  bool ok = true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].err2p < rows[i - 1].err2p) continue;
    ++inv;
    const double se = std::hypot(rows[i].stderr_err2p, rows[i - 1].stderr_err2p);
    if (rows[i].err2p - rows[i - 1].err2p > 2.0 * se) ok = false;
  }
  if (inversions) *inversions = inv;
  return ok && inv <= 1;
}

// Capacity bounded by err2p / delta^{2p} plus three standard errors.
inline bool chebyshev_dominated(const CoupledResult& row, double p) {
  for (std::size_t i = 0; i < row.delta2.size(); ++i) {
    const double bound = row.err2p / std::pow(row.delta2[i], 2.0 * p);
    if (row.capacity[i].value > bound + 3.0 * row.capacity[i].standard_error) return false;
  }
  return true;
}

inline ConvergenceReport summarize(std::vector<CoupledResult> rows, double p, double slope_floor = 0.5) {
  ConvergenceReport rep;
  rep.rows = std::move(rows);
  rep.slope_floor = slope_floor;
  std::vector<double> eps;
  std::vector<double> err;
  for (const auto& r : rep.rows) {
    eps.push_back(r.eps);
    err.push_back(r.err2p);
  }
  rep.identically_zero = std::all_of(err.begin(), err.end(), [](double e) { return e == 0.0; });
  try {
    rep.fit = fit_rate(eps, err);
    rep.fit_ok = true;
    rep.Q = std::exp(rep.fit.log_intercept);
  } catch (const std::invalid_argument&) {
    rep.fit_ok = false;
  }

  rep.flags.monotone_error = rep.identically_zero || monotone_with_tolerance(rep.rows, &rep.inversions);
  rep.flags.slope_above_floor = rep.identically_zero || (rep.fit_ok && rep.fit.slope >= slope_floor);

  rep.flags.capacity_halves = true;
  if (!rep.rows.empty()) {
    const auto& first = rep.rows.front();
    const auto& last = rep.rows.back();
    for (std::size_t i = 0; i < first.capacity.size(); ++i) {
      if (last.capacity[i].value > 0.5 * first.capacity[i].value) rep.flags.capacity_halves = false;
    }
  }
  rep.flags.chebyshev_dominated = std::all_of(rep.rows.begin(), rep.rows.end(),
                                              [p](const CoupledResult& r) { return chebyshev_dominated(r, p); });
  rep.flags.discrete_inclusion = std::all_of(rep.rows.begin(), rep.rows.end(), [](const CoupledResult& r) {
    return r.inclusion.ok() && r.monotonicity.ok();
  });
  return rep;
}

inline ConvergenceReport run_experiment(const AveragingExperiment& exp, double slope_floor = 0.5,
                                        const PathObserver& observer = {}) {
  validate(exp);
  std::vector<CoupledResult> rows;
  for (std::size_t i = 0; i < exp.eps_list.size(); ++i) {
    rows.push_back(run_coupled(exp, i, i == 0 ? observer : PathObserver{}));
  }
  return summarize(std::move(rows), exp.p, slope_floor);
}

struct MomentStability {
  double fine = 0.0;
  double coarse = 0.0;
  double relative_change = 0.0;
};

// E^[sup |X|^{2p}] of the original (unscaled) equation on [0, horizon] with
// step h and with step 2h, the coarse run reusing the fine noise.
inline MomentStability moment_stability(const AveragingExperiment& exp, double horizon,
                                        std::size_t fine_steps, std::size_t paths_per_scenario) {
  if (fine_steps < 2 || fine_steps % 2 != 0) throw std::invalid_argument("moment_stability: fine_steps must be even");
  const TimeGrid fine_grid(horizon, fine_steps);
  const TimeGrid coarse_grid(horizon, fine_steps / 2);
  const MSDEProblem fine(exp.original, exp.potential, exp.x0, exp.band, exp.scheme, fine_grid);
  const MSDEProblem coarse = fine.with_grid(coarse_grid);
  const ScenarioSet set = exp.scenarios(horizon);
  const std::size_t m = exp.original.dims().noise;
  const std::size_t n_scen = set.size();

  std::vector<double> fine_stat(n_scen * paths_per_scenario);
  std::vector<double> coarse_stat(n_scen * paths_per_scenario);
  parallel_for(n_scen * paths_per_scenario, exp.threads, [&](std::size_t idx) {
    const std::size_t s = idx / paths_per_scenario;
    const std::size_t j = idx % paths_per_scenario;
    const GPath path = sample_path(set.controls[s], fine_grid, derive_seed(exp.base_seed, 0x57ABu, s, j), m, s);
    fine_stat[idx] = sup_norm_power(solve_path(fine, path), exp.p);
    coarse_stat[idx] = sup_norm_power(solve_path(coarse, coarsen(path, 2)), exp.p);
  });
  ScenarioSamples a(n_scen);
  ScenarioSamples b(n_scen);
  for (std::size_t s = 0; s < n_scen; ++s) {
    a[s].assign(fine_stat.begin() + s * paths_per_scenario, fine_stat.begin() + (s + 1) * paths_per_scenario);
    b[s].assign(coarse_stat.begin() + s * paths_per_scenario, coarse_stat.begin() + (s + 1) * paths_per_scenario);
  }
  MomentStability out;
  out.fine = sublinear_expectation(a).value;
  out.coarse = sublinear_expectation(b).value;
  out.relative_change = std::abs(out.coarse - out.fine) / std::max(std::abs(out.fine), 1e-300);
  return out;
}

// ---------------------------------------------------------------------------
// Bihari-type utilities

// x log(1/x) up to eta, continued linearly with slope log(1/eta) - 1.
inline double rho_eta(double x, double eta) {
  if (!(eta > 0.0 && eta < 1.0 / std::numbers::e)) throw std::invalid_argument("rho_eta: eta must lie in (0, 1/e)");
  if (!(x >= 0.0)) throw std::invalid_argument("rho_eta: x must be >= 0");
  if (x == 0.0) return 0.0;
  const double log_inv_eta = std::log(1.0 / eta);
  if (x <= eta) return x * std::log(1.0 / x);
  return eta * log_inv_eta + (log_inv_eta - 1.0) * (x - eta);
}

struct BihariBound {
  double bound = 0.0;
  // The lemma's constant C(T, delta, eta) is reported as 1.
  double constant = 1.0;
  double power_term = 0.0;
  double linear_term = 0.0;
};

inline BihariBound bihari_bound(double h0, double delta, double horizon, double eta) {
  if (!(eta > 0.0 && eta < 1.0 / std::numbers::e)) throw std::invalid_argument("bihari_bound: eta must lie in (0, 1/e)");
  if (!(h0 >= 0.0)) throw std::invalid_argument("bihari_bound: h0 must be >= 0");
  if (!(delta > 0.0) || !(horizon > 0.0)) throw std::invalid_argument("bihari_bound: delta, T must be positive");
  BihariBound b;
  b.power_term = h0 == 0.0 ? 0.0 : std::pow(h0, std::exp(-delta * horizon));
  b.linear_term = h0;
  b.bound = b.constant * (b.power_term + b.linear_term);
  return b;
}

// ---------------------------------------------------------------------------
// Empirical B-D-G constants

// Integrand evaluated at the left endpoint: eta(t_k, B_{t_k}, <B>_{t_k}).
using Integrand = std::function<double(double t, double b, double qv)>;

struct BdgCheck {
  // E^[ sup_t |int eta dB|^p ] and E^[ (int eta^2 ds)^{p/2} ].
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double lhs_stderr = 0.0;
  // E^[ sup_t |int eta d<B>|^p ] and T^{p-1} E^[ int |eta|^p ds ].
  double lhs_qv = 0.0;
  double rhs_qv = 0.0;
  double ratio_qv = 0.0;
  // sigma_high^{2p}: the d<B> ratio never exceeds this.
  double qv_ratio_bound = 0.0;
  // E^[ sum (dB)^2 ] against E^[ <B>_T ]: the squared-increment route.
  double squared_increment_qv = 0.0;
  double control_qv = 0.0;
};

inline BdgCheck bdg_empirical_check(const Integrand& eta, double p, const ScenarioSet& set,
                                    const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed) {
  if (!(p >= 1.0)) throw std::invalid_argument("bdg_empirical_check: p must be >= 1");
  if (n_paths == 0) throw std::invalid_argument("bdg_empirical_check: need paths");
  const std::size_t n_scen = set.size();
  ScenarioSamples lhs(n_scen), rhs(n_scen), lhs_qv(n_scen), rhs_qv(n_scen), sq_inc(n_scen), qv_end(n_scen);
  const double h = grid.step();
  for (std::size_t s = 0; s < n_scen; ++s) {
    for (std::size_t j = 0; j < n_paths; ++j) {
      const GPath path = sample_path(set.controls[s], grid, derive_seed(seed, 0xBD6u, s, j), 1, s);
      double ito = 0.0;
      double qv_int = 0.0;
      double sup_ito = 0.0;
      double sup_qv = 0.0;
      double energy = 0.0;
      double abs_p = 0.0;
      double squares = 0.0;
      for (std::size_t k = 0; k < grid.n_steps(); ++k) {
        const double e = eta(grid.t(k), path.b[k], path.qv[k]);
        ito += e * path.db[k];
        qv_int += e * path.dqv[k];
        sup_ito = std::max(sup_ito, std::abs(ito));
        sup_qv = std::max(sup_qv, std::abs(qv_int));
        energy += e * e * h;
        abs_p += std::pow(std::abs(e), p) * h;
        squares += path.db[k] * path.db[k];
      }
      lhs[s].push_back(std::pow(sup_ito, p));
      rhs[s].push_back(std::pow(energy, 0.5 * p));
      lhs_qv[s].push_back(std::pow(sup_qv, p));
      rhs_qv[s].push_back(std::pow(grid.horizon(), p - 1.0) * abs_p);
      sq_inc[s].push_back(squares);
      qv_end[s].push_back(path.qv.back());
    }
  }
  BdgCheck out;
  const auto l = sublinear_expectation(lhs);
  out.lhs = l.value;
  out.lhs_stderr = l.standard_error;
  out.rhs = sublinear_expectation(rhs).value;
  out.ratio = out.rhs > 0.0 ? out.lhs / out.rhs : 0.0;
  out.lhs_qv = sublinear_expectation(lhs_qv).value;
  out.rhs_qv = sublinear_expectation(rhs_qv).value;
  out.ratio_qv = out.rhs_qv > 0.0 ? out.lhs_qv / out.rhs_qv : 0.0;
  out.qv_ratio_bound = std::pow(set.band.high_sq(), p);
  out.squared_increment_qv = sublinear_expectation(sq_inc).value;
  out.control_qv = sublinear_expectation(qv_end).value;
  return out;
}

}  // namespace gmsde
