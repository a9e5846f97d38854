#pragma once

// Runtime property suite behind the `check` command. Sizes are small enough
// for an interactive run; the unit and acceptance tests cover the same
// properties at full scale.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gmsde/coeffs.hpp"
#include "gmsde/config.hpp"
#include "gmsde/convex.hpp"
#include "gmsde/gbm.hpp"
#include "gmsde/gexp.hpp"
#include "gmsde/harness.hpp"
#include "gmsde/solver.hpp"

namespace gmsde {

struct CheckRow {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace checks {

inline ScenarioSamples random_matrix(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> scen(1, 6);
  std::uniform_int_distribution<int> len(1, 30);
  std::normal_distribution<double> val(0.0, 3.0);
  ScenarioSamples m(static_cast<std::size_t>(scen(gen)));
  const auto n = static_cast<std::size_t>(len(gen));
  for (auto& row : m) {
    row.resize(n);
    for (double& v : row) v = val(gen);
  }
  return m;
}

// Monotonicity, constant preservation, sub-additivity and positive
// homogeneity of the max-of-means estimator on random fixed matrices.
inline CheckRow expectation_axioms(std::uint64_t seed, std::size_t trials = 100) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t failures = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto x = random_matrix(gen);
    auto y = x;
    auto sum = x;
    auto scaled = x;
    auto constant = x;
    const double c = 10.0 * unit(gen) - 5.0;
    const double lambda = 4.0 * unit(gen);
    auto other = x;
    for (std::size_t s = 0; s < x.size(); ++s) {
      for (std::size_t i = 0; i < x[s].size(); ++i) {
        y[s][i] = x[s][i] - unit(gen);
        other[s][i] = 2.0 * unit(gen) - 1.0;
        sum[s][i] = x[s][i] + other[s][i];
        scaled[s][i] = lambda * x[s][i];
        constant[s][i] = c;
      }
    }
    const double ex = sublinear_expectation(x).value;
    const double tol = 1e-12 * (1.0 + std::abs(ex));
    if (!(ex >= sublinear_expectation(y).value)) ++failures;
    if (std::abs(sublinear_expectation(constant).value - c) > 1e-12 * (1.0 + std::abs(c))) ++failures;
    if (sublinear_expectation(sum).value > ex + sublinear_expectation(other).value + tol) ++failures;
    if (std::abs(sublinear_expectation(scaled).value - lambda * ex) > 4.0 * tol * (1.0 + lambda)) ++failures;
  }
  return {"expectation axioms", failures == 0, std::to_string(trials) + " matrices, " +
                                                   std::to_string(failures) + " failures"};
}

inline CheckRow qv_envelope(const AveragingExperiment& exp) {
  const TimeGrid grid(1.0, 256);
  const ScenarioSet set = exp.scenarios(1.0);
  std::size_t bad = 0;
  std::size_t total = 0;
  for (std::size_t s = 0; s < set.size(); ++s) {
    for (std::size_t j = 0; j < 16; ++j, ++total) {
      if (!qv_band_check(sample_path(set.controls[s], grid, derive_seed(exp.base_seed, 0x9Au, s, j)), set.band, grid)) {
        ++bad;
      }
    }
  }
  return {"quadratic variation envelope", bad == 0, std::to_string(total) + " paths, " + std::to_string(bad) + " outside"};
}

// Lipschitz and monotone Yosida gradient, envelope increasing as eps
// shrinks, projection idempotent and nonexpansive.
inline CheckRow prox_invariants(const ConvexPotential& pot, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> val(0.0, 4.0);
  const std::size_t d = pot.dimension();
  std::size_t failures = 0;
  for (int t = 0; t < 200; ++t) {
    Point x(d), y(d);
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = val(gen);
      y[i] = val(gen);
    }
    for (double eps : {1.0, 0.1, 0.01}) {
      const auto gx = pot.yosida_gradient(x, eps);
      const auto gy = pot.yosida_gradient(y, eps);
      Point dg(d), dx(d);
      for (std::size_t i = 0; i < d; ++i) {
        dg[i] = gx[i] - gy[i];
        dx[i] = x[i] - y[i];
      }
      if (norm(dg) > norm(dx) / eps + 1e-9) ++failures;
      if (dot(dg, dx) < -1e-9) ++failures;
    }
    const double e1 = pot.moreau_envelope(x, 1.0);
    const double e2 = pot.moreau_envelope(x, 0.1);
    const double e3 = pot.moreau_envelope(x, 0.01);
    if (e2 < e1 - 1e-9 || e3 < e2 - 1e-9) ++failures;
    if (pot.is_indicator()) {
      const auto px = pot.project(x);
      const auto py = pot.project(y);
      if (pot.project(px) != px) ++failures;
      Point dp(d), dx(d);
      for (std::size_t i = 0; i < d; ++i) {
        dp[i] = px[i] - py[i];
        dx[i] = x[i] - y[i];
      }
      if (norm(dp) > norm(dx) + 1e-12) ++failures;
    }
  }
  return {"prox/Yosida invariants (" + pot.describe() + ")", failures == 0, std::to_string(failures) + " failures"};
}

inline CheckRow discrete_inclusion(const AveragingExperiment& exp) {
  AveragingExperiment small = exp;
  small.paths_per_scenario = std::min<std::size_t>(exp.paths_per_scenario, 20);
  small.eps_list = {exp.eps_list.front()};
  const auto row = run_coupled(small, 0);
  std::ostringstream os;
  os << row.inclusion.checks << " inequality checks (" << row.inclusion.violations << " violated, "
     << row.inclusion.vacuous << " vacuous), " << row.monotonicity.checks << " monotonicity checks ("
     << row.monotonicity.violations << " violated)";
  return {"discrete inclusion and monotonicity", row.inclusion.ok() && row.monotonicity.ok(), os.str()};
}

inline CheckRow chebyshev_suite(const AveragingExperiment& exp) {
  const TimeGrid grid(1.0, 128);
  const ScenarioSet set = exp.scenarios(1.0);
  ScenarioSamples terminal(set.size()), qv(set.size()), sup_abs(set.size()), square(set.size());
  for (std::size_t s = 0; s < set.size(); ++s) {
    for (std::size_t j = 0; j < 200; ++j) {
      const auto path = sample_path(set.controls[s], grid, derive_seed(exp.base_seed, 0xCBu, s, j));
      double sup = 0.0;
      for (double b : path.b) sup = std::max(sup, std::abs(b));
      terminal[s].push_back(path.b.back());
      qv[s].push_back(path.qv.back());
      sup_abs[s].push_back(sup);
      square[s].push_back(path.b.back() * path.b.back());
    }
  }
  std::size_t failures = 0;
  std::size_t total = 0;
  for (const auto* f : {&terminal, &qv, &sup_abs, &square}) {
    for (double alpha : {0.5, 1.0, 2.0}) {
      for (double p : {1.0, 2.0}) {
        ++total;
        if (!chebyshev_check(*f, alpha, p).holds) ++failures;
      }
    }
  }
  return {"capacity Chebyshev bound", failures == 0, std::to_string(total) + " cases, " + std::to_string(failures) + " failures"};
}

inline CheckRow bdg_suite(const AveragingExperiment& exp) {
  const TimeGrid grid(1.0, 256);
  const ScenarioSet set = exp.scenarios(1.0);
  const auto one = bdg_empirical_check([](double, double, double) { return 1.0; }, 2.0, set, grid, 200, exp.base_seed);
  const auto state = bdg_empirical_check([](double, double b, double) { return std::cos(b); }, 1.0, set, grid, 200,
                                         exp.base_seed);
  // Doob: E sup B^2 <= 4 E B_T^2 <= 4 sigma_high^2 T per scenario, and rhs = T.
  const double doob = 4.0 * set.band.high_sq();
  const bool ok = one.lhs <= doob * one.rhs + 3.0 * one.lhs_stderr && std::isfinite(state.ratio) &&
                  one.ratio_qv <= one.qv_ratio_bound * (1.0 + 1e-12) &&
                  state.ratio_qv <= state.qv_ratio_bound * (1.0 + 1e-12);
  std::ostringstream os;
  os << "dB ratio " << one.ratio << " (p=2, eta=1), " << state.ratio << " (p=1, eta=cos B); d<B> ratio "
     << one.ratio_qv << " <= " << one.qv_ratio_bound;
  return {"B-D-G empirical constants", ok, os.str()};
}

inline CheckRow moment_stability_check(const AveragingExperiment& exp) {
  const std::size_t paths = std::min<std::size_t>(exp.paths_per_scenario, 50);
  const auto ms = moment_stability(exp, 1.0, 512, paths);
  std::ostringstream os;
  os << "h=1/512: " << ms.fine << ", h=1/256: " << ms.coarse << ", relative change " << ms.relative_change;
  return {"moment stability under step halving", ms.relative_change < 0.1, os.str()};
}

inline CheckRow modulus_checks() {
  std::size_t failures = 0;
  for (double eta : {0.05, 0.1, 0.3}) {
    for (auto variant : {KappaVariant::Log, KappaVariant::LogSquarePatch}) {
      const ModulusKappa k{variant, eta, 1.0};
      const double left = kappa_eval(k, eta);
      const double right = kappa_eval(k, eta * (1.0 + 1e-13));
      if (std::abs(left - right) > 1e-11) ++failures;
    }
    for (int i = 0; i < 50; ++i) {
      const double a = 0.02 * i;
      const double b = a + 0.37;
      const double mid = rho_eta(0.5 * (a + b), eta);
      if (mid < 0.5 * (rho_eta(a, eta) + rho_eta(b, eta)) - 1e-12) ++failures;
    }
  }
  return {"moduli continuity and rho concavity", failures == 0, std::to_string(failures) + " failures"};
}

}  // namespace checks

inline std::vector<CheckRow> run_property_suite(const ExperimentConfig& cfg) {
  const AveragingExperiment exp = build_experiment(cfg);
  std::vector<CheckRow> rows;
  rows.push_back(checks::expectation_axioms(cfg.seed));
  rows.push_back(checks::qv_envelope(exp));
  rows.push_back(checks::prox_invariants(exp.potential, cfg.seed));
  rows.push_back(checks::prox_invariants(log_cosh_potential(1.0), cfg.seed));
  rows.push_back(checks::prox_invariants(indicator_interval(-1.0, 2.0), cfg.seed));
  rows.push_back(checks::discrete_inclusion(exp));
  rows.push_back(checks::chebyshev_suite(exp));
  rows.push_back(checks::bdg_suite(exp));
  rows.push_back(checks::moment_stability_check(exp));
  rows.push_back(checks::modulus_checks());
  return rows;
}

}  // namespace gmsde
