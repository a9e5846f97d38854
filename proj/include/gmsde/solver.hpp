#pragma once

// Euler-type integration of dX + dphi(X) dt ∋ f dt + g d<B> + sigma dB,
// with the reflection term realized by exact projection or by Yosida
// penalization, in original and time-rescaled form.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "gmsde/coeffs.hpp"
#include "gmsde/convex.hpp"
#include "gmsde/gbm.hpp"
#include "gmsde/gexp.hpp"

namespace gmsde {

struct Projection {
  bool operator==(const Projection&) const = default;
};
struct Penalization {
  double eps_yosida = 0.01;
  bool operator==(const Penalization&) const = default;
};
using Scheme = std::variant<Projection, Penalization>;

enum class DynamicsKind { Original, Averaged };

class SolverBlowUp : public std::runtime_error {
 public:
  SolverBlowUp(const std::string& what, std::size_t step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class MSDEProblem {
 public:
  static constexpr double kBlowUpThreshold = 1e12;

  MSDEProblem(CoefficientTriple triple, ConvexPotential potential, Point x0, VolatilityBand band,
              Scheme scheme, TimeGrid grid, std::optional<AveragedTriple> averaged = std::nullopt)
      : triple_(std::move(triple)), potential_(std::move(potential)), x0_(std::move(x0)),
        band_(band), scheme_(scheme), grid_(grid) {
    const std::size_t d = triple_.dims().state;
    if (potential_.dimension() != d || x0_.size() != d) {
      throw std::invalid_argument("problem dimensions are inconsistent");
    }
    if (!potential_.in_domain(x0_)) {
      throw std::invalid_argument("initial point lies outside the closed domain of the potential");
    }
    if (const auto* pen = std::get_if<Penalization>(&scheme_)) {
      if (!(pen->eps_yosida > 0.0)) throw std::invalid_argument("eps_yosida must be positive");
      if (grid_.step() > 0.5 * pen->eps_yosida) {
        throw std::invalid_argument("penalization requires step <= eps_yosida / 2");
      }
    }
    if (averaged) {
      if (!(averaged->dims() == triple_.dims())) {
        throw std::invalid_argument("averaged triple shape differs from the original");
      }
      averaged_view_ = averaged->as_triple();
    }
  }

  const CoefficientTriple& triple() const { return triple_; }
  const CoefficientTriple& dynamics(DynamicsKind kind) const {
    if (kind == DynamicsKind::Original) return triple_;
    if (!averaged_view_) throw std::invalid_argument("problem has no averaged triple");
    return *averaged_view_;
  }
  bool has_averaged() const { return averaged_view_.has_value(); }
  const ConvexPotential& potential() const { return potential_; }
  const Point& x0() const { return x0_; }
  const VolatilityBand& band() const { return band_; }
  const Scheme& scheme() const { return scheme_; }
  const TimeGrid& grid() const { return grid_; }
  std::size_t state_dim() const { return triple_.dims().state; }
  std::size_t noise_dim() const { return triple_.dims().noise; }

  MSDEProblem with_grid(const TimeGrid& grid) const {
    MSDEProblem copy = *this;
    copy.grid_ = grid;
    if (const auto* pen = std::get_if<Penalization>(&copy.scheme_)) {
      if (grid.step() > 0.5 * pen->eps_yosida) {
        throw std::invalid_argument("penalization requires step <= eps_yosida / 2");
      }
    }
    return copy;
  }

  MSDEProblem with_scheme(const Scheme& scheme) const {
    MSDEProblem copy = *this;
    copy.scheme_ = scheme;
    if (const auto* pen = std::get_if<Penalization>(&scheme)) {
      if (!(pen->eps_yosida > 0.0) || grid_.step() > 0.5 * pen->eps_yosida) {
        throw std::invalid_argument("penalization requires 0 < step <= eps_yosida / 2");
      }
    }
    return copy;
  }

 private:
  CoefficientTriple triple_;
  ConvexPotential potential_;
  Point x0_;
  VolatilityBand band_;
  Scheme scheme_;
  TimeGrid grid_;
  std::optional<CoefficientTriple> averaged_view_;
};

struct SolutionPath {
  std::size_t dim = 1;
  // Row-major (n_steps + 1) x dim.
  std::vector<double> x;
  std::vector<double> k;
  // Row-major n_steps x dim.
  std::vector<double> dk;
  double k_variation = 0.0;
  double max_step_k = 0.0;

  std::size_t n_steps() const { return dk.size() / dim; }
  std::span<const double> state(std::size_t n) const { return {x.data() + n * dim, dim}; }
  std::span<const double> reflection(std::size_t n) const { return {k.data() + n * dim, dim}; }
  std::span<const double> reflection_increment(std::size_t n) const {
    return {dk.data() + n * dim, dim};
  }
  double terminal(std::size_t i = 0) const { return x[n_steps() * dim + i]; }
};

// Time-rescaled scheme: drift and qv-drift scaled by eps_avg, diffusion by
// sqrt(eps_avg), reflection entering as eps_avg dK. K itself is stored
// unscaled so that dK stays a subgradient of phi.
inline SolutionPath solve_rescaled(const MSDEProblem& problem, const GPath& gpath, double eps_avg,
                                   DynamicsKind kind) {
  if (!(eps_avg > 0.0 && eps_avg <= 1.0)) throw std::invalid_argument("eps_avg must lie in (0, 1]");
  const auto& grid = problem.grid();
  const std::size_t n = grid.n_steps();
  const std::size_t d = problem.state_dim();
  const std::size_t m = problem.noise_dim();
  if (gpath.n_steps() != n) throw std::invalid_argument("noise path is not on the problem grid");
  if (gpath.noise_dim != m) throw std::invalid_argument("noise path dimension differs from sigma columns");

  const auto& triple = problem.dynamics(kind);
  const auto& pot = problem.potential();
  const double h = grid.step();
  const double sqrt_eps = std::sqrt(eps_avg);
  const auto* pen = std::get_if<Penalization>(&problem.scheme());

  SolutionPath out;
  out.dim = d;
  out.x.resize((n + 1) * d);
  out.k.assign((n + 1) * d, 0.0);
  out.dk.resize(n * d);
  std::copy(problem.x0().begin(), problem.x0().end(), out.x.begin());

  std::vector<double> f(d);
  std::vector<double> g(d);
  std::vector<double> sig(d * m);
  std::vector<double> trial(d);
  std::vector<double> next(d);
  std::vector<double> grad(d);

  for (std::size_t step = 0; step < n; ++step) {
    const std::span<const double> x(out.x.data() + step * d, d);
    triple.evaluate(grid.t(step), x, f, g, sig);
    const double* db = gpath.increment(step);
    const double dqv = gpath.dqv[step];
    for (std::size_t i = 0; i < d; ++i) {
      double noise = 0.0;
      const double* row = sig.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) noise += row[j] * db[j];
      trial[i] = x[i] + eps_avg * (f[i] * h + g[i] * dqv) + sqrt_eps * noise;
    }

    double* dk = out.dk.data() + step * d;
    if (pen) {
      pot.yosida_gradient(x, pen->eps_yosida, grad);
      for (std::size_t i = 0; i < d; ++i) {
        dk[i] = grad[i] * h;
        next[i] = trial[i] - eps_avg * dk[i];
      }
    } else {
      pot.project(trial, next);
      for (std::size_t i = 0; i < d; ++i) dk[i] = (trial[i] - next[i]) / eps_avg;
    }

    double size_sq = 0.0;
    double dk_sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      if (!std::isfinite(next[i]) || std::abs(next[i]) > MSDEProblem::kBlowUpThreshold) {
        throw SolverBlowUp("state blew up", step);
      }
      out.x[(step + 1) * d + i] = next[i];
      out.k[(step + 1) * d + i] = out.k[step * d + i] + dk[i];
      size_sq += next[i] * next[i];
      dk_sq += dk[i] * dk[i];
    }
    const double dk_norm = std::sqrt(dk_sq);
    out.k_variation += dk_norm;
    out.max_step_k = std::max(out.max_step_k, dk_norm);
  }
  return out;
}

inline SolutionPath solve_path(const MSDEProblem& problem, const GPath& gpath) {
  return solve_rescaled(problem, gpath, 1.0, DynamicsKind::Original);
}

// Point at which the step-n reflection increment is a subgradient of phi:
// the projected state for the projection scheme, prox(x_n) for penalization.
inline Point inclusion_anchor(const MSDEProblem& problem, const SolutionPath& path, std::size_t n) {
  if (const auto* pen = std::get_if<Penalization>(&problem.scheme())) {
    const auto x = path.state(n);
    Point out(path.dim);
    problem.potential().prox(x, pen->eps_yosida, out);
    return out;
  }
  const auto x = path.state(n + 1);
  return Point(x.begin(), x.end());
}

struct InclusionReport {
  std::size_t checks = 0;
  std::size_t violations = 0;
  std::size_t vacuous = 0;

  bool ok() const { return violations == 0; }
  InclusionReport& operator+=(const InclusionReport& o) {
    checks += o.checks;
    violations += o.violations;
    vacuous += o.vacuous;
    return *this;
  }
};

// Discrete variational inequality at every step for every probe point.
inline InclusionReport check_inclusion(const MSDEProblem& problem, const SolutionPath& path,
                                       std::span<const Point> probes) {
  InclusionReport rep;
  const double h = problem.grid().step();
  for (std::size_t n = 0; n < path.n_steps(); ++n) {
    const Point anchor = inclusion_anchor(problem, path, n);
    for (const auto& u : probes) {
      ++rep.checks;
      switch (variational_inequality_check(anchor, path.reflection_increment(n), u,
                                           problem.potential(), h)) {
        case InclusionCheck::Holds: break;
        case InclusionCheck::Violated: ++rep.violations; break;
        case InclusionCheck::Vacuous: ++rep.vacuous; break;
      }
    }
  }
  return rep;
}

// Pairwise monotonicity of reflection increments for two solutions that
// share a grid (and usually a noise path).
inline InclusionReport check_pair_monotonicity(const MSDEProblem& problem, const SolutionPath& a,
                                               const SolutionPath& b) {
  InclusionReport rep;
  for (std::size_t n = 0; n < a.n_steps(); ++n) {
    ++rep.checks;
    const Point pa = inclusion_anchor(problem, a, n);
    const Point pb = inclusion_anchor(problem, b, n);
    if (!monotonicity_check(pa, a.reflection_increment(n), pb, b.reflection_increment(n))) {
      ++rep.violations;
    }
  }
  return rep;
}

inline double sup_norm_power(const SolutionPath& path, double p) {
  double best = 0.0;
  for (std::size_t n = 0; n <= path.n_steps(); ++n) best = std::max(best, norm(path.state(n)));
  return std::pow(best, 2.0 * p);
}

// E^[ sup_t |X(t)|^{2p} ] over per-scenario path collections.
inline ExpectationEstimate estimate_sup_moment(const std::vector<std::vector<SolutionPath>>& paths,
                                               double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("estimate_sup_moment: p must be >= 1");
  ScenarioSamples samples(paths.size());
  for (std::size_t s = 0; s < paths.size(); ++s) {
    for (const auto& path : paths[s]) samples[s].push_back(sup_norm_power(path, p));
  }
  return sublinear_expectation(samples);
}

}  // namespace gmsde
