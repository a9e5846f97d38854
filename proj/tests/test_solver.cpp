#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "gmsde/solver.hpp"

using namespace gmsde;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

CoefficientTriple pure_noise() { return constant_averaged(0.0, 0.0, 1.0).as_triple(); }

MSDEProblem reflected_problem(std::size_t n_steps, double horizon = 1.0) {
  return MSDEProblem(pure_noise(), indicator_interval(0.0, kInf), {0.0}, VolatilityBand(1.0, 1.0), Projection{},
                     TimeGrid(horizon, n_steps));
}

GPath unit_path(const TimeGrid& grid, std::uint64_t seed, std::size_t m = 1) {
  return sample_path(VolatilityControl::constant(1.0, VolatilityBand(1.0, 1.0)), grid, seed, m);
}

}  // namespace

TEST(SolvePath, ZeroPotentialTransportsNoise) {
  const MSDEProblem prob(pure_noise(), zero_potential(), {0.0}, VolatilityBand(1.0, 1.0), Projection{},
                         TimeGrid(1.0, 200));
  const auto g = unit_path(prob.grid(), 5);
  const auto sol = solve_path(prob, g);
  for (std::size_t n = 0; n <= 200; ++n) {
    EXPECT_EQ(sol.state(n)[0], g.b_at(n));
    EXPECT_EQ(sol.reflection(n)[0], 0.0);
  }
  EXPECT_EQ(sol.k_variation, 0.0);
}

TEST(SolvePath, NoCoefficientsStaysPut) {
  const MSDEProblem prob(zero_triple(), indicator_interval(-1.0, 1.0), {0.4}, VolatilityBand(1.0, 2.0),
                         Projection{}, TimeGrid(3.0, 100));
  const auto sol = solve_path(prob, unit_path(prob.grid(), 1));
  for (double v : sol.x) EXPECT_EQ(v, 0.4);
  for (double v : sol.k) EXPECT_EQ(v, 0.0);
}

TEST(SolvePath, ProjectionMatchesLindleyRecursion) {
  // On [0, inf) from 0, projected Euler is W_n - min_{k <= n} W_k.
  const auto prob = reflected_problem(512);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = unit_path(prob.grid(), seed);
    const auto sol = solve_path(prob, g);
    double running_min = 0.0;
    for (std::size_t n = 0; n <= 512; ++n) {
      running_min = std::min(running_min, g.b_at(n));
      EXPECT_NEAR(sol.state(n)[0], g.b_at(n) - running_min, 1e-12);
      EXPECT_NEAR(sol.reflection(n)[0], running_min, 1e-12);
    }
  }
}

TEST(SolvePath, ReflectedMeanMatchesHalfNormal) {
  // Fine step keeps the discrete-monitoring bias (about 0.58 sqrt(h)) well
  // below the Monte Carlo error.
  const auto prob = reflected_problem(1u << 14);
  const int n = 4000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = solve_path(prob, unit_path(prob.grid(), derive_seed(3, i))).terminal();
    s1 += x;
    s2 += x * x;
  }
  const double mean = s1 / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_LT(std::abs(mean - std::sqrt(2.0 / std::numbers::pi)), 3.0 * se);
}

TEST(SolveRescaled, UnitEpsIsSolvePath) {
  const auto preset = make_preset("decaying", {1.0, 40, 6});
  const MSDEProblem prob(preset.original, indicator_interval(-5.0, 5.0), {1.0}, VolatilityBand(1.0, 2.0),
                         Projection{}, TimeGrid(1.0, 128), preset.averaged);
  const auto g = sample_path(VolatilityControl::constant(2.0, prob.band()), prob.grid(), 4, 6);
  const auto a = solve_rescaled(prob, g, 1.0, DynamicsKind::Original);
  const auto b = solve_path(prob, g);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.k, b.k);
}

TEST(SolveRescaled, IdenticalTriplesGiveBitwiseIdenticalPaths) {
  const auto preset = make_preset("decaying", {0.0, 40, 6});
  const MSDEProblem prob(preset.original, indicator_interval(-0.5, 0.5), {0.2}, VolatilityBand(1.0, 2.0),
                         Projection{}, TimeGrid(1.0, 256), preset.averaged);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto g = sample_path(VolatilityControl::constant(2.0, prob.band()), prob.grid(), seed, 6);
    const auto a = solve_rescaled(prob, g, 0.1, DynamicsKind::Original);
    const auto b = solve_rescaled(prob, g, 0.1, DynamicsKind::Averaged);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.k, b.k);
  }
}

TEST(SolveRescaled, TinyEpsStaysNearStart) {
  const auto preset = make_preset("decaying", {1.0, 40, 6});
  const MSDEProblem prob(preset.original, indicator_interval(-5.0, 5.0), {1.0}, VolatilityBand(1.0, 2.0),
                         Projection{}, TimeGrid(1.0, 256), preset.averaged);
  const double eps = 1e-8;
  double ss = 0.0;
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    const auto g = sample_path(VolatilityControl::constant(2.0, prob.band()), prob.grid(), derive_seed(9, i), 6);
    const auto sol = solve_rescaled(prob, g, eps, DynamicsKind::Original);
    double worst = 0.0;
    for (std::size_t k = 0; k <= 256; ++k) worst = std::max(worst, std::abs(sol.state(k)[0] - 1.0));
    ss += worst * worst;
  }
  const double rms = std::sqrt(ss / n);
  EXPECT_GT(rms, 0.0);
  // |sigma|^2 <= 2 zeta(3) (1 + gamma) and <B>_1 <= 2: a few units of sqrt(eps).
  EXPECT_LT(rms, 10.0 * std::sqrt(eps));
}

TEST(SolveRescaled, RejectsBadArguments) {
  const auto prob = reflected_problem(16);
  const auto g = unit_path(prob.grid(), 1);
  EXPECT_THROW(solve_rescaled(prob, g, 0.0, DynamicsKind::Original), std::invalid_argument);
  EXPECT_THROW(solve_rescaled(prob, g, 1.0, DynamicsKind::Averaged), std::invalid_argument);
  const auto other = unit_path(TimeGrid(1.0, 8), 1);
  EXPECT_THROW(solve_path(prob, other), std::invalid_argument);
}

TEST(MSDEProblem, Validation) {
  EXPECT_THROW(MSDEProblem(pure_noise(), indicator_interval(-1.0, 1.0), {2.0}, VolatilityBand(1.0, 1.0),
                           Projection{}, TimeGrid(1.0, 10)),
               std::invalid_argument);
  EXPECT_THROW(MSDEProblem(pure_noise(), indicator_interval(-1.0, 1.0), {0.0}, VolatilityBand(1.0, 1.0),
                           Penalization{0.01}, TimeGrid(1.0, 10)),
               std::invalid_argument);
  EXPECT_NO_THROW(MSDEProblem(pure_noise(), indicator_interval(-1.0, 1.0), {0.0}, VolatilityBand(1.0, 1.0),
                              Penalization{0.02}, TimeGrid(1.0, 100)));
}

TEST(Solver, BlowUpIsReported) {
  const CoefficientTriple explosive("explosive", {1, 1},
                                    [](double, std::span<const double> x, std::span<double> f,
                                       std::span<double> g, std::span<double> s) {
                                      f[0] = 1e4 * x[0];
                                      g[0] = 0.0;
                                      s[0] = 0.0;
                                    });
  const MSDEProblem prob(explosive, zero_potential(), {1.0}, VolatilityBand(1.0, 1.0), Projection{},
                         TimeGrid(1.0, 64));
  EXPECT_THROW(solve_path(prob, unit_path(prob.grid(), 1)), SolverBlowUp);
}

TEST(Inclusion, ProjectionAndPenalizationPassEveryStep) {
  const auto base = constant_averaged(0.5, 0.2, 1.0);
  const auto original = decaying_perturbation_triple(base, 1.0);
  const auto box = indicator_interval(-0.3, 0.3);
  const std::vector<Point> probes{{-0.3}, {0.0}, {0.3}, {0.15}, {-2.0}};
  for (const Scheme scheme : {Scheme{Projection{}}, Scheme{Penalization{0.05}}}) {
    const MSDEProblem prob(original, box, {0.1}, VolatilityBand(1.0, 2.0), scheme, TimeGrid(1.0, 512), base);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto g = sample_path(VolatilityControl::constant(2.0, prob.band()), prob.grid(), seed);
      const auto a = solve_rescaled(prob, g, 0.5, DynamicsKind::Original);
      const auto b = solve_rescaled(prob, g, 0.5, DynamicsKind::Averaged);
      const auto ra = check_inclusion(prob, a, probes);
      EXPECT_EQ(ra.violations, 0u);
      EXPECT_EQ(ra.vacuous, 512u);
      EXPECT_EQ(check_inclusion(prob, b, probes).violations, 0u);
      EXPECT_EQ(check_pair_monotonicity(prob, a, b).violations, 0u);
      EXPECT_GT(a.k_variation, 0.0);
    }
  }
}

TEST(Inclusion, SmoothPotentialPenalization) {
  const MSDEProblem prob(pure_noise(), log_cosh_potential(2.0), {1.0}, VolatilityBand(0.5, 2.0),
                         Penalization{0.1}, TimeGrid(1.0, 256));
  const std::vector<Point> probes{{-1.0}, {0.0}, {1.0}, {3.0}};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto sol = solve_path(prob, unit_path(prob.grid(), seed));
    EXPECT_TRUE(check_inclusion(prob, sol, probes).ok());
  }
}

TEST(Inclusion, CorruptedIncrementIsCaught) {
  const auto prob = reflected_problem(64);
  auto sol = solve_path(prob, unit_path(prob.grid(), 2));
  sol.dk[10] = 5.0;
  const std::vector<Point> probes{{0.0}, {1.0}, {2.0}};
  EXPECT_FALSE(check_inclusion(prob, sol, probes).ok());
}

TEST(YosidaConsistency, GapShrinksWithEpsYosida) {
  const auto box = indicator_interval(-0.5, 0.5);
  const MSDEProblem proj(pure_noise(), box, {0.0}, VolatilityBand(1.0, 1.0), Projection{}, TimeGrid(1.0, 4096));
  double prev = kInf;
  for (double ey : {1e-1, 1e-2, 1e-3}) {
    const auto pen = proj.with_scheme(Penalization{ey});
    double ss = 0.0;
    for (int i = 0; i < 200; ++i) {
      const auto g = unit_path(proj.grid(), derive_seed(21, i));
      const double d = solve_path(pen, g).terminal() - solve_path(proj, g).terminal();
      ss += d * d;
    }
    const double rms = std::sqrt(ss / 200.0);
    EXPECT_LT(rms, prev);
    prev = rms;
  }
}

TEST(ReflectionContinuity, DriftDrivenContactHalves) {
  // Constant outward drift against the wall: each step removes exactly f h.
  const CoefficientTriple push("push", {1, 1},
                               [](double, std::span<const double>, std::span<double> f, std::span<double> g,
                                  std::span<double> s) {
                                 f[0] = 2.0;
                                 g[0] = 0.0;
                                 s[0] = 0.0;
                               });
  double prev = 0.0;
  for (std::size_t n : {64u, 128u, 256u, 512u}) {
    const MSDEProblem prob(push, indicator_interval(-1.0, 0.5), {0.0}, VolatilityBand(1.0, 1.0), Projection{},
                           TimeGrid(1.0, n));
    const auto sol = solve_path(prob, unit_path(prob.grid(), 1));
    if (prev > 0.0) EXPECT_LE(sol.max_step_k, 0.5 * prev * 1.2);
    prev = sol.max_step_k;
    EXPECT_NEAR(sol.k.back(), 1.5, 2.0 / static_cast<double>(n) + 1e-12);
  }
}

TEST(ReflectionContinuity, NoisyContactShrinksLikeRootStep) {
  double prev = 0.0;
  for (std::size_t n : {256u, 1024u, 4096u}) {
    const auto prob = reflected_problem(n);
    double mean_max = 0.0;
    for (int i = 0; i < 100; ++i) mean_max += solve_path(prob, unit_path(prob.grid(), derive_seed(2, i))).max_step_k;
    mean_max /= 100.0;
    // Quadrupling the steps halves the largest increment, up to log factors.
    if (prev > 0.0) {
      EXPECT_LT(mean_max, 0.65 * prev);
      EXPECT_GT(mean_max, 0.35 * prev);
    }
    prev = mean_max;
  }
}

TEST(SupMoment, ConstantAndHomogeneity) {
  SolutionPath c;
  c.dim = 1;
  c.x.assign(11, -1.5);
  c.k.assign(11, 0.0);
  c.dk.assign(10, 0.0);
  EXPECT_DOUBLE_EQ(estimate_sup_moment({{c, c}, {c}}, 1.0).value, 2.25);
  EXPECT_DOUBLE_EQ(estimate_sup_moment({{c}}, 2.0).value, std::pow(1.5, 4));

  const auto prob = reflected_problem(64);
  std::vector<std::vector<SolutionPath>> paths(2), doubled(2);
  for (std::size_t s = 0; s < 2; ++s) {
    for (int i = 0; i < 30; ++i) {
      auto sol = solve_path(prob, unit_path(prob.grid(), derive_seed(s, i)));
      paths[s].push_back(sol);
      for (double& v : sol.x) v *= 2.0;
      doubled[s].push_back(sol);
    }
  }
  for (double p : {1.0, 1.5, 2.0}) {
    EXPECT_NEAR(estimate_sup_moment(doubled, p).value, std::pow(2.0, 2.0 * p) * estimate_sup_moment(paths, p).value,
                1e-12 * estimate_sup_moment(doubled, p).value);
  }
  EXPECT_THROW(estimate_sup_moment(paths, 0.5), std::invalid_argument);
}

TEST(SupMoment, MatchesDenseIndependentMonteCarlo) {
  // x = B under the degenerate band; the oracle uses std::normal_distribution
  // on the same grid with ten times the paths.
  const std::size_t steps = 256;
  const MSDEProblem prob(pure_noise(), zero_potential(), {0.0}, VolatilityBand(1.0, 1.0), Projection{},
                         TimeGrid(1.0, steps));
  std::vector<std::vector<SolutionPath>> paths(1);
  for (int i = 0; i < 2000; ++i) paths[0].push_back(solve_path(prob, unit_path(prob.grid(), derive_seed(31, i))));
  const auto est = estimate_sup_moment(paths, 1.0);

  std::mt19937_64 gen(77);
  std::normal_distribution<double> z(0.0, std::sqrt(1.0 / steps));
  const int n = 20000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double b = 0.0, sup = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      b += z(gen);
      sup = std::max(sup, b * b);
    }
    s1 += sup;
    s2 += sup * sup;
  }
  const double mean = s1 / n;
  const double se_oracle = std::sqrt((s2 / n - mean * mean) / n);
  const double se = std::hypot(est.standard_error, se_oracle);
  EXPECT_LT(std::abs(est.value - mean), 3.0 * se);
}
