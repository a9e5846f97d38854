#pragma once

// Discrete G-Brownian paths under a fixed volatility control.
//
// Under one control the increments are conditionally Gaussian with variance
// rate sigma^2(t), and the quadratic variation is the deterministic running
// sum of sigma^2(t_k) h. Multi-column noise uses independent components
// sharing that one scalar quadratic variation.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "gmsde/gexp.hpp"
#include "gmsde/rng.hpp"

namespace gmsde {

class TimeGrid {
 public:
  TimeGrid(double horizon, std::size_t n_steps) : horizon_(horizon), n_steps_(n_steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
      throw std::invalid_argument("time grid horizon must be positive and finite");
    }
    if (n_steps == 0) throw std::invalid_argument("time grid needs at least one step");
    step_ = horizon / static_cast<double>(n_steps);
  }

  double horizon() const { return horizon_; }
  std::size_t n_steps() const { return n_steps_; }
  double step() const { return step_; }
  // Grid point t_k = k h, with t_n pinned to the horizon.
  double t(std::size_t k) const {
    return k == n_steps_ ? horizon_ : static_cast<double>(k) * step_;
  }

  bool operator==(const TimeGrid&) const = default;

 private:
  double horizon_;
  std::size_t n_steps_;
  double step_;
};

struct GPath {
  std::size_t noise_dim = 1;
  // Row-major (n_steps + 1) x noise_dim.
  std::vector<double> b;
  // Row-major n_steps x noise_dim.
  std::vector<double> db;
  std::vector<double> qv;
  std::vector<double> dqv;
  std::size_t control_index = 0;
  std::uint64_t path_seed = 0;

  std::size_t n_steps() const { return dqv.size(); }
  const double* increment(std::size_t k) const { return db.data() + k * noise_dim; }
  double b_at(std::size_t k, std::size_t j = 0) const { return b[k * noise_dim + j]; }
};

inline GPath sample_path(const VolatilityControl& control, const TimeGrid& grid,
                         std::uint64_t seed, std::size_t noise_dim = 1,
                         std::size_t control_index = 0) {
  if (noise_dim == 0) throw std::invalid_argument("sample_path: noise_dim must be positive");
  if (control.horizon() < grid.horizon() * (1.0 - 1e-12)) {
    throw std::invalid_argument("sample_path: control does not cover the grid horizon");
  }
  const std::size_t n = grid.n_steps();
  const double h = grid.step();
  const double sqrt_h = std::sqrt(h);
  const CounterNormal normal(seed);

  GPath path;
  path.noise_dim = noise_dim;
  path.control_index = control_index;
  path.path_seed = seed;
  path.b.assign((n + 1) * noise_dim, 0.0);
  path.db.resize(n * noise_dim);
  path.qv.assign(n + 1, 0.0);
  path.dqv.resize(n);

  for (std::size_t k = 0; k < n; ++k) {
    const double rate = control.rate_at(grid.t(k));
    const double scale = std::sqrt(rate) * sqrt_h;
    double* inc = path.db.data() + k * noise_dim;
    for (std::size_t j = 0; j < noise_dim; j += 2) {
      const auto [z0, z1] = normal.pair(k, static_cast<std::uint32_t>(j / 2));
      inc[j] = scale * z0;
      if (j + 1 < noise_dim) inc[j + 1] = scale * z1;
    }
    for (std::size_t j = 0; j < noise_dim; ++j) {
      path.b[(k + 1) * noise_dim + j] = path.b[k * noise_dim + j] + inc[j];
    }
    path.dqv[k] = rate * h;
    path.qv[k + 1] = path.qv[k] + path.dqv[k];
  }
  return path;
}

// Merges `factor` consecutive steps; the result lives on the grid with
// n_steps / factor steps and shares the fine path's noise.
inline GPath coarsen(const GPath& fine, std::size_t factor) {
  if (factor == 0 || fine.n_steps() % factor != 0) {
    throw std::invalid_argument("coarsen: factor must divide the step count");
  }
  const std::size_t m = fine.noise_dim;
  const std::size_t n = fine.n_steps() / factor;
  GPath out;
  out.noise_dim = m;
  out.control_index = fine.control_index;
  out.path_seed = fine.path_seed;
  out.b.assign((n + 1) * m, 0.0);
  out.db.assign(n * m, 0.0);
  out.qv.assign(n + 1, 0.0);
  out.dqv.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t r = 0; r < factor; ++r) {
      const std::size_t fk = k * factor + r;
      for (std::size_t j = 0; j < m; ++j) out.db[k * m + j] += fine.db[fk * m + j];
      out.dqv[k] += fine.dqv[fk];
    }
    for (std::size_t j = 0; j < m; ++j) out.b[(k + 1) * m + j] = out.b[k * m + j] + out.db[k * m + j];
    out.qv[k + 1] = out.qv[k] + out.dqv[k];
  }
  return out;
}

// b[0] = 0, qv[0] = 0, qv nondecreasing and inside the band envelope
// [low t_k, high t_k], all up to 1e-12 relative.
inline bool qv_band_check(const GPath& path, const VolatilityBand& band, const TimeGrid& grid) {
  constexpr double rel = 1e-12;
  if (path.qv.size() != grid.n_steps() + 1) return false;
  if (path.qv[0] != 0.0) return false;
  for (std::size_t j = 0; j < path.noise_dim; ++j) {
    if (path.b[j] != 0.0) return false;
  }
  for (std::size_t k = 0; k <= grid.n_steps(); ++k) {
    const double t = grid.t(k);
    const double q = path.qv[k];
    const double slack = rel * std::max(1.0, band.high_sq() * t);
    if (k > 0 && q < path.qv[k - 1]) return false;
    if (q < band.low_sq() * t - slack || q > band.high_sq() * t + slack) return false;
  }
  return true;
}

// Debug dump: t, B (first noise component), QV.
inline void write_path_csv(std::ostream& os, const GPath& path, const TimeGrid& grid) {
  const auto old_precision = os.precision(17);
  os << "t,B,QV\n";
  for (std::size_t k = 0; k <= grid.n_steps(); ++k) {
    os << grid.t(k) << ',' << path.b_at(k) << ',' << path.qv[k] << '\n';
  }
  os.precision(old_precision);
}

}  // namespace gmsde
