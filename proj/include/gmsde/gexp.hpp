#pragma once

// Volatility uncertainty and sublinear expectation estimators.
//
// The uncertainty set is replaced by a finite family of piecewise-constant
// variance-rate controls. Every estimator here is a max over scenarios of a
// classical sample statistic, which is a lower estimate of the sup over the
// full uncertainty set.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmsde/rng.hpp"

namespace gmsde {

class VolatilityBand {
 public:
  VolatilityBand(double sigma_low_sq, double sigma_high_sq)
      : low_sq_(sigma_low_sq), high_sq_(sigma_high_sq) {
    if (!(sigma_low_sq >= 0.0) || !(sigma_high_sq >= sigma_low_sq) || !(sigma_high_sq > 0.0) ||
        !std::isfinite(sigma_high_sq)) {
      throw std::invalid_argument("volatility band requires 0 <= sigma_low_sq <= sigma_high_sq, "
                                  "sigma_high_sq > 0");
    }
  }

  double low_sq() const { return low_sq_; }
  double high_sq() const { return high_sq_; }
  bool degenerate() const { return low_sq_ == high_sq_; }
  bool contains(double rate) const { return rate >= low_sq_ && rate <= high_sq_; }

  bool operator==(const VolatilityBand&) const = default;

 private:
  double low_sq_;
  double high_sq_;
};

// G(a) = (sigma_high^2 a^+ - sigma_low^2 a^-) / 2.
inline double g_function(double a, const VolatilityBand& band) {
  const double pos = std::max(a, 0.0);
  const double neg = std::max(-a, 0.0);
  return 0.5 * (band.high_sq() * pos - band.low_sq() * neg);
}

// Piecewise-constant, right-continuous variance rate on [0, horizon].
class VolatilityControl {
 public:
  VolatilityControl(std::vector<double> breakpoints, std::vector<double> values,
                    const VolatilityBand& band,
                    double horizon = std::numeric_limits<double>::infinity())
      : breakpoints_(std::move(breakpoints)), values_(std::move(values)), horizon_(horizon) {
    if (breakpoints_.empty() || breakpoints_.size() != values_.size()) {
      throw std::invalid_argument("control needs one value per breakpoint");
    }
    if (breakpoints_.front() != 0.0) {
      throw std::invalid_argument("control breakpoints must start at 0");
    }
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
      if (!(breakpoints_[i] > breakpoints_[i - 1])) {
        throw std::invalid_argument("control breakpoints must be strictly increasing");
      }
    }
    if (!(horizon_ > breakpoints_.back())) {
      throw std::invalid_argument("control horizon must exceed the last breakpoint");
    }
    for (double v : values_) {
      if (!band.contains(v)) {
        throw std::invalid_argument("control value outside the volatility band");
      }
    }
  }

  static VolatilityControl constant(double rate, const VolatilityBand& band) {
    return VolatilityControl({0.0}, {rate}, band);
  }

  double rate_at(double t) const {
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    const auto idx = static_cast<std::size_t>(std::max<std::ptrdiff_t>(
        0, std::distance(breakpoints_.begin(), it) - 1));
    return values_[idx];
  }

  bool is_constant() const { return values_.size() == 1; }
  double horizon() const { return horizon_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
  double horizon_;
};

struct ScenarioSet {
  std::vector<VolatilityControl> controls;
  VolatilityBand band;
  std::string label;

  std::size_t size() const { return controls.size(); }
};

inline void validate(const ScenarioSet& set) {
  if (set.controls.empty()) throw std::invalid_argument("scenario set is empty");
  bool has_low = false;
  bool has_high = false;
  for (const auto& c : set.controls) {
    for (double v : c.values()) {
      if (!set.band.contains(v)) throw std::invalid_argument("scenario outside the shared band");
    }
    if (c.is_constant() && c.values()[0] == set.band.low_sq()) has_low = true;
    if (c.is_constant() && c.values()[0] == set.band.high_sq()) has_high = true;
  }
  if (!has_low || !has_high) {
    throw std::invalid_argument("scenario set must contain both endpoint constant controls");
  }
}

// Constant controls on an even grid over the band (endpoints included), then
// switching controls with `switch_points` evenly spaced breakpoints over
// [0, horizon] and values drawn uniformly in the band from `seed`.
inline ScenarioSet make_scenario_set(const VolatilityBand& band, std::size_t n_constant,
                                     std::size_t n_switching, std::size_t switch_points,
                                     std::uint64_t seed, double horizon = 1.0) {
  if (n_constant < 2) throw std::invalid_argument("n_constant must be at least 2");
  if (n_switching > 0 && !(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");

  ScenarioSet set{{}, band, "constant" + std::to_string(n_constant) + "+switching" +
                                std::to_string(n_switching)};
  const double lo = band.low_sq();
  const double hi = band.high_sq();
  for (std::size_t i = 0; i < n_constant; ++i) {
    const double rate = (i + 1 == n_constant)
                            ? hi
                            : lo + (hi - lo) * static_cast<double>(i) /
                                       static_cast<double>(n_constant - 1);
    set.controls.push_back(VolatilityControl::constant(rate, band));
  }

  const std::size_t pieces = std::max<std::size_t>(switch_points, 1);
  for (std::size_t s = 0; s < n_switching; ++s) {
    std::vector<double> breaks;
    std::vector<double> values;
    std::mt19937_64 gen(derive_seed(seed, 0x5C3Au, s));
    std::uniform_real_distribution<double> draw(lo, hi);
    for (std::size_t i = 0; i < pieces; ++i) {
      breaks.push_back(horizon * static_cast<double>(i) / static_cast<double>(pieces));
      values.push_back(band.degenerate() ? lo : std::clamp(draw(gen), lo, hi));
    }
    set.controls.emplace_back(std::move(breaks), std::move(values), band);
  }
  return set;
}

// Per-scenario samples of one real functional: samples[s][i].
using ScenarioSamples = std::vector<std::vector<double>>;

struct ExpectationEstimate {
  double value = 0.0;
  std::vector<double> per_scenario_means;
  std::size_t argmax_scenario = 0;
  // Standard error of the mean in the maximizing scenario.
  double standard_error = 0.0;
};

inline ExpectationEstimate sublinear_expectation(const ScenarioSamples& samples) {
  if (samples.empty()) throw std::invalid_argument("sublinear expectation: no scenarios");
  ExpectationEstimate est;
  est.per_scenario_means.reserve(samples.size());
  for (const auto& row : samples) {
    if (row.empty()) throw std::invalid_argument("sublinear expectation: empty scenario");
    double sum = 0.0;
    for (double v : row) sum += v;
    est.per_scenario_means.push_back(sum / static_cast<double>(row.size()));
  }
  const auto best = std::max_element(est.per_scenario_means.begin(), est.per_scenario_means.end());
  est.argmax_scenario = static_cast<std::size_t>(std::distance(est.per_scenario_means.begin(), best));
  est.value = *best;

  const auto& row = samples[est.argmax_scenario];
  if (row.size() > 1) {
    double ss = 0.0;
    for (double v : row) ss += (v - est.value) * (v - est.value);
    const double n = static_cast<double>(row.size());
    est.standard_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return est;
}

struct CapacityEstimate {
  double value = 0.0;
  std::size_t argmax_scenario = 0;
  double standard_error = 0.0;
};

inline CapacityEstimate capacity(const ScenarioSamples& indicators) {
  for (const auto& row : indicators) {
    for (double v : row) {
      if (v != 0.0 && v != 1.0) throw std::invalid_argument("capacity: non-binary indicator");
    }
  }
  const auto est = sublinear_expectation(indicators);
  const double n = static_cast<double>(indicators[est.argmax_scenario].size());
  return {est.value, est.argmax_scenario, std::sqrt(est.value * (1.0 - est.value) / n)};
}

struct ChebyshevCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  bool holds = false;
};

// capacity{|X| > alpha} <= E^[|X|^p] / alpha^p, with a 3-standard-error
// allowance on the frequency estimate.
inline ChebyshevCheck chebyshev_check(const ScenarioSamples& samples, double alpha, double p) {
  if (!(alpha > 0.0)) throw std::invalid_argument("chebyshev_check: alpha must be positive");
  if (!(p >= 1.0)) throw std::invalid_argument("chebyshev_check: p must be >= 1");
  ScenarioSamples events(samples.size());
  ScenarioSamples powers(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    events[s].reserve(samples[s].size());
    powers[s].reserve(samples[s].size());
    for (double v : samples[s]) {
      events[s].push_back(std::abs(v) > alpha ? 1.0 : 0.0);
      powers[s].push_back(std::pow(std::abs(v), p));
    }
  }
  const auto cap = capacity(events);
  ChebyshevCheck out;
  out.lhs = cap.value;
  out.rhs = sublinear_expectation(powers).value / std::pow(alpha, p);
  out.tolerance = 3.0 * cap.standard_error;
  out.holds = out.lhs <= out.rhs + out.tolerance;
  return out;
}

}  // namespace gmsde
