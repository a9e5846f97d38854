#pragma once

// Convex potentials, their proximal maps and Moreau-Yosida gradients.
//
// Two families are supported: indicators of boxes (projection is a
// per-coordinate clamp) and smooth convex functions defined on all of R^d.
// Every potential is normalized so that phi(0) = 0 <= phi(x) and 0 lies in
// the interior of the domain.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace gmsde {

using Point = std::vector<double>;

class ProxDidNotConverge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct IndicatorBox {
  std::vector<double> low;
  std::vector<double> high;
};

// Coordinate-separable smooth potential sum_i phi1(x_i), prox solved by
// safeguarded Newton per coordinate.
struct SeparableSmooth {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::function<double(double)> second_derivative;
};

// General smooth convex potential; prox by damped fixed-point iteration.
struct GeneralSmooth {
  std::string name;
  std::function<double(std::span<const double>)> value;
  std::function<void(std::span<const double>, std::span<double>)> gradient;
};

class ConvexPotential {
 public:
  using Kind = std::variant<IndicatorBox, SeparableSmooth, GeneralSmooth>;

  static constexpr int kMaxProxIterations = 200;
  static constexpr double kProxTolerance = 1e-10;

  ConvexPotential(Kind kind, std::size_t dimension) : kind_(std::move(kind)), dim_(dimension) {
    if (dim_ == 0) throw std::invalid_argument("potential dimension must be positive");
    if (const auto* box = std::get_if<IndicatorBox>(&kind_)) {
      if (box->low.size() != dim_ || box->high.size() != dim_) {
        throw std::invalid_argument("indicator box bounds must match the dimension");
      }
      for (std::size_t i = 0; i < dim_; ++i) {
        if (!(box->low[i] <= 0.0 && 0.0 <= box->high[i] && box->low[i] < box->high[i])) {
          throw std::invalid_argument("0 must lie in the closed potential domain");
        }
      }
    } else {
      const Point zero(dim_, 0.0);
      if (std::abs(value(zero)) > 1e-14) throw std::invalid_argument("potential must vanish at 0");
    }
  }

  const Kind& kind() const { return kind_; }
  std::size_t dimension() const { return dim_; }
  bool is_indicator() const { return std::holds_alternative<IndicatorBox>(kind_); }

  std::string describe() const {
    if (const auto* box = std::get_if<IndicatorBox>(&kind_)) {
      std::ostringstream os;
      os << "indicator box [" << box->low[0] << ", " << box->high[0] << (dim_ > 1 ? "] x ..." : "]");
      return os.str();
    }
    if (const auto* s = std::get_if<SeparableSmooth>(&kind_)) return s->name;
    return std::get<GeneralSmooth>(kind_).name;
  }

  bool in_domain(std::span<const double> x) const {
    if (const auto* box = std::get_if<IndicatorBox>(&kind_)) {
      for (std::size_t i = 0; i < dim_; ++i) {
        if (x[i] < box->low[i] || x[i] > box->high[i]) return false;
      }
    }
    return true;
  }

  double value(std::span<const double> x) const {
    if (std::holds_alternative<IndicatorBox>(kind_)) {
      return in_domain(x) ? 0.0 : std::numeric_limits<double>::infinity();
    }
    if (const auto* s = std::get_if<SeparableSmooth>(&kind_)) {
      double sum = 0.0;
      for (double xi : x) sum += s->value(xi);
      return sum;
    }
    return std::get<GeneralSmooth>(kind_).value(x);
  }

  // Euclidean projection onto the closed domain; identity for smooth kinds.
  void project(std::span<const double> x, std::span<double> out) const {
    if (const auto* box = std::get_if<IndicatorBox>(&kind_)) {
      for (std::size_t i = 0; i < dim_; ++i) out[i] = std::clamp(x[i], box->low[i], box->high[i]);
    } else {
      std::copy(x.begin(), x.end(), out.begin());
    }
  }

  // argmin_v |v - x|^2 / (2 eps) + phi(v).
  void prox(std::span<const double> x, double eps, std::span<double> out) const {
    if (!(eps > 0.0)) throw std::invalid_argument("prox: eps must be positive");
    std::visit([&](const auto& k) { prox_impl(k, x, eps, out); }, kind_);
  }

  // (x - prox(x)) / eps.
  void yosida_gradient(std::span<const double> x, double eps, std::span<double> out) const {
    prox(x, eps, out);
    for (std::size_t i = 0; i < dim_; ++i) out[i] = (x[i] - out[i]) / eps;
  }

  // phi_eps(x) = |prox - x|^2 / (2 eps) + phi(prox).
  double moreau_envelope(std::span<const double> x, double eps) const {
    Point v(dim_);
    prox(x, eps, v);
    double sq = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) sq += (v[i] - x[i]) * (v[i] - x[i]);
    return sq / (2.0 * eps) + value(v);
  }

  Point project(const Point& x) const {
    Point out(dim_);
    project(x, out);
    return out;
  }
  Point prox(const Point& x, double eps) const {
    Point out(dim_);
    prox(x, eps, out);
    return out;
  }
  Point yosida_gradient(const Point& x, double eps) const {
    Point out(dim_);
    yosida_gradient(x, eps, out);
    return out;
  }

 private:
  void prox_impl(const IndicatorBox&, std::span<const double> x, double,
                 std::span<double> out) const {
    project(x, out);
  }

  void prox_impl(const SeparableSmooth& s, std::span<const double> x, double eps,
                 std::span<double> out) const {
    for (std::size_t i = 0; i < dim_; ++i) out[i] = prox_scalar(s, x[i], eps);
  }

  // Root of r(v) = v + eps phi1'(v) - x. r is increasing and phi1'(0) = 0,
  // so the root lies between 0 and x.
  static double prox_scalar(const SeparableSmooth& s, double x, double eps) {
    double lo = std::min(0.0, x);
    double hi = std::max(0.0, x);
    double v = 0.5 * (lo + hi);
    for (int it = 0; it < kMaxProxIterations; ++it) {
      const double r = v + eps * s.derivative(v) - x;
      if (std::abs(r) <= kProxTolerance) return v;
      if (r > 0.0) hi = v; else lo = v;
      if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x))) {
        return v;
      }
      const double slope = 1.0 + eps * s.second_derivative(v);
      double next = v - r / slope;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      v = next;
    }
    throw ProxDidNotConverge("prox: Newton iteration did not converge for " + s.name);
  }

  void prox_impl(const GeneralSmooth& s, std::span<const double> x, double eps,
                 std::span<double> out) const {
    std::copy(x.begin(), x.end(), out.begin());
    Point grad(dim_);
    Point residual(dim_);
    for (int it = 0; it < kMaxProxIterations; ++it) {
      s.gradient(out, grad);
      for (std::size_t i = 0; i < dim_; ++i) residual[i] = out[i] + eps * grad[i] - x[i];
      if (norm(residual) <= kProxTolerance) return;
      // Damped step v <- v - residual / 2.
      for (std::size_t i = 0; i < dim_; ++i) out[i] -= 0.5 * residual[i];
    }
    throw ProxDidNotConverge("prox: fixed-point iteration did not converge for " + s.name);
  }

  Kind kind_;
  std::size_t dim_;
};

inline ConvexPotential indicator_interval(double low, double high) {
  return ConvexPotential(IndicatorBox{{low}, {high}}, 1);
}

inline ConvexPotential indicator_box(std::vector<double> low, std::vector<double> high) {
  const std::size_t d = low.size();
  return ConvexPotential(IndicatorBox{std::move(low), std::move(high)}, d);
}

inline ConvexPotential zero_potential(std::size_t dim = 1) {
  return ConvexPotential(
      SeparableSmooth{"zero", [](double) { return 0.0; }, [](double) { return 0.0; },
                      [](double) { return 0.0; }},
      dim);
}

// (c / 2) |x|^2.
inline ConvexPotential quadratic_potential(double c, std::size_t dim = 1) {
  if (!(c >= 0.0)) throw std::invalid_argument("quadratic potential weight must be >= 0");
  return ConvexPotential(
      SeparableSmooth{"quadratic", [c](double v) { return 0.5 * c * v * v; },
                      [c](double v) { return c * v; }, [c](double) { return c; }},
      dim);
}

// c sum_i log cosh x_i.
inline ConvexPotential log_cosh_potential(double c, std::size_t dim = 1) {
  if (!(c >= 0.0)) throw std::invalid_argument("log-cosh potential weight must be >= 0");
  auto log_cosh = [](double v) {
    const double a = std::abs(v);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
  };
  return ConvexPotential(
      SeparableSmooth{"log_cosh", [c, log_cosh](double v) { return c * log_cosh(v); },
                      [c](double v) { return c * std::tanh(v); },
                      [c](double v) {
                        const double th = std::tanh(v);
                        return c * (1.0 - th * th);
                      }},
      dim);
}

inline ConvexPotential smooth_potential(std::string name,
                                        std::function<double(std::span<const double>)> value,
                                        std::function<void(std::span<const double>, std::span<double>)> gradient,
                                        std::size_t dim) {
  return ConvexPotential(GeneralSmooth{std::move(name), std::move(value), std::move(gradient)}, dim);
}

enum class InclusionCheck { Holds, Violated, Vacuous };

// One-step form of <u - x, dK> - phi(x) dt <= phi(u) dt. A probe u outside
// an indicator's domain has phi(u) = +inf and makes the check vacuous.
inline InclusionCheck variational_inequality_check(std::span<const double> x,
                                                   std::span<const double> k_increment,
                                                   std::span<const double> u,
                                                   const ConvexPotential& pot, double dt) {
  const double phi_u = pot.value(u);
  if (!std::isfinite(phi_u)) return InclusionCheck::Vacuous;
  double lhs = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) lhs += (u[i] - x[i]) * k_increment[i];
  const double phi_x = pot.value(x);
  lhs -= phi_x * dt;
  const double tol = 1e-9 * (1.0 + norm(k_increment));
  return lhs <= phi_u * dt + tol ? InclusionCheck::Holds : InclusionCheck::Violated;
}

// Discrete monotonicity of the reflection term: <x1 - x2, k1 - k2> >= 0.
inline bool monotonicity_check(std::span<const double> x1, std::span<const double> k1,
                               std::span<const double> x2, std::span<const double> k2) {
  double s = 0.0;
  for (std::size_t i = 0; i < x1.size(); ++i) s += (x1[i] - x2[i]) * (k1[i] - k2[i]);
  return s >= -1e-9;
}

}  // namespace gmsde
