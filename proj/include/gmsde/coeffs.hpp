#pragma once

// Coefficient triples (f, g, sigma), their time averages, the log-type
// moduli of continuity and the averaging-deviation diagnostics.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmsde/convex.hpp"

namespace gmsde {

struct Dims {
  std::size_t state = 1;
  std::size_t noise = 1;
  bool operator==(const Dims&) const = default;
};

// Writes f(t, x), g(t, x) (length state) and sigma(t, x) (state x noise,
// row-major).
using TripleEval = std::function<void(double t, std::span<const double> x, std::span<double> f,
                                      std::span<double> g, std::span<double> sigma)>;
using AveragedEval = std::function<void(std::span<const double> x, std::span<double> f,
                                        std::span<double> g, std::span<double> sigma)>;

struct CoefficientValues {
  Point f;
  Point g;
  std::vector<double> sigma;
};

class CoefficientTriple {
 public:
  CoefficientTriple(std::string name, Dims dims, TripleEval eval,
                    std::optional<double> growth_L1 = std::nullopt,
                    std::function<double(double)> lambda = {})
      : name_(std::move(name)), dims_(dims), eval_(std::move(eval)), growth_L1_(growth_L1),
        lambda_(std::move(lambda)) {
    if (dims_.state == 0 || dims_.noise == 0) throw std::invalid_argument("triple dims must be positive");
  }

  void evaluate(double t, std::span<const double> x, std::span<double> f, std::span<double> g,
                std::span<double> sigma) const {
    eval_(t, x, f, g, sigma);
  }

  CoefficientValues evaluate(double t, const Point& x) const {
    if (x.size() != dims_.state) throw std::invalid_argument("state dimension differs from the triple");
    CoefficientValues v{Point(dims_.state), Point(dims_.state),
                        std::vector<double>(dims_.state * dims_.noise)};
    eval_(t, x, v.f, v.g, v.sigma);
    return v;
  }

  Point f(double t, const Point& x) const { return evaluate(t, x).f; }
  Point g(double t, const Point& x) const { return evaluate(t, x).g; }
  std::vector<double> sigma(double t, const Point& x) const { return evaluate(t, x).sigma; }

  const std::string& name() const { return name_; }
  Dims dims() const { return dims_; }
  std::optional<double> growth_L1() const { return growth_L1_; }
  // Optional Lipschitz-type envelope lambda(t); diagnostic only.
  const std::function<double(double)>& lambda() const { return lambda_; }

  CoefficientTriple scaled(double c) const {
    auto inner = eval_;
    return CoefficientTriple(
        name_ + "*" + std::to_string(c), dims_,
        [inner, c](double t, std::span<const double> x, std::span<double> f, std::span<double> g,
                   std::span<double> s) {
          inner(t, x, f, g, s);
          for (double& v : f) v *= c;
          for (double& v : g) v *= c;
          for (double& v : s) v *= c;
        });
  }

 private:
  std::string name_;
  Dims dims_;
  TripleEval eval_;
  std::optional<double> growth_L1_;
  std::function<double(double)> lambda_;
};

class AveragedTriple {
 public:
  AveragedTriple(std::string name, Dims dims, AveragedEval eval)
      : name_(std::move(name)), dims_(dims), eval_(std::move(eval)) {
    if (dims_.state == 0 || dims_.noise == 0) throw std::invalid_argument("triple dims must be positive");
  }

  void evaluate(std::span<const double> x, std::span<double> f, std::span<double> g,
                std::span<double> sigma) const {
    eval_(x, f, g, sigma);
  }

  CoefficientValues evaluate(const Point& x) const {
    if (x.size() != dims_.state) throw std::invalid_argument("state dimension differs from the triple");
    CoefficientValues v{Point(dims_.state), Point(dims_.state),
                        std::vector<double>(dims_.state * dims_.noise)};
    eval_(x, v.f, v.g, v.sigma);
    return v;
  }

  const std::string& name() const { return name_; }
  Dims dims() const { return dims_; }

  // The same coefficients viewed as a time-independent triple.
  CoefficientTriple as_triple() const {
    auto inner = eval_;
    return CoefficientTriple(name_, dims_,
                             [inner](double, std::span<const double> x, std::span<double> f,
                                     std::span<double> g, std::span<double> s) { inner(x, f, g, s); });
  }

 private:
  std::string name_;
  Dims dims_;
  AveragedEval eval_;
};

inline CoefficientTriple zero_triple(Dims dims = {}) {
  return CoefficientTriple("zero", dims,
                           [](double, std::span<const double>, std::span<double> f,
                              std::span<double> g, std::span<double> s) {
                             std::fill(f.begin(), f.end(), 0.0);
                             std::fill(g.begin(), g.end(), 0.0);
                             std::fill(s.begin(), s.end(), 0.0);
                           },
                           0.0);
}

// f = drift, g = qv_drift, sigma = diffusion (all constant, scalar state).
inline AveragedTriple constant_averaged(double drift, double qv_drift, double diffusion) {
  return AveragedTriple("constant", {1, 1},
                        [=](std::span<const double>, std::span<double> f, std::span<double> g,
                            std::span<double> s) {
                          f[0] = drift;
                          g[0] = qv_drift;
                          s[0] = diffusion;
                        });
}

// ---------------------------------------------------------------------------
// Moduli of continuity

enum class KappaVariant { Log, LogSquarePatch };

struct ModulusKappa {
  KappaVariant variant = KappaVariant::Log;
  double eta = 0.1;
  double scale_C = 1.0;
};

inline double kappa_eval(const ModulusKappa& mod, double x) {
  if (!(x > 0.0)) throw std::invalid_argument("kappa_eval: x must be positive");
  if (!(mod.eta > 0.0 && mod.eta < 1.0 / std::numbers::e)) {
    throw std::invalid_argument("kappa_eval: eta must lie in (0, 1/e)");
  }
  const double log_inv_eta = std::log(1.0 / mod.eta);
  double base = 0.0;
  if (x <= mod.eta) {
    base = std::log(1.0 / x);
  } else if (mod.variant == KappaVariant::Log) {
    base = log_inv_eta - 1.0 + mod.eta / x;
  } else {
    const double r = std::sqrt(log_inv_eta);
    const double num = (r - 0.5 / r) * x + 0.5 / r * mod.eta;
    base = num * num / (x * x);
  }
  return mod.scale_C * base;
}

// ---------------------------------------------------------------------------
// Sine-series example family

namespace detail {

// Shared tables for sum_k sin(kx)/k^2, sum_k sin^2(kx)/k^3 and the vector
// (k^{-3/2} sin(kx))_{k <= m}.
class SineSeries {
 public:
  SineSeries(std::size_t k_trunc, std::size_t m) : k_trunc_(k_trunc), m_(m) {
    if (k_trunc == 0 || m == 0) throw std::invalid_argument("sine series needs k_trunc, m >= 1");
    const std::size_t n = std::max(k_trunc, m);
    inv_k2_.resize(n);
    inv_k3_.resize(n);
    inv_k32_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double k = static_cast<double>(i + 1);
      inv_k2_[i] = 1.0 / (k * k);
      inv_k3_[i] = 1.0 / (k * k * k);
      inv_k32_[i] = 1.0 / (k * std::sqrt(k));
    }
  }

  // sin(kx) by repeated rotation; error grows like k * machine epsilon.
  void evaluate(double x, double& f_sum, double& g_sum, std::span<double> sigma) const {
    const double c = std::cos(x);
    const double s = std::sin(x);
    double ck = c;
    double sk = s;
    double fs = 0.0;
    double gs = 0.0;
    const std::size_t n = std::max(k_trunc_, m_);
    for (std::size_t i = 0; i < n; ++i) {
      if (i < k_trunc_) {
        fs += sk * inv_k2_[i];
        gs += sk * sk * inv_k3_[i];
      }
      if (i < m_) sigma[i] = sk * inv_k32_[i];
      const double cn = ck * c - sk * s;
      sk = sk * c + ck * s;
      ck = cn;
    }
    f_sum = fs;
    g_sum = gs;
  }

  std::size_t k_trunc() const { return k_trunc_; }
  std::size_t m() const { return m_; }

 private:
  std::size_t k_trunc_;
  std::size_t m_;
  std::vector<double> inv_k2_;
  std::vector<double> inv_k3_;
  std::vector<double> inv_k32_;
};

}  // namespace detail

// f = sin(s) sum sin(kx)/k^2, g = sin(s) sum sin^2(kx)/k^3,
// sigma = sin(s) (k^{-3/2} sin(kx))_{k<=m}; scalar state, m noise columns.
inline CoefficientTriple example4_triple(std::size_t k_trunc = 1000, std::size_t m = 1000) {
  auto series = std::make_shared<const detail::SineSeries>(k_trunc, m);
  // |f|^2 + |g|^2 + |sigma|^2 <= zeta(2)^2 + 2 zeta(3)^2.
  const double zeta2 = std::numbers::pi * std::numbers::pi / 6.0;
  const double zeta3 = 1.2020569031595942;
  return CoefficientTriple(
      "example4", {1, m},
      [series](double t, std::span<const double> x, std::span<double> f, std::span<double> g,
               std::span<double> s) {
        double fs = 0.0;
        double gs = 0.0;
        series->evaluate(x[0], fs, gs, s);
        const double amp = std::sin(t);
        f[0] = amp * fs;
        g[0] = amp * gs;
        for (double& v : s) v *= amp;
      },
      zeta2 * zeta2 + 2.0 * zeta3 * zeta3);
}

// Time averages of example4_triple: the factor (1/pi) int_0^pi sin = 2/pi.
inline AveragedTriple example4_averaged(std::size_t k_trunc = 1000, std::size_t m = 1000) {
  auto series = std::make_shared<const detail::SineSeries>(k_trunc, m);
  constexpr double factor = 2.0 / std::numbers::pi;
  return AveragedTriple("example4_averaged", {1, m},
                        [series](std::span<const double> x, std::span<double> f,
                                 std::span<double> g, std::span<double> s) {
                          double fs = 0.0;
                          double gs = 0.0;
                          series->evaluate(x[0], fs, gs, s);
                          f[0] = factor * fs;
                          g[0] = factor * gs;
                          for (double& v : s) v *= factor;
                        });
}

// f(s,x) = (1 + gamma e^{-s}) fbar(x), g likewise,
// sigma(s,x) = sqrt(1 + gamma e^{-s}) sigmabar(x). The Cesaro deviations
// are at most gamma / T1 times a sup-scale, so the averaging hypotheses hold.
inline CoefficientTriple decaying_perturbation_triple(const AveragedTriple& base, double gamma) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("decaying perturbation requires gamma >= 0");
  return CoefficientTriple(
      "decaying(" + base.name() + ")", base.dims(),
      [base, gamma](double t, std::span<const double> x, std::span<double> f, std::span<double> g,
                    std::span<double> s) {
        base.evaluate(x, f, g, s);
        if (gamma == 0.0) return;
        const double amp = 1.0 + gamma * std::exp(-t);
        const double root = std::sqrt(amp);
        for (double& v : f) v *= amp;
        for (double& v : g) v *= amp;
        for (double& v : s) v *= root;
      });
}

// ---------------------------------------------------------------------------
// Diagnostics

struct AveragingDeviation {
  // (1/T1) int_0^T1 |f - fbar| ds, and the g analogue.
  double dev_f = 0.0;
  double dev_g = 0.0;
  // (1/T1) int_0^T1 |sigma - sigmabar|^2 ds.
  double dev_sigma_sq = 0.0;
  // Signed Cesaro means |(1/T1) int_0^T1 (f - fbar) ds|, and analogues.
  double cesaro_f = 0.0;
  double cesaro_g = 0.0;
  double cesaro_sigma = 0.0;
};

// Composite trapezoid rule with quad_points nodes on [0, t1].
inline AveragingDeviation averaging_deviation(const CoefficientTriple& triple,
                                              const AveragedTriple& averaged, const Point& x,
                                              double t1, std::size_t quad_points) {
  if (!(t1 > 0.0)) throw std::invalid_argument("averaging_deviation: t1 must be positive");
  if (quad_points < 16) throw std::invalid_argument("averaging_deviation: need >= 16 nodes");
  if (!(triple.dims() == averaged.dims())) throw std::invalid_argument("averaging_deviation: shape mismatch");

  const auto bar = averaged.evaluate(x);
  auto now = averaged.evaluate(x);
  const std::size_t d = triple.dims().state;
  const std::size_t ds = bar.sigma.size();
  Point sum_f(d, 0.0);
  Point sum_g(d, 0.0);
  std::vector<double> sum_s(ds, 0.0);
  AveragingDeviation out;

  const double h = t1 / static_cast<double>(quad_points - 1);
  for (std::size_t i = 0; i < quad_points; ++i) {
    const double w = (i == 0 || i + 1 == quad_points) ? 0.5 * h : h;
    triple.evaluate(static_cast<double>(i) * h, x, now.f, now.g, now.sigma);
    double nf = 0.0;
    double ng = 0.0;
    double ns = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double df = now.f[j] - bar.f[j];
      const double dg = now.g[j] - bar.g[j];
      nf += df * df;
      ng += dg * dg;
      sum_f[j] += w * df;
      sum_g[j] += w * dg;
    }
    for (std::size_t j = 0; j < ds; ++j) {
      const double dsig = now.sigma[j] - bar.sigma[j];
      ns += dsig * dsig;
      sum_s[j] += w * dsig;
    }
    out.dev_f += w * std::sqrt(nf);
    out.dev_g += w * std::sqrt(ng);
    out.dev_sigma_sq += w * ns;
  }
  out.dev_f /= t1;
  out.dev_g /= t1;
  out.dev_sigma_sq /= t1;
  out.cesaro_f = norm(sum_f) / t1;
  out.cesaro_g = norm(sum_g) / t1;
  out.cesaro_sigma = norm(sum_s) / t1;
  return out;
}

// Largest (|f|^2 + |g|^2 + |sigma|^2) / (1 + |x|^2) over x on the diagonal
// of [-radius, radius]^d and t in [0, t_max].
inline double growth_scan(const CoefficientTriple& triple, double radius, std::size_t grid_points,
                          std::size_t time_points, double t_max = 2.0 * std::numbers::pi) {
  if (!(radius > 0.0)) throw std::invalid_argument("growth_scan: radius must be positive");
  if (grid_points < 2 || time_points < 1) throw std::invalid_argument("growth_scan: grid too small");
  const std::size_t d = triple.dims().state;
  double best = 0.0;
  Point x(d);
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double xi = -radius + 2.0 * radius * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    std::fill(x.begin(), x.end(), xi);
    const double denom = 1.0 + dot(x, x);
    for (std::size_t j = 0; j < time_points; ++j) {
      const double t = time_points == 1 ? 0.0
                                        : t_max * static_cast<double>(j) / static_cast<double>(time_points - 1);
      const auto v = triple.evaluate(t, x);
      const double num = dot(v.f, v.f) + dot(v.g, v.g) + dot(v.sigma, v.sigma);
      best = std::max(best, num / denom);
    }
  }
  return best;
}

// Smallest C with |f(t,x) - f(t,y)| <= C |x - y| log(1/|x - y|) over the
// given scalar pairs (0 < |x - y| <= eta).
inline double fit_log_modulus_constant(const CoefficientTriple& triple, double t,
                                       std::span<const std::pair<double, double>> pairs) {
  double best = 0.0;
  for (const auto& [x, y] : pairs) {
    const double delta = std::abs(x - y);
    if (!(delta > 0.0 && delta < 1.0)) continue;
    const double diff = std::abs(triple.f(t, {x})[0] - triple.f(t, {y})[0]);
    best = std::max(best, diff / (delta * std::log(1.0 / delta)));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Preset registry

struct PresetParams {
  double gamma = 1.0;
  std::size_t k_trunc = 1000;
  std::size_t m = 1000;
  double bs_drift = 0.05;
  double bs_qv_drift = 0.0;
  double bs_volatility = 0.2;
  bool operator==(const PresetParams&) const = default;
};

struct Preset {
  std::string name;
  CoefficientTriple original;
  AveragedTriple averaged;
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"bs_market", "decaying", "example4", "zero"};
  return names;
}

inline Preset make_preset(const std::string& name, const PresetParams& params = {}) {
  if (name == "example4") {
    return {name, example4_triple(params.k_trunc, params.m), example4_averaged(params.k_trunc, params.m)};
  }
  if (name == "decaying") {
    auto base = example4_averaged(params.k_trunc, params.m);
    return {name, decaying_perturbation_triple(base, params.gamma), base};
  }
  if (name == "zero") {
    AveragedTriple avg("zero", {1, 1},
                       [](std::span<const double>, std::span<double> f, std::span<double> g,
                          std::span<double> s) {
                         f[0] = 0.0;
                         g[0] = 0.0;
                         s[0] = 0.0;
                       });
    return {name, avg.as_triple(), avg};
  }
  if (name == "bs_market") {
    // dS = b S dt + beta S d<B> + sigma S dB with constant coefficients.
    const double b = params.bs_drift;
    const double beta = params.bs_qv_drift;
    const double vol = params.bs_volatility;
    AveragedTriple avg("bs_market", {1, 1},
                       [b, beta, vol](std::span<const double> x, std::span<double> f,
                                      std::span<double> g, std::span<double> s) {
                         f[0] = b * x[0];
                         g[0] = beta * x[0];
                         s[0] = vol * x[0];
                       });
    return {name, avg.as_triple(), avg};
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

}  // namespace gmsde
