#pragma once

// Expectations over a unit-mean exponential variable, ∫_0^∞ f(u) e^{-u} du,
// and Gauss-Legendre panels for the Gauss-Markov transfer operator.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qosrate/errors.hpp"

namespace qosrate::quadrature {

struct Result {
  double value = 0.0;
  double error = 0.0;
};

/// Breakpoints for an exponential-weight integral whose integrand changes
/// character around u ~ feature_scale (e.g. 1/snr for log(1 + snr u)).
inline std::vector<double> exponential_breakpoints(double feature_scale) {
  std::vector<double> points{0.0};
  for (int k = -6; k <= 6; ++k) points.push_back(std::ldexp(1.0, k));
  if (std::isfinite(feature_scale) && feature_scale > 0.0 && feature_scale < 64.0) {
    for (double p = feature_scale / 64.0; p < 64.0; p *= 2.0) {
      if (p > 0.0) points.push_back(p);
    }
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end(),
                           [](double a, double b) { return std::abs(a - b) <= 1e-12 * b; }),
               points.end());
  return points;
}

namespace detail {

// Bisection driven by the non-adaptive 31-point Gauss-Kronrod step. Boost's
// own recursion compares the reference-interval error against a tolerance in
// panel units, so narrow panels never converge; here the error is rescaled
// by the half-width before the comparison.
template <class F>
void adapt(const F& f, double a, double b, double tol, int depth, Result& out, double& l1) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  double mass = 0.0;
  const double v = gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &err, &mass);
  err *= 0.5 * (b - a);
  if (depth == 0 || err <= tol || !std::isfinite(v)) {
    out.value += v;
    out.error += err;
    l1 += mass;
    return;
  }
  const double mid = 0.5 * (a + b);
  adapt(f, a, mid, 0.5 * tol, depth - 1, out, l1);
  adapt(f, mid, b, 0.5 * tol, depth - 1, out, l1);
}

template <class F>
void adapt_panel(const F& f, double a, double b, double rel_tol, Result& out, double& l1) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  double mass = 0.0;
  gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &err, &mass);
  adapt(f, a, b, rel_tol * mass, 30, out, l1);
}

}  // namespace detail

/// ∫_0^∞ f(u) e^{-u} du by adaptive 31-point Gauss-Kronrod on a geometric
/// partition plus a tail panel mapped to [0, 1). Throws QuadratureFailure when
/// the combined error estimate exceeds `rel_tol` times the L1 mass.
template <class F>
Result expect_exponential(F&& f, double feature_scale, double rel_tol = 1e-10) {
  auto integrand = [&](double u) {
    const double w = std::exp(-u);
    if (w == 0.0) return 0.0;
    return f(u) * w;
  };

  const auto points = exponential_breakpoints(feature_scale);
  const double panel_tol = std::min(1e-12, 0.01 * rel_tol);
  Result total;
  double l1 = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    detail::adapt_panel(integrand, points[i], points[i + 1], panel_tol, total, l1);
  }
  const double start = points.back();
  auto tail = [&](double t) {
    if (t >= 1.0) return 0.0;
    const double s = 1.0 - t;
    return integrand(start + t / s) / (s * s);
  };
  detail::adapt_panel(tail, 0.0, 1.0, panel_tol, total, l1);

  if (!std::isfinite(total.value) || total.error > rel_tol * l1 + 1e-300) {
    throw Error(ErrorCode::quadrature_failure,
                "exponential expectation did not reach tolerance (error estimate " +
                    std::to_string(total.error) + ", mass " + std::to_string(l1) + ")");
  }
  return total;
}

template <int N>
struct LegendreRule {
  std::array<double, N> nodes;
  std::array<double, N> weights;
};

/// N-point Gauss-Legendre rule on [-1, 1], expanded from Boost's half rule.
template <int N>
LegendreRule<N> gauss_legendre() {
  using boost::math::quadrature::gauss;
  const auto& x = gauss<double, N>::abscissa();
  const auto& w = gauss<double, N>::weights();
  LegendreRule<N> rule;
  int k = 0;
  for (std::size_t i = x.size(); i-- > 0;) {
    if (x[i] == 0.0) continue;
    rule.nodes[k] = -x[i];
    rule.weights[k++] = w[i];
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    rule.nodes[k] = x[i];
    rule.weights[k++] = w[i];
  }
  return rule;
}

}  // namespace qosrate::quadrature
