#pragma once

// Markovian traffic sources (discrete-time chains, Markov fluids and MMPPs)
// and their effective bandwidths, in closed form for two-state ON/OFF models
// and through the Perron root of the input matrix for general n-state models.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "qosrate/errors.hpp"
#include "qosrate/linalg.hpp"

namespace qosrate {

// ---------------------------------------------------------------------------
// Two-state parameterisations
// ---------------------------------------------------------------------------

/// ON/OFF discrete-time chain: p11 = Pr{stay OFF}, p22 = Pr{stay ON}, and
/// `lambda` bits arrive per block while ON.
struct OnOffDiscreteParams {
  double p11 = 0.5;
  double p22 = 0.5;
  double lambda = 0.0;

  void validate() const {
    detail::require(p11 >= 0.0 && p11 <= 1.0, "p11", "must lie in [0, 1]");
    detail::require(p22 >= 0.0 && p22 <= 1.0, "p22", "must lie in [0, 1]");
    detail::require(!(p11 == 1.0 && p22 == 1.0), "p11",
                    "p11 = p22 = 1 gives a reducible chain with no unique stationary law");
    detail::require(lambda >= 0.0 && std::isfinite(lambda), "lambda", "must be finite and >= 0");
  }

  double p_on() const { return (1.0 - p11) / (2.0 - p11 - p22); }
};

/// ON/OFF continuous-time modulating chain shared by the fluid and MMPP
/// models: alpha = OFF->ON rate, beta = ON->OFF rate (1/block). `lambda` is the
/// ON rate (fluid) or the ON Poisson intensity (MMPP), in bits/block.
struct OnOffContinuousParams {
  double alpha = 1.0;
  double beta = 0.0;
  double lambda = 0.0;

  void validate() const {
    detail::require(alpha > 0.0 && std::isfinite(alpha), "alpha", "must be finite and > 0");
    detail::require(beta >= 0.0 && std::isfinite(beta), "beta", "must be finite and >= 0");
    detail::require(lambda >= 0.0 && std::isfinite(lambda), "lambda", "must be finite and >= 0");
  }

  double p_on() const { return alpha / (alpha + beta); }
};

enum class ChainStatus {
  regular,
  absorbing_off,  ///< p11 = 1: the source falls silent forever
  absorbing_on,   ///< p22 = 1: the source is eventually always ON
};

inline ChainStatus classify(const OnOffDiscreteParams& p) {
  if (p.p11 == 1.0) return ChainStatus::absorbing_off;
  if (p.p22 == 1.0) return ChainStatus::absorbing_on;
  return ChainStatus::regular;
}

// ---------------------------------------------------------------------------
// General n-state sources
// ---------------------------------------------------------------------------

namespace detail {

inline void require_square(const Matrix& m, const Vector& rates, std::string_view matrix_field) {
  require(m.rows() >= 1 && m.rows() == m.cols(), matrix_field, "must be a non-empty square matrix");
  require(rates.size() == m.rows(), "rates", "length must match the matrix dimension");
  for (Eigen::Index i = 0; i < rates.size(); ++i) {
    require(std::isfinite(rates(i)) && rates(i) >= 0.0, "rates/" + std::to_string(i),
            "must be finite and >= 0");
  }
}

/// States belonging to closed communicating classes, found from the transitive
/// closure of the transition pattern.
inline std::vector<Eigen::Index> recurrent_states(const Matrix& pattern) {
  const Eigen::Index n = pattern.rows();
  Matrix reach = (pattern.array() > 0.0).cast<double>().matrix();
  reach.diagonal().setOnes();
  for (Eigen::Index span = 1; span < n; span *= 2) {
    reach = (reach * reach).unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
  }
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < n; ++i) {
    bool closed = true;
    for (Eigen::Index j = 0; j < n && closed; ++j) {
      if (reach(i, j) > 0.0 && reach(j, i) == 0.0) closed = false;
    }
    if (closed) out.push_back(i);
  }
  return out;
}

inline Matrix submatrix(const Matrix& m, const std::vector<Eigen::Index>& idx) {
  Matrix out(idx.size(), idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b) out(a, b) = m(idx[a], idx[b]);
  return out;
}

inline Vector subvector(const Vector& v, const std::vector<Eigen::Index>& idx) {
  Vector out(idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a) out(a) = v(idx[a]);
  return out;
}

/// Shared state of a validated chain: the matrix, the per-state rates, the
/// stationary law and the recurrent class it is supported on.
struct ChainCore {
  Matrix matrix;
  Vector rates;
  Vector stationary;
  std::vector<Eigen::Index> recurrent;

  bool fully_recurrent() const { return recurrent.size() == static_cast<std::size_t>(matrix.rows()); }
  Matrix recurrent_matrix() const { return fully_recurrent() ? matrix : submatrix(matrix, recurrent); }
  Vector recurrent_rates() const { return fully_recurrent() ? rates : subvector(rates, recurrent); }
};

inline void pin_transient_mass(ChainCore& core) {
  Vector pi = Vector::Zero(core.matrix.rows());
  for (auto i : core.recurrent) pi(i) = core.stationary(i);
  core.stationary = pi / pi.sum();
}

}  // namespace detail

/// Discrete-time Markov source: row-stochastic transition matrix J and
/// per-block arrival rates. The chain must have a unique stationary law and
/// its recurrent class must be aperiodic.
class DiscreteMarkovSource {
 public:
  DiscreteMarkovSource(Matrix transition_probs, Vector rates) {
    detail::require_square(transition_probs, rates, "transition");
    const Eigen::Index n = transition_probs.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double p = transition_probs(i, j);
        detail::require(std::isfinite(p) && p >= 0.0 && p <= 1.0,
                        "transition/" + std::to_string(i) + "/" + std::to_string(j),
                        "must lie in [0, 1]");
      }
      detail::require(std::abs(transition_probs.row(i).sum() - 1.0) <= 1e-12,
                      "transition/" + std::to_string(i), "row must sum to 1");
    }
    core_.matrix = std::move(transition_probs);
    core_.rates = std::move(rates);
    core_.stationary = linalg::stationary_left_null(core_.matrix - Matrix::Identity(n, n));
    core_.recurrent = detail::recurrent_states(core_.matrix);
    detail::pin_transient_mass(core_);
    if (!linalg::is_primitive(core_.recurrent_matrix())) {
      throw Error(ErrorCode::periodic_chain,
                  "the recurrent class is periodic; effective bandwidth is undefined");
    }
  }

  Eigen::Index size() const { return core_.matrix.rows(); }
  const Matrix& transition_probs() const { return core_.matrix; }
  const Vector& rates() const { return core_.rates; }
  const Vector& stationary() const { return core_.stationary; }
  const detail::ChainCore& core() const { return core_; }

  /// Same chain with a different rate vector (same length).
  DiscreteMarkovSource with_rates(Vector rates) const {
    DiscreteMarkovSource out = *this;
    out.core_.rates = std::move(rates);
    return out;
  }

 private:
  detail::ChainCore core_;
};

namespace detail {

inline Matrix validated_generator(Matrix g, const Vector& rates) {
  require_square(g, rates, "transition");
  const Eigen::Index n = g.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    double off = 0.0;
    double scale = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = g(i, j);
      require(std::isfinite(v), "transition/" + std::to_string(i) + "/" + std::to_string(j),
              "must be finite");
      scale = std::max(scale, std::abs(v));
      if (i == j) continue;
      require(v >= 0.0, "transition/" + std::to_string(i) + "/" + std::to_string(j),
              "off-diagonal rates must be >= 0");
      off += v;
    }
    require(std::abs(g.row(i).sum()) <= 1e-12 * scale, "transition/" + std::to_string(i),
            "generator rows must sum to 0");
    g(i, i) = -off;  // exact zero row sums
  }
  return g;
}

inline ChainCore generator_core(Matrix g, Vector rates) {
  ChainCore core;
  core.matrix = validated_generator(std::move(g), rates);
  core.rates = std::move(rates);
  core.stationary = linalg::stationary_left_null(core.matrix);
  core.recurrent = recurrent_states(core.matrix);
  pin_transient_mass(core);
  return core;
}

}  // namespace detail

/// Markov fluid source: generator G (1/block) and constant arrival rate per
/// state (bits/block).
class FluidMarkovSource {
 public:
  FluidMarkovSource(Matrix generator, Vector rates)
      : core_(detail::generator_core(std::move(generator), std::move(rates))) {}

  Eigen::Index size() const { return core_.matrix.rows(); }
  const Matrix& generator() const { return core_.matrix; }
  const Vector& rates() const { return core_.rates; }
  const Vector& stationary() const { return core_.stationary; }
  const detail::ChainCore& core() const { return core_; }

  FluidMarkovSource with_rates(Vector rates) const {
    FluidMarkovSource out = *this;
    out.core_.rates = std::move(rates);
    return out;
  }

 private:
  detail::ChainCore core_;
};

/// Markov-modulated Poisson source: generator G and Poisson intensity per
/// state (bits/block).
class MmppSource {
 public:
  MmppSource(Matrix generator, Vector intensities)
      : core_(detail::generator_core(std::move(generator), std::move(intensities))) {}

  Eigen::Index size() const { return core_.matrix.rows(); }
  const Matrix& generator() const { return core_.matrix; }
  const Vector& intensities() const { return core_.rates; }
  const Vector& rates() const { return core_.rates; }
  const Vector& stationary() const { return core_.stationary; }
  const detail::ChainCore& core() const { return core_; }

  MmppSource with_rates(Vector rates) const {
    MmppSource out = *this;
    out.core_.rates = std::move(rates);
    return out;
  }

 private:
  detail::ChainCore core_;
};

using MarkovSource = std::variant<DiscreteMarkovSource, FluidMarkovSource, MmppSource>;

inline DiscreteMarkovSource to_discrete_source(const OnOffDiscreteParams& p) {
  p.validate();
  Matrix j(2, 2);
  j << p.p11, 1.0 - p.p11, 1.0 - p.p22, p.p22;
  return DiscreteMarkovSource(j, Vector{{0.0, p.lambda}});
}

inline Matrix onoff_generator(const OnOffContinuousParams& p) {
  Matrix g(2, 2);
  g << -p.alpha, p.alpha, p.beta, -p.beta;
  return g;
}

inline FluidMarkovSource to_fluid_source(const OnOffContinuousParams& p) {
  p.validate();
  return FluidMarkovSource(onoff_generator(p), Vector{{0.0, p.lambda}});
}

inline MmppSource to_mmpp_source(const OnOffContinuousParams& p) {
  p.validate();
  return MmppSource(onoff_generator(p), Vector{{0.0, p.lambda}});
}

// ---------------------------------------------------------------------------
// Stationary laws and average rates
// ---------------------------------------------------------------------------

inline Vector stationary_distribution_discrete(const Matrix& transition_probs) {
  const Eigen::Index n = transition_probs.rows();
  return linalg::stationary_left_null(transition_probs - Matrix::Identity(n, n));
}

inline Vector stationary_distribution_discrete(const DiscreteMarkovSource& src) {
  return src.stationary();
}

inline Vector stationary_distribution_fluid(const Matrix& generator) {
  return linalg::stationary_left_null(generator);
}

inline double average_rate(const DiscreteMarkovSource& s) { return s.stationary().dot(s.rates()); }
inline double average_rate(const FluidMarkovSource& s) { return s.stationary().dot(s.rates()); }
inline double average_rate(const MmppSource& s) { return s.stationary().dot(s.rates()); }
inline double average_rate(const MarkovSource& s) {
  return std::visit([](const auto& v) { return average_rate(v); }, s);
}

inline double average_rate(const OnOffDiscreteParams& p) {
  p.validate();
  switch (classify(p)) {
    case ChainStatus::absorbing_off: return 0.0;
    case ChainStatus::absorbing_on: return p.lambda;
    case ChainStatus::regular: break;
  }
  return p.lambda * p.p_on();
}

inline double average_rate(const OnOffContinuousParams& p) {
  p.validate();
  return p.lambda * p.p_on();
}

// ---------------------------------------------------------------------------
// Effective bandwidth: eigenvalue route
// ---------------------------------------------------------------------------

namespace detail {

inline void require_theta(double theta) {
  require(theta > 0.0 && std::isfinite(theta), "theta", "QoS exponent must be finite and > 0");
}

}  // namespace detail

/// (1/θ) log sp(e^{θΛ} J), evaluated on the recurrent class.
inline double effective_bandwidth_discrete(const DiscreteMarkovSource& src, double theta,
                                           const linalg::PerronOptions& options = {}) {
  detail::require_theta(theta);
  const Matrix j = src.core().recurrent_matrix();
  const Vector rates = src.core().recurrent_rates();
  const Eigen::Index n = j.rows();
  const double peak = rates.maxCoeff();
  if (n == 1 || peak == 0.0) return n == 1 ? rates(0) : 0.0;

  if (theta * peak <= 700.0) {
    // Collatz-Wielandt bounds of sp - 1 in difference form, exact for small θ.
    const Vector growth = (theta * rates).array().exp();
    const Vector growth_m1 = (theta * rates).unaryExpr([](double v) { return std::expm1(v); });
    auto apply = [&](const Vector& x, Vector& out) {
      out.noalias() = j * x;
      out.array() *= growth.array();
    };
    auto ratios = [&](const Vector& x, Vector& out) {
      for (Eigen::Index i = 0; i < n; ++i) {
        double flow = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k != i) flow += j(i, k) * (x(k) - x(i));
        }
        out(i) = growth(i) * flow / x(i) + growth_m1(i);
      }
    };
    const auto bracket = linalg::perron_iterate(n, apply, ratios, 1e-2, options);
    return std::min(std::log1p(bracket.value()) / theta, peak);
  }

  // Large θλ: rescale by e^{-θ max λ} so nothing overflows.
  const Vector growth = (theta * (rates.array() - peak)).exp();
  auto apply = [&](const Vector& x, Vector& out) {
    out.noalias() = j * x;
    out.array() *= growth.array();
  };
  auto ratios = [&](const Vector& x, Vector& out) {
    apply(x, out);
    out.array() /= x.array();
  };
  const auto bracket = linalg::perron_iterate(n, apply, ratios, 0.0, options);
  return std::min(peak + std::log(bracket.value()) / theta, peak);
}

namespace detail {

/// Spectral abscissa of diag(diag_rates) + scale * G for a generator G, by
/// shifting to a nonnegative matrix and bracketing the Perron root.
inline double metzler_abscissa(const Matrix& g, const Vector& diag_rates, double scale,
                               const linalg::PerronOptions& options) {
  const Eigen::Index n = g.rows();
  if (n == 1) return diag_rates(0);
  Matrix shifted = scale * g;
  shifted.diagonal() += diag_rates;
  const double shift = shifted.diagonal().cwiseAbs().maxCoeff() + 1.0;
  shifted.diagonal().array() += shift;

  auto apply = [&](const Vector& x, Vector& out) { out.noalias() = shifted * x; };
  auto ratios = [&](const Vector& x, Vector& out) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double flow = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k != i) flow += g(i, k) * (x(k) - x(i));
      }
      out(i) = diag_rates(i) + scale * flow / x(i);
    }
  };
  const auto bracket = linalg::perron_iterate(n, apply, ratios, 1e-2 * shift, options);
  return std::clamp(bracket.value(), diag_rates.minCoeff(), diag_rates.maxCoeff());
}

}  // namespace detail

/// μ(Λ + G/θ): the largest real eigenvalue, over the recurrent class.
inline double effective_bandwidth_fluid(const FluidMarkovSource& src, double theta,
                                        const linalg::PerronOptions& options = {}) {
  detail::require_theta(theta);
  const Vector rates = src.core().recurrent_rates();
  if (rates.maxCoeff() == 0.0) return 0.0;
  return detail::metzler_abscissa(src.core().recurrent_matrix(), rates, 1.0 / theta, options);
}

/// (1/θ) μ((e^θ - 1)Λ + G), over the recurrent class.
inline double effective_bandwidth_mmpp(const MmppSource& src, double theta,
                                       const linalg::PerronOptions& options = {}) {
  detail::require_theta(theta);
  const double gain = std::expm1(theta);
  detail::require(std::isfinite(gain), "theta", "too large: e^theta overflows");
  const Vector rates = src.core().recurrent_rates();
  if (rates.maxCoeff() == 0.0) return 0.0;
  return detail::metzler_abscissa(src.core().recurrent_matrix(), gain * rates, 1.0, options) /
         theta;
}

inline double effective_bandwidth(const MarkovSource& src, double theta,
                                  const linalg::PerronOptions& options = {}) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DiscreteMarkovSource>) {
          return effective_bandwidth_discrete(s, theta, options);
        } else if constexpr (std::is_same_v<T, FluidMarkovSource>) {
          return effective_bandwidth_fluid(s, theta, options);
        } else {
          return effective_bandwidth_mmpp(s, theta, options);
        }
      },
      src);
}

// ---------------------------------------------------------------------------
// Effective bandwidth: closed forms for ON/OFF sources
// ---------------------------------------------------------------------------

/// Two-state discrete chain. Evaluated after factoring out e^{θλ}; the
/// discriminant is written as (p11 - p22 x)^2 + 4(1-p11)(1-p22)x >= 0.
inline double effective_bandwidth_onoff_discrete(const OnOffDiscreteParams& p, double theta) {
  p.validate();
  detail::require_theta(theta);
  if (p.lambda == 0.0) return 0.0;
  switch (classify(p)) {
    case ChainStatus::absorbing_off: return 0.0;
    case ChainStatus::absorbing_on: return p.lambda;
    case ChainStatus::regular: break;
  }
  const double s = std::exp(-theta * p.lambda);
  const double disc = (p.p11 * s - p.p22) * (p.p11 * s - p.p22) +
                      4.0 * (1.0 - p.p11) * (1.0 - p.p22) * s;
  const double scaled_root = 0.5 * (p.p11 * s + p.p22 + std::sqrt(disc));
  return std::min(p.lambda + std::log(scaled_root) / theta, p.lambda);
}

namespace detail {

/// (b + sqrt(b^2 + 4 a c)) / 2 with a, c >= 0, without cancellation for b < 0.
inline double positive_quadratic_root(double b, double ac) {
  const double root = std::sqrt(b * b + 4.0 * ac);
  if (b <= 0.0) {
    const double denom = root - b;
    return denom > 0.0 ? 2.0 * ac / denom : 0.0;
  }
  return 0.5 * (b + root);
}

}  // namespace detail

inline double effective_bandwidth_onoff_fluid(const OnOffContinuousParams& p, double theta) {
  p.validate();
  detail::require_theta(theta);
  const double x = theta * p.lambda;
  const double a = detail::positive_quadratic_root(x - (p.alpha + p.beta), p.alpha * x) / theta;
  return std::min(a, p.lambda);
}

inline double effective_bandwidth_onoff_mmpp(const OnOffContinuousParams& p, double theta) {
  p.validate();
  detail::require_theta(theta);
  const double u = std::expm1(theta) * p.lambda;
  detail::require(std::isfinite(u), "theta", "too large: e^theta overflows");
  return detail::positive_quadratic_root(u - (p.alpha + p.beta), p.alpha * u) / theta;
}

// ---------------------------------------------------------------------------
// n-state model builders
// ---------------------------------------------------------------------------

/// n-1 independent ON/OFF sub-sources, each ON with probability s in every
/// block: state i (1-based) has i-1 active sources and rate (i-1)·lambda.
inline DiscreteMarkovSource build_binomial_discrete_source(int n, double s, double lambda) {
  detail::require(n >= 2, "n", "must be >= 2");
  detail::require(s >= 0.0 && s <= 1.0, "s", "must lie in [0, 1]");
  detail::require(lambda >= 0.0 && std::isfinite(lambda), "lambda", "must be finite and >= 0");
  Vector pi(n);
  Vector rates(n);
  for (int i = 0; i < n; ++i) {
    // C(n-1, i) s^i (1-s)^(n-1-i)
    const double log_binom = std::lgamma(n) - std::lgamma(i + 1.0) - std::lgamma(n - i);
    const double on = i == 0 ? 1.0 : std::pow(s, i);
    const double off = i == n - 1 ? 1.0 : std::pow(1.0 - s, n - 1 - i);
    pi(i) = std::exp(log_binom) * on * off;
    rates(i) = i * lambda;
  }
  pi /= pi.sum();
  Matrix j = Vector::Ones(n) * pi.transpose();
  return DiscreteMarkovSource(std::move(j), std::move(rates));
}

/// Tridiagonal birth-death generator: up-rate alpha, down-rate beta.
inline Matrix birth_death_generator(int n, double alpha, double beta) {
  detail::require(n >= 2, "n", "must be >= 2");
  detail::require(alpha > 0.0 && std::isfinite(alpha), "alpha", "must be finite and > 0");
  detail::require(beta > 0.0 && std::isfinite(beta), "beta", "must be finite and > 0");
  Matrix g = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (i + 1 < n) g(i, i + 1) = alpha;
    if (i > 0) g(i, i - 1) = beta;
    g(i, i) = -g.row(i).sum();
  }
  return g;
}

inline Vector birth_death_rates(int n, double lambda) {
  Vector rates(n);
  for (int i = 0; i < n; ++i) rates(i) = i * lambda;
  return rates;
}

inline FluidMarkovSource build_birth_death_fluid(int n, double alpha, double beta, double lambda) {
  detail::require(lambda >= 0.0 && std::isfinite(lambda), "lambda", "must be finite and >= 0");
  return FluidMarkovSource(birth_death_generator(n, alpha, beta), birth_death_rates(n, lambda));
}

inline MmppSource build_birth_death_mmpp(int n, double alpha, double beta, double lambda) {
  detail::require(lambda >= 0.0 && std::isfinite(lambda), "lambda", "must be finite and >= 0");
  return MmppSource(birth_death_generator(n, alpha, beta), birth_death_rates(n, lambda));
}

/// Truncated-geometric stationary law of the birth-death chain, xi = alpha/beta.
/// xi = 1 is the uniform limit.
inline Vector birth_death_stationary(int n, double xi) {
  detail::require(n >= 2, "n", "must be >= 2");
  detail::require(xi > 0.0 && std::isfinite(xi), "xi", "must be finite and > 0");
  Vector pi(n);
  if (xi == 1.0) return Vector::Constant(n, 1.0 / n);
  // Normalise from the heavier end so large xi does not overflow.
  const double base = xi < 1.0 ? xi : 1.0 / xi;
  for (int i = 0; i < n; ++i) pi(xi < 1.0 ? i : n - 1 - i) = std::pow(base, i);
  return pi / pi.sum();
}

/// Mean rate of the birth-death source with rates (i-1)·lambda.
inline double birth_death_average_rate(int n, double alpha, double beta, double lambda) {
  const double xi = alpha / beta;
  if (xi == 1.0) return 0.5 * (n - 1) * lambda;
  const double xn = std::pow(xi, n);
  return xi * (1.0 - n * std::pow(xi, n - 1) + (n - 1) * xn) / ((1.0 - xi) * (1.0 - xn)) * lambda;
}

// ---------------------------------------------------------------------------
// Source models accepted by the throughput and energy solvers
// ---------------------------------------------------------------------------

/// Constant arrivals at `lambda` bits/block.
struct ConstantRate {
  double lambda = 0.0;
};

/// ON/OFF Markov fluid (lambda = ON rate).
struct FluidOnOff {
  OnOffContinuousParams params;
};

/// ON/OFF MMPP (lambda = ON Poisson intensity).
struct MmppOnOff {
  OnOffContinuousParams params;
};

/// For the n-state alternatives the rate vector doubles as the shape c_i of
/// rates c_i·lambda when a solver searches over lambda.
using SourceModel = std::variant<ConstantRate, OnOffDiscreteParams, FluidOnOff, MmppOnOff,
                                 DiscreteMarkovSource, FluidMarkovSource, MmppSource>;

enum class SourceFamily { constant, discrete, fluid, mmpp };

inline SourceFamily family(const SourceModel& model) {
  switch (model.index()) {
    case 0: return SourceFamily::constant;
    case 1:
    case 4: return SourceFamily::discrete;
    case 2:
    case 5: return SourceFamily::fluid;
    default: return SourceFamily::mmpp;
  }
}

inline std::string_view to_string(SourceFamily f) {
  switch (f) {
    case SourceFamily::constant: return "constant";
    case SourceFamily::discrete: return "discrete";
    case SourceFamily::fluid: return "fluid";
    case SourceFamily::mmpp: return "mmpp";
  }
  return "unknown";
}

inline double average_rate(const SourceModel& model) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantRate>) {
          return s.lambda;
        } else if constexpr (std::is_same_v<T, FluidOnOff> || std::is_same_v<T, MmppOnOff>) {
          return average_rate(s.params);
        } else {
          return average_rate(s);
        }
      },
      model);
}

/// Effective bandwidth of any model; ON/OFF models use their closed forms.
inline double effective_bandwidth(const SourceModel& model, double theta,
                                  const linalg::PerronOptions& options = {}) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantRate>) {
          detail::require_theta(theta);
          return s.lambda;
        } else if constexpr (std::is_same_v<T, OnOffDiscreteParams>) {
          return effective_bandwidth_onoff_discrete(s, theta);
        } else if constexpr (std::is_same_v<T, FluidOnOff>) {
          return effective_bandwidth_onoff_fluid(s.params, theta);
        } else if constexpr (std::is_same_v<T, MmppOnOff>) {
          return effective_bandwidth_onoff_mmpp(s.params, theta);
        } else {
          return effective_bandwidth(MarkovSource(s), theta, options);
        }
      },
      model);
}

}  // namespace qosrate
