#pragma once

// Maximum average arrival rate r* supported at effective capacity C_E: the
// source's effective bandwidth at θ must equal C_E. Closed forms for ON/OFF
// sources, bisection over the rate scale for n-state sources, and the low-θ
// and high-SNR asymptotics.

#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include "qosrate/channel.hpp"
#include "qosrate/errors.hpp"
#include "qosrate/sources.hpp"

namespace qosrate {

enum class SolveMethod { closed_form, root_find };

inline std::string_view to_string(SolveMethod m) {
  return m == SolveMethod::closed_form ? "closed_form" : "root_find";
}

struct ThroughputResult {
  double r_avg_star = 0.0;          ///< bits/block
  double lambda_star = 0.0;         ///< per-state rate scale achieving it
  double theta = 0.0;
  double effective_capacity = 0.0;  ///< the C_E that was matched
  SolveMethod method = SolveMethod::closed_form;
  int iterations = 0;
  double residual = 0.0;            ///< a*(θ; λ*) - C_E (root_find only)
};

struct SolverOptions {
  double lambda_tol = 1e-12;    ///< absolute bracket width on λ
  double residual_tol = 1e-9;   ///< |a* - C_E| / max(1, C_E)
  bool tight = false;           ///< bisect until the bracket cannot shrink
  linalg::PerronOptions perron = {};
};

namespace detail {

inline void require_capacity(double ce, double theta) {
  require(theta > 0.0 && std::isfinite(theta), "theta", "must be finite and > 0");
  require(ce >= 0.0 && std::isfinite(ce), "ce", "effective capacity must be finite and >= 0");
}

inline ThroughputResult closed_result(double p_on, double lambda, double theta, double ce) {
  ThroughputResult r;
  r.lambda_star = lambda;
  r.r_avg_star = p_on * lambda;
  r.theta = theta;
  r.effective_capacity = ce;
  return r;
}

}  // namespace detail

/// ON/OFF discrete source. λ* = C + (1/θ) log[(1 - p11 q)/(p22 + c q)] with
/// q = e^{-θC} and c = 1 - p11 - p22, written with expm1/log1p.
inline ThroughputResult max_avg_rate_onoff_discrete(double ce, double theta, double p11,
                                                    double p22) {
  const OnOffDiscreteParams p{p11, p22, 0.0};
  p.validate();
  detail::require_capacity(ce, theta);
  switch (classify(p)) {
    case ChainStatus::absorbing_on: return detail::closed_result(1.0, ce, theta, ce);
    case ChainStatus::absorbing_off:
      throw Error(ErrorCode::invalid_regime,
                  "p11 = 1: the source is eventually always OFF, so no rate is maximal");
    case ChainStatus::regular: break;
  }
  if (ce == 0.0) return detail::closed_result(p.p_on(), 0.0, theta, ce);
  const double em = std::expm1(-theta * ce);  // q - 1, in (-1, 0]
  const double c = 1.0 - p11 - p22;
  const double num = -p11 * em / (1.0 - p11);
  const double den = c * em / (1.0 - p11);
  if (!(den > -1.0) || !std::isfinite(num)) {
    throw Error(ErrorCode::invalid_regime, "log argument is not positive");
  }
  const double lambda = ce + (std::log1p(num) - std::log1p(den)) / theta;
  return detail::closed_result(p.p_on(), lambda, theta, ce);
}

/// ON/OFF Markov fluid: λ* = (θC + α + β)/(θC + α) · C.
inline ThroughputResult max_avg_rate_onoff_fluid(double ce, double theta, double alpha,
                                                 double beta) {
  const OnOffContinuousParams p{alpha, beta, 0.0};
  p.validate();
  detail::require_capacity(ce, theta);
  const double x = theta * ce;
  const double lambda = (1.0 + beta / (x + alpha)) * ce;
  return detail::closed_result(p.p_on(), lambda, theta, ce);
}

/// ON/OFF MMPP: the fluid λ* scaled by θ/(e^θ - 1).
inline ThroughputResult max_avg_rate_onoff_mmpp(double ce, double theta, double alpha,
                                                double beta) {
  auto r = max_avg_rate_onoff_fluid(ce, theta, alpha, beta);
  const double scale = theta / std::expm1(theta);
  r.lambda_star *= scale;
  r.r_avg_star *= scale;
  return r;
}

namespace detail {

template <class Source>
ThroughputResult bisect_rate_scale(const Source& src, double theta, double ce,
                                   const SolverOptions& options) {
  require_capacity(ce, theta);
  const Vector shape = src.rates();
  const double mean_shape = average_rate(src);
  ThroughputResult r;
  r.theta = theta;
  r.effective_capacity = ce;
  r.method = SolveMethod::root_find;
  if (ce == 0.0) return r;
  if (!(shape.maxCoeff() > 0.0)) {
    throw Error(ErrorCode::bracket_failure, "all shape coefficients are zero");
  }

  auto ebw = [&](double lambda) {
    return effective_bandwidth(MarkovSource(src.with_rates(shape * lambda)), theta,
                               options.perron);
  };

  double lo = 0.0;
  double hi = ce;
  double a_hi = ebw(hi);
  while (a_hi < ce) {
    lo = hi;
    hi *= 2.0;
    if (hi > std::ldexp(1.0, 60)) {
      throw Error(ErrorCode::bracket_failure,
                  "effective bandwidth never reached C_E = " + std::to_string(ce));
    }
    a_hi = ebw(hi);
    ++r.iterations;
  }

  const double res_tol = options.residual_tol * std::max(1.0, ce);
  double mid = hi;
  double a_mid = a_hi;
  while (true) {
    mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    a_mid = ebw(mid);
    ++r.iterations;
    if (a_mid < ce) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (!options.tight && (hi - lo <= options.lambda_tol || std::abs(a_mid - ce) <= res_tol)) {
      break;
    }
    if (r.iterations > 4000) break;
  }
  r.lambda_star = options.tight ? 0.5 * (lo + hi) : mid;
  r.residual = (options.tight ? ebw(r.lambda_star) : a_mid) - ce;
  r.r_avg_star = mean_shape * r.lambda_star;
  return r;
}

}  // namespace detail

/// n-state source whose rates are shape·λ; `src.rates()` is the shape.
inline ThroughputResult max_avg_rate_nstate(const MarkovSource& src, double theta, double ce,
                                            const SolverOptions& options = {}) {
  return std::visit([&](const auto& s) { return detail::bisect_rate_scale(s, theta, ce, options); },
                    src);
}

inline ThroughputResult max_avg_rate(const SourceModel& model, double theta, double ce,
                                     const SolverOptions& options = {}) {
  return std::visit(
      [&](const auto& s) -> ThroughputResult {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantRate>) {
          detail::require_capacity(ce, theta);
          return detail::closed_result(1.0, ce, theta, ce);
        } else if constexpr (std::is_same_v<T, OnOffDiscreteParams>) {
          return max_avg_rate_onoff_discrete(ce, theta, s.p11, s.p22);
        } else if constexpr (std::is_same_v<T, FluidOnOff>) {
          return max_avg_rate_onoff_fluid(ce, theta, s.params.alpha, s.params.beta);
        } else if constexpr (std::is_same_v<T, MmppOnOff>) {
          return max_avg_rate_onoff_mmpp(ce, theta, s.params.alpha, s.params.beta);
        } else {
          return detail::bisect_rate_scale(s, theta, ce, options);
        }
      },
      model);
}

/// The source with its rate scale set to λ (ON/OFF: the ON rate).
inline SourceModel with_rate_scale(const SourceModel& model, double lambda) {
  return std::visit(
      [&](const auto& s) -> SourceModel {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantRate>) {
          return ConstantRate{lambda};
        } else if constexpr (std::is_same_v<T, OnOffDiscreteParams>) {
          return OnOffDiscreteParams{s.p11, s.p22, lambda};
        } else if constexpr (std::is_same_v<T, FluidOnOff>) {
          return FluidOnOff{{s.params.alpha, s.params.beta, lambda}};
        } else if constexpr (std::is_same_v<T, MmppOnOff>) {
          return MmppOnOff{{s.params.alpha, s.params.beta, lambda}};
        } else {
          return s.with_rates(s.rates() * lambda);
        }
      },
      model);
}

// ---------------------------------------------------------------------------
// Burstiness and asymptotics
// ---------------------------------------------------------------------------

/// Asymptotic variance rate of the arrivals divided by the squared mean rate,
/// for rates shape·λ (independent of λ). Equals η for the ON/OFF discrete chain
/// and ζ for the ON/OFF fluid and MMPP modulating chain; the MMPP's own
/// Poisson variance is not included.
inline double burstiness(const SourceModel& model) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantRate>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, OnOffDiscreteParams>) {
          s.validate();
          if (classify(s) == ChainStatus::absorbing_on) return 0.0;
          detail::require(classify(s) == ChainStatus::regular, "p11", "must be < 1");
          return (1.0 - s.p22) * (s.p11 + s.p22) / ((1.0 - s.p11) * (2.0 - s.p11 - s.p22));
        } else if constexpr (std::is_same_v<T, FluidOnOff> || std::is_same_v<T, MmppOnOff>) {
          s.params.validate();
          return 2.0 * s.params.beta / (s.params.alpha * (s.params.alpha + s.params.beta));
        } else {
          // 2<c̄, D c̄>_π - <c̄, c̄>_π (discrete) or 2<c̄, D c̄>_π (continuous), with
          // D the deviation matrix (Π - M)^{-1} - Π of M = J - I or M = G.
          const auto& core = s.core();
          const Eigen::Index n = core.matrix.rows();
          const Vector& pi = core.stationary;
          const double mean = pi.dot(core.rates);
          detail::require(mean > 0.0, "rates", "mean rate must be > 0");
          const Vector centred = (core.rates.array() - mean).matrix();
          Matrix m = core.matrix;
          constexpr bool discrete = std::is_same_v<T, DiscreteMarkovSource>;
          if constexpr (discrete) m -= Matrix::Identity(n, n);
          const Matrix pi_rows = Vector::Ones(n) * pi.transpose();
          const Vector dc = (pi_rows - m).partialPivLu().solve(centred) - pi_rows * centred;
          double v = 2.0 * centred.dot(pi.cwiseProduct(dc));
          if constexpr (discrete) v -= centred.dot(pi.cwiseProduct(centred));
          return v / (mean * mean);
        }
      },
      model);
}

struct AsymptoticSlopes {
  double low_theta_limit = 0.0;       ///< ergodic capacity, bits/block
  double low_theta_derivative = 0.0;  ///< ∂r*/∂θ at θ = 0
  double high_snr_slope = 1.0;        ///< S_∞ at the requested θ
};

namespace detail {

inline constexpr double kLog2e = 1.0 / kLn2;

}  // namespace detail

/// High-SNR slope of (1/m) r* against log2 snr for i.i.d. Rayleigh fading.
inline double high_snr_slope(SourceFamily kind, double theta, double p_on) {
  detail::require(theta >= 0.0 && std::isfinite(theta), "theta", "must be finite and >= 0");
  detail::require(p_on >= 0.0 && p_on <= 1.0, "p_on", "must lie in [0, 1]");
  if (theta == 0.0) return 1.0;
  const double boundary = 1.0 / detail::kLog2e;
  const bool high = theta > boundary;
  if (kind == SourceFamily::mmpp) {
    return high ? p_on / (std::expm1(theta) * detail::kLog2e) : theta * p_on / std::expm1(theta);
  }
  if (kind == SourceFamily::constant) p_on = 1.0;
  return high ? p_on / (theta * detail::kLog2e) : p_on;
}

/// Mean rate over peak rate; P_on for ON/OFF sources. This is the p_on that
/// enters the high-SNR slope, because λ* eventually grows with the peak state.
inline double mean_to_peak(const SourceModel& model) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantRate>) {
          return 1.0;
        } else if constexpr (std::is_same_v<T, OnOffDiscreteParams>) {
          s.validate();
          if (classify(s) == ChainStatus::absorbing_on) return 1.0;
          return s.p_on();
        } else if constexpr (std::is_same_v<T, FluidOnOff> || std::is_same_v<T, MmppOnOff>) {
          s.params.validate();
          return s.params.p_on();
        } else {
          const double peak = s.core().recurrent_rates().maxCoeff();
          detail::require(peak > 0.0, "rates", "all shape coefficients are zero");
          return average_rate(s) / peak;
        }
      },
      model);
}

/// θ → 0 behaviour of r*: its limit (ergodic capacity) and slope
/// -½Σcov{L_i, L_j} - (b/2) C², plus -½C for MMPP, with L_i the per-symbol
/// rate, C the ergodic capacity and b the source burstiness. `theta` only
/// selects the reported high-SNR slope.
inline AsymptoticSlopes asymptotic_slopes(const SourceModel& model, const ChannelSpec& spec,
                                          double snr, double theta = 0.0) {
  const auto moments = log_rate_moments(spec, snr);
  const double ergodic = spec.m * moments.mean;
  AsymptoticSlopes out;
  out.low_theta_limit = ergodic;
  out.low_theta_derivative = -0.5 * moments.cov_sum - 0.5 * burstiness(model) * ergodic * ergodic;
  if (family(model) == SourceFamily::mmpp) out.low_theta_derivative -= 0.5 * ergodic;
  out.high_snr_slope = high_snr_slope(family(model), theta, mean_to_peak(model));
  return out;
}

inline AsymptoticSlopes low_theta_asymptotics(const SourceModel& model, const ChannelSpec& spec,
                                              double snr) {
  return asymptotic_slopes(model, spec, snr, 0.0);
}

}  // namespace qosrate
