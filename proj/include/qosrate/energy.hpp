#pragma once

// Low-SNR energy efficiency: minimum energy per bit and wideband slope of the
// r*(snr) curve, in closed form for constant and ON/OFF sources and from
// numerical derivatives at snr -> 0 for anything the throughput solvers accept.

#include <cmath>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "qosrate/channel.hpp"
#include "qosrate/errors.hpp"
#include "qosrate/sources.hpp"
#include "qosrate/throughput.hpp"

namespace qosrate {

enum class MetricsProvenance { closed_form, numeric };

inline std::string_view to_string(MetricsProvenance p) {
  return p == MetricsProvenance::closed_form ? "closed_form" : "numeric";
}

struct EnergyMetrics {
  double ebn0_min_linear = 0.0;
  double ebn0_min_db = 0.0;
  double wideband_slope = 0.0;  ///< bits/s/Hz per 3 dB
  double theta = 0.0;
  MetricsProvenance provenance = MetricsProvenance::closed_form;
  double rate_derivative = 0.0;         ///< ṙ*(0), bits/block
  double rate_second_derivative = 0.0;  ///< r̈*(0), bits/block
};

struct EbN0CurvePoint {
  double ebn0_db = 0.0;
  double normalized_rate = 0.0;  ///< r*/m, bits/symbol
  double snr = 0.0;              ///< linear
};

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

namespace detail {

inline void require_theta_nonneg(double theta) {
  require(theta >= 0.0 && std::isfinite(theta), "theta", "must be finite and >= 0");
}

/// θ/(e^θ - 1), 1 at θ = 0.
inline double poisson_factor(double theta) {
  return theta == 0.0 ? 1.0 : theta / std::expm1(theta);
}

inline EnergyMetrics metrics_from_derivatives(double rdot, double rddot, int m, double theta,
                                              MetricsProvenance provenance) {
  EnergyMetrics e;
  e.theta = theta;
  e.provenance = provenance;
  e.rate_derivative = rdot;
  e.rate_second_derivative = rddot;
  e.ebn0_min_linear = m / rdot;
  e.ebn0_min_db = to_db(e.ebn0_min_linear);
  e.wideband_slope = -2.0 * (rdot / m) * (rdot / m) / (rddot / m) * kLn2;
  return e;
}

/// Second-order expansion r* ≈ k(C - (θ/2) b C²) of the throughput in the
/// capacity, with b the source burstiness and k the Poisson factor (MMPP only),
/// composed with the low-SNR expansion of the effective capacity.
inline EnergyMetrics metrics_from_burstiness(const ChannelSpec& spec, double theta, double b,
                                             bool mmpp) {
  spec.validate();
  require_theta_nonneg(theta);
  const auto mom = fading_moments(spec);
  const int m = spec.m;
  const double k = mmpp ? poisson_factor(theta) : 1.0;
  EnergyMetrics e;
  e.theta = theta;
  e.provenance = MetricsProvenance::closed_form;
  e.ebn0_min_linear = kLn2 / (mom.mean_z * k);
  e.ebn0_min_db = to_db(e.ebn0_min_linear);
  const double denom = b * (theta * m / kLn2) * mom.mean_z * mom.mean_z +
                       theta / (m * kLn2) * mom.cov_sum + mom.mean_z_sq;
  e.wideband_slope = k * 2.0 * mom.mean_z * mom.mean_z / denom;
  e.rate_derivative = k * m * mom.mean_z / kLn2;
  e.rate_second_derivative = -2.0 * (e.rate_derivative / m) * (e.rate_derivative / m) /
                             e.wideband_slope * kLn2 * m;
  return e;
}

}  // namespace detail

inline EnergyMetrics energy_metrics_constant(const ChannelSpec& spec, double theta) {
  return detail::metrics_from_burstiness(spec, theta, 0.0, false);
}

inline EnergyMetrics energy_metrics_onoff_discrete(const ChannelSpec& spec, double theta,
                                                   double p11, double p22) {
  return detail::metrics_from_burstiness(spec, theta,
                                         burstiness(SourceModel(OnOffDiscreteParams{p11, p22, 1.0})),
                                         false);
}

inline EnergyMetrics energy_metrics_onoff_fluid(const ChannelSpec& spec, double theta,
                                                double alpha, double beta) {
  return detail::metrics_from_burstiness(
      spec, theta, burstiness(SourceModel(FluidOnOff{{alpha, beta, 1.0}})), false);
}

inline EnergyMetrics energy_metrics_onoff_mmpp(const ChannelSpec& spec, double theta,
                                               double alpha, double beta) {
  return detail::metrics_from_burstiness(
      spec, theta, burstiness(SourceModel(MmppOnOff{{alpha, beta, 1.0}})), true);
}

/// Same expansion for an n-state source, with its burstiness from the
/// deviation matrix. Not a published closed form, so it is tagged numeric.
inline EnergyMetrics energy_metrics_series(const SourceModel& model, const ChannelSpec& spec,
                                           double theta) {
  auto e = detail::metrics_from_burstiness(spec, theta, burstiness(model),
                                           family(model) == SourceFamily::mmpp);
  e.provenance = MetricsProvenance::numeric;
  return e;
}

struct NumericEnergyOptions {
  double h = 1e-4;
  double agreement = 0.01;  ///< allowed relative gap between the fits at h and 2h
  CapacityMethod capacity = CapacityMethod::quadrature;
};

/// r*(snr) from deterministic capacity. θ = 0 gives the ergodic capacity.
inline double throughput_at(const SourceModel& model, const ChannelSpec& spec, double snr,
                            double theta, const SolverOptions& solver = {}) {
  if (theta == 0.0) return ergodic_capacity(spec, snr);
  const double ce = effective_capacity_quadrature(spec, snr, theta).value;
  return max_avg_rate(model, theta, ce, solver).r_avg_star;
}

/// ṙ*(0) and r̈*(0) from r*(snr)/snr fitted by a quadratic through snr = h,
/// 2h, 4h; the same fit through 2h, 4h, 8h must agree on the curvature.
inline EnergyMetrics numeric_energy_metrics(const SourceModel& model, const ChannelSpec& spec,
                                            double theta, const NumericEnergyOptions& options = {}) {
  spec.validate();
  detail::require_theta_nonneg(theta);
  detail::require(options.capacity != CapacityMethod::monte_carlo, "capacity_method",
                  "numerical derivatives need noise-free capacity; Monte Carlo is rejected");
  detail::require(options.h > 0.0, "h", "must be > 0");
  SolverOptions solver;
  solver.tight = true;
  const double h = options.h;
  double q[4];
  for (int i = 0; i < 4; ++i) {
    const double s = h * (1 << i);
    q[i] = throughput_at(model, spec, s, theta, solver) / s;
  }
  // r/s = a + b s + c s^2 through (x, q0), (2x, q1), (4x, q2)
  auto fit = [](double x, double q0, double q1, double q2) {
    const double d01 = (q1 - q0) / x;
    const double d12 = (q2 - q1) / (2.0 * x);
    const double c = (d12 - d01) / (3.0 * x);
    const double b = d01 - 3.0 * c * x;
    return std::pair{q0 - b * x - c * x * x, b};
  };
  const auto [a, b] = fit(h, q[0], q[1], q[2]);
  const double b_coarse = fit(2.0 * h, q[1], q[2], q[3]).second;

  if (!(b < 0.0) || std::abs(b_coarse - b) > options.agreement * std::abs(b)) {
    throw Error(ErrorCode::ill_conditioned,
                "low-SNR extrapolation unstable (second-order coefficient " + std::to_string(b) +
                    " vs " + std::to_string(b_coarse) + " at twice the step)");
  }
  return detail::metrics_from_derivatives(a, 2.0 * b, spec.m, theta, MetricsProvenance::numeric);
}

/// Closed form where one exists (constant, ON/OFF), numeric otherwise.
inline EnergyMetrics energy_metrics(const SourceModel& model, const ChannelSpec& spec,
                                    double theta) {
  return std::visit(
      [&](const auto& s) -> EnergyMetrics {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantRate>) {
          return energy_metrics_constant(spec, theta);
        } else if constexpr (std::is_same_v<T, OnOffDiscreteParams>) {
          return energy_metrics_onoff_discrete(spec, theta, s.p11, s.p22);
        } else if constexpr (std::is_same_v<T, FluidOnOff>) {
          return energy_metrics_onoff_fluid(spec, theta, s.params.alpha, s.params.beta);
        } else if constexpr (std::is_same_v<T, MmppOnOff>) {
          return energy_metrics_onoff_mmpp(spec, theta, s.params.alpha, s.params.beta);
        } else {
          return numeric_energy_metrics(SourceModel(s), spec, theta);
        }
      },
      model);
}

/// (E_b/N_0, r*/m) along an ascending snr grid. Points with r* = 0 are dropped;
/// a failing point raises with its snr in the message.
inline std::vector<EbN0CurvePoint> ebn0_curve(const SourceModel& model, const ChannelSpec& spec,
                                              double theta, const std::vector<double>& snr_grid,
                                              const CapacityOptions& capacity = {}) {
  spec.validate();
  detail::require(theta > 0.0 && std::isfinite(theta), "theta", "must be finite and > 0");
  for (std::size_t i = 0; i < snr_grid.size(); ++i) {
    detail::require(snr_grid[i] > 0.0, "snr_grid/" + std::to_string(i), "must be > 0");
    detail::require(i == 0 || snr_grid[i] > snr_grid[i - 1], "snr_grid/" + std::to_string(i),
                    "must be strictly ascending");
  }
  std::vector<EbN0CurvePoint> out;
  for (double snr : snr_grid) {
    try {
      const double ce = effective_capacity(spec, snr, theta, capacity).value;
      const double r = max_avg_rate(model, theta, ce).r_avg_star;
      if (!(r > 0.0)) continue;
      out.push_back({to_db(snr / (r / spec.m)), r / spec.m, snr});
    } catch (const ValidationError&) {
      throw;
    } catch (const Error& e) {
      throw Error(e.code(), "at snr " + std::to_string(snr) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace qosrate
