#pragma once

// Block-fading channel with Gauss-Markov correlation inside each block of m
// symbols: service rates, effective capacity (Monte Carlo, i.i.d. closed form,
// quadrature) and the fading/log-rate moments used by the low-SNR and low-θ
// analyses.

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "qosrate/errors.hpp"
#include "qosrate/linalg.hpp"
#include "qosrate/quadrature.hpp"
#include "qosrate/random.hpp"

namespace qosrate {

enum class FadingDistribution { gauss_markov_rayleigh };

struct ChannelSpec {
  int m = 1;                 ///< symbols per block
  double rho = 0.0;          ///< h_i = rho h_{i-1} + w_i
  double sigma_h_sq = 1.0;   ///< E|h|^2
  FadingDistribution distribution = FadingDistribution::gauss_markov_rayleigh;

  void validate() const {
    detail::require(m >= 1, "m", "must be >= 1");
    detail::require(rho >= 0.0 && rho <= 1.0, "rho", "must lie in [0, 1]");
    detail::require(sigma_h_sq > 0.0 && std::isfinite(sigma_h_sq), "sigma_h_sq",
                    "must be finite and > 0");
  }
};

struct FadingBlock {
  std::vector<double> gains;  ///< z_i = |h_i|^2
};

enum class CapacityMethod { closed_form_iid_rayleigh, monte_carlo, quadrature };

inline std::string_view to_string(CapacityMethod m) {
  switch (m) {
    case CapacityMethod::closed_form_iid_rayleigh: return "closed_form_iid_rayleigh";
    case CapacityMethod::monte_carlo: return "monte_carlo";
    case CapacityMethod::quadrature: return "quadrature";
  }
  return "unknown";
}

struct EffCapEstimate {
  double value = 0.0;      ///< bits/block
  double std_error = 0.0;  ///< bits/block, 0 for deterministic methods
  CapacityMethod method = CapacityMethod::quadrature;
  std::uint64_t n_samples = 0;
  double theta = 0.0;
  double snr = 0.0;
};

namespace detail {

inline constexpr double kLn2 = boost::math::constants::ln_two<double>();

inline void require_snr(double snr) {
  require(snr > 0.0 && std::isfinite(snr), "snr", "must be finite and > 0");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sampling and service
// ---------------------------------------------------------------------------

/// One block of power gains. Each coefficient is circularly-symmetric complex
/// Gaussian: two independent real parts of variance sigma^2/2.
inline FadingBlock sample_fading_block(const ChannelSpec& spec, Rng& rng) {
  const double half = 0.5 * spec.sigma_h_sq;
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sd_first = std::sqrt(half);
  const double sd_innov = std::sqrt(half * (1.0 - spec.rho * spec.rho));

  FadingBlock block;
  block.gains.resize(spec.m);
  std::complex<double> h(sd_first * gauss(rng), sd_first * gauss(rng));
  block.gains[0] = std::norm(h);
  for (int i = 1; i < spec.m; ++i) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    h = spec.rho * h + std::complex<double>(sd_innov * re, sd_innov * im);
    block.gains[i] = std::norm(h);
  }
  return block;
}

/// Σ log2(1 + snr z_i), bits/block.
inline double service_rate(const FadingBlock& block, double snr) {
  double bits = 0.0;
  for (double z : block.gains) bits += std::log1p(snr * z);
  return bits / detail::kLn2;
}

// ---------------------------------------------------------------------------
// Monte Carlo effective capacity
// ---------------------------------------------------------------------------

namespace detail {

/// Running log-sum-exp of y_k together with Σ e^{2(y_k - shift)}.
struct LogSumExp {
  double shift = -std::numeric_limits<double>::infinity();
  double sum = 0.0;     // Σ e^{y - shift}
  double sum_sq = 0.0;  // Σ e^{2(y - shift)}
  std::uint64_t count = 0;

  void add(double y) {
    if (y > shift) {
      const double r = std::exp(shift - y);
      sum = sum * r + 1.0;
      sum_sq = sum_sq * r * r + 1.0;
      shift = y;
    } else {
      const double e = std::exp(y - shift);
      sum += e;
      sum_sq += e * e;
    }
    ++count;
  }

  void merge(const LogSumExp& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    if (o.shift > shift) {
      const double r = std::exp(shift - o.shift);
      sum = sum * r + o.sum;
      sum_sq = sum_sq * r * r + o.sum_sq;
      shift = o.shift;
    } else {
      const double r = std::exp(o.shift - shift);
      sum += o.sum * r;
      sum_sq += o.sum_sq * r * r;
    }
    count += o.count;
  }
};

}  // namespace detail

/// -(1/θ) log of the sample mean of e^{-θν} over independent blocks. The
/// standard error follows from the delta method on the sample variance.
inline EffCapEstimate effective_capacity_mc(const ChannelSpec& spec, double snr, double theta,
                                            std::uint64_t n_samples, std::uint64_t seed,
                                            unsigned workers = 1) {
  spec.validate();
  detail::require_snr(snr);
  detail::require(theta > 0.0 && std::isfinite(theta), "theta", "must be finite and > 0");
  detail::require(n_samples >= 1, "n_samples", "must be >= 1");

  auto chunks = run_chunked<detail::LogSumExp>(
      n_samples, seed, workers, [&](Rng& rng, std::uint64_t begin, std::uint64_t end) {
        detail::LogSumExp acc;
        for (std::uint64_t k = begin; k < end; ++k) {
          acc.add(-theta * service_rate(sample_fading_block(spec, rng), snr));
        }
        return acc;
      });
  detail::LogSumExp total;
  for (const auto& c : chunks) total.merge(c);

  const double n = static_cast<double>(total.count);
  const double mean_scaled = total.sum / n;
  if (!(mean_scaled > 0.0) || !std::isfinite(total.shift)) {
    throw Error(ErrorCode::degenerate_estimate, "sample mean of exp(-theta*nu) underflowed");
  }
  EffCapEstimate est;
  est.value = -(total.shift + std::log(mean_scaled)) / theta;
  const double rel_var = std::max(0.0, (total.sum_sq / n) / (mean_scaled * mean_scaled) - 1.0);
  est.std_error = n > 1 ? std::sqrt(rel_var * n / (n - 1.0)) / std::sqrt(n) / theta : 0.0;
  est.method = CapacityMethod::monte_carlo;
  est.n_samples = n_samples;
  est.theta = theta;
  est.snr = snr;
  return est;
}

// ---------------------------------------------------------------------------
// Deterministic effective capacity
// ---------------------------------------------------------------------------

namespace detail {

/// log E[(1 + gain·u)^{-k}] for u ~ Exp(1). Near 1 the expectation is
/// integrated as 1 + E[expm1(...)] so small θ keeps full relative accuracy.
inline double log_power_moment(double gain, double k, double rel_tol = 1e-10) {
  auto direct = quadrature::expect_exponential(
      [&](double u) { return std::exp(-k * std::log1p(gain * u)); }, 1.0 / gain, rel_tol);
  if (direct.value < 0.5) {
    if (!(direct.value > 0.0)) {
      throw Error(ErrorCode::quadrature_failure, "E[(1 + snr z)^-k] underflowed");
    }
    return std::log(direct.value);
  }
  auto shifted = quadrature::expect_exponential(
      [&](double u) { return std::expm1(-k * std::log1p(gain * u)); }, 1.0 / gain, rel_tol);
  return std::log1p(shifted.value);
}

inline EffCapEstimate deterministic_estimate(double value, CapacityMethod method, double theta,
                                             double snr) {
  EffCapEstimate est;
  est.value = std::max(value, 0.0);
  est.method = method;
  est.theta = theta;
  est.snr = snr;
  return est;
}

}  // namespace detail

/// I.i.d. Rayleigh blocks with unit-mean gains. The scaled upper incomplete
/// gamma snr^{-t} e^{1/snr} Γ(1-t, 1/snr), t = θ/ln2, equals E[(1+snr z)^{-t}]
/// and is integrated in that form, which is valid for every sign of 1 - t.
inline EffCapEstimate effective_capacity_rayleigh_iid(double snr, double theta, int m) {
  detail::require_snr(snr);
  detail::require(theta > 0.0 && std::isfinite(theta), "theta", "must be finite and > 0");
  detail::require(m >= 1, "m", "must be >= 1");
  const double t = theta / detail::kLn2;
  const double value = -(m / theta) * detail::log_power_moment(snr, t);
  return detail::deterministic_estimate(value, CapacityMethod::closed_form_iid_rayleigh, theta,
                                        snr);
}

namespace detail {

/// I0(x) e^{-x}.
inline double bessel_i0e(double x) {
  if (x <= 700.0) return boost::math::cyl_bessel_i(0, x) * std::exp(-x);
  const double inv = 1.0 / (8.0 * x);
  const double series = 1.0 + inv * (1.0 + 4.5 * inv * (1.0 + 25.0 / 3.0 * inv));
  return series / std::sqrt(2.0 * boost::math::constants::pi<double>() * x);
}

/// Nyström discretisation of the power-gain chain u_i = |h_i|^2/σ^2. Given u,
/// u' has density (1/s) e^{-(u'+ρ²u)/s} I0(2ρ√(uu')/s), s = 1-ρ². Nodes sit on
/// composite Gauss-Legendre panels in the amplitude r = √u: geometric panels
/// resolve the rate's bend near u ~ 1/gain, uniform panels of width ~√s
/// resolve the kernel. Rows are normalised to sum to one; the chain is then
/// reversible with respect to `stationary`.
struct GaussMarkovGrid {
  Vector nodes;  ///< u
  Vector stationary;
  Matrix transfer;
};

inline std::vector<double> amplitude_breakpoints(double rho, double gain) {
  constexpr double kRMax = 7.0;  // e^{-49} of the stationary mass lies beyond
  const double width = std::clamp(std::sqrt(1.0 - rho * rho), 0.1, 0.5);
  const double feature = std::min(1.0, 1.0 / std::sqrt(gain));
  std::vector<double> points{0.0};
  for (double r = feature / 64.0; r < 1.0; r *= 2.0) points.push_back(r);
  for (double r = 1.0; r < kRMax + 0.5 * width; r += width) points.push_back(std::min(r, kRMax));
  std::vector<double> out{0.0};
  for (std::size_t i = 1; i < points.size(); ++i) {
    const int split = static_cast<int>(std::ceil((points[i] - points[i - 1]) / width - 1e-9));
    for (int k = 1; k <= split; ++k) {
      out.push_back(points[i - 1] + (points[i] - points[i - 1]) * k / split);
    }
  }
  return out;
}

template <int N>
GaussMarkovGrid gauss_markov_grid(double rho, double gain) {
  const auto breaks = amplitude_breakpoints(rho, gain);
  const auto rule = quadrature::gauss_legendre<N>();
  const Eigen::Index n = static_cast<Eigen::Index>((breaks.size() - 1) * N);
  Vector r(n);
  Vector measure(n);  // du weights
  for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
    const double half = 0.5 * (breaks[p + 1] - breaks[p]);
    const double mid = 0.5 * (breaks[p + 1] + breaks[p]);
    for (int k = 0; k < N; ++k) {
      const Eigen::Index j = static_cast<Eigen::Index>(p * N + k);
      r(j) = mid + half * rule.nodes[k];
      measure(j) = half * rule.weights[k] * 2.0 * r(j);
    }
  }
  const double s = 1.0 - rho * rho;
  GaussMarkovGrid grid;
  grid.nodes = r.cwiseProduct(r);
  grid.transfer = Matrix::Zero(n, n);
  Vector stationary(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = r(j) - rho * r(i);
      const double e = d * d / s;
      if (e > 745.0) continue;
      // e^{-(u'+ρ²u)/s} I0(x) = e^{-(r'-ρr)²/s} I0(x) e^{-x}
      const double k = measure(j) * std::exp(-e) * bessel_i0e(2.0 * rho * r(i) * r(j) / s) / s;
      grid.transfer(i, j) = k;
      row += k;
    }
    if (row > 0.0) {
      grid.transfer.row(i) /= row;
    } else {
      grid.transfer(i, i) = 1.0;
      row = 1.0;
    }
    stationary(i) = measure(i) * std::exp(-grid.nodes(i)) * row;
  }
  grid.stationary = stationary / stationary.sum();
  return grid;
}

/// log E[Π_{i=1}^m g(u_i)] on the grid, with g = 1 + d evaluated as d.
template <class Shift>
double log_block_product(const GaussMarkovGrid& grid, int m, Shift&& d_of_u) {
  const Eigen::Index n = grid.nodes.size();
  Vector d(n);
  for (Eigen::Index j = 0; j < n; ++j) d(j) = d_of_u(grid.nodes(j));

  // e_k = f_k - 1 with f_k = g ⊙ A f_{k+1}; rows of A sum to 1.
  Vector e = d;
  for (int k = 1; k < m; ++k) {
    const Vector ae = grid.transfer * e;
    e = d + ae + d.cwiseProduct(ae);
  }
  const double shifted = grid.stationary.dot(e);
  if (shifted > -0.5) return std::log1p(shifted);

  // Far from 1: iterate the product itself, renormalising to avoid underflow.
  const Vector g = (d.array() + 1.0).matrix();
  Vector f = g;
  double log_scale = 0.0;
  for (int k = 1; k < m; ++k) {
    f = g.cwiseProduct(grid.transfer * f);
    const double top = f.maxCoeff();
    if (!(top > 0.0)) throw Error(ErrorCode::quadrature_failure, "block product underflowed");
    f /= top;
    log_scale += std::log(top);
  }
  return log_scale + std::log(grid.stationary.dot(f));
}

inline constexpr int kGridCoarse = 10;
inline constexpr int kGridFine = 20;

inline void require_grid_agreement(double coarse, double fine, double rel_tol,
                                   std::string_view what) {
  if (std::abs(fine - coarse) > rel_tol * std::max(std::abs(fine), 1e-300)) {
    throw Error(ErrorCode::quadrature_failure,
                std::string(what) + ": transfer-operator grids disagree (" +
                    std::to_string(coarse) + " vs " + std::to_string(fine) +
                    "); correlation too close to 1 for this discretisation");
  }
}

}  // namespace detail

/// Deterministic effective capacity for any ρ: closed form at ρ = 0, a single
/// exponential integral at ρ = 1, a Gauss-Laguerre transfer operator between.
inline EffCapEstimate effective_capacity_quadrature(const ChannelSpec& spec, double snr,
                                                    double theta, double rel_tol = 1e-9) {
  spec.validate();
  detail::require_snr(snr);
  detail::require(theta > 0.0 && std::isfinite(theta), "theta", "must be finite and > 0");
  const double gain = snr * spec.sigma_h_sq;
  const double t = theta / detail::kLn2;
  double value = 0.0;
  if (spec.rho == 0.0 || spec.m == 1) {
    value = -(spec.m / theta) * detail::log_power_moment(gain, t);
  } else if (spec.rho == 1.0) {
    value = -(1.0 / theta) * detail::log_power_moment(gain, spec.m * t);
  } else {
    auto shift = [&](double u) { return std::expm1(-t * std::log1p(gain * u)); };
    const double coarse = detail::log_block_product(
        detail::gauss_markov_grid<detail::kGridCoarse>(spec.rho, gain), spec.m, shift);
    const double fine = detail::log_block_product(
        detail::gauss_markov_grid<detail::kGridFine>(spec.rho, gain), spec.m, shift);
    detail::require_grid_agreement(coarse, fine, rel_tol, "effective capacity");
    value = -fine / theta;
  }
  return detail::deterministic_estimate(value, CapacityMethod::quadrature, theta, snr);
}

struct CapacityOptions {
  CapacityMethod method = CapacityMethod::quadrature;
  std::uint64_t n_samples = 1000000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

inline EffCapEstimate effective_capacity(const ChannelSpec& spec, double snr, double theta,
                                         const CapacityOptions& options = {}) {
  switch (options.method) {
    case CapacityMethod::closed_form_iid_rayleigh: {
      spec.validate();
      detail::require(spec.rho == 0.0 || spec.m == 1, "rho",
                      "the i.i.d. closed form needs rho = 0");
      return effective_capacity_rayleigh_iid(snr * spec.sigma_h_sq, theta, spec.m);
    }
    case CapacityMethod::monte_carlo:
      return effective_capacity_mc(spec, snr, theta, options.n_samples, options.seed,
                                   options.workers);
    case CapacityMethod::quadrature:
      break;
  }
  return effective_capacity_quadrature(spec, snr, theta);
}

// ---------------------------------------------------------------------------
// Ergodic capacity and moments
// ---------------------------------------------------------------------------

/// m·E{log2(1 + snr z)}; only the exponential marginal matters.
inline double ergodic_capacity(const ChannelSpec& spec, double snr) {
  spec.validate();
  detail::require_snr(snr);
  const double gain = snr * spec.sigma_h_sq;
  const auto r = quadrature::expect_exponential(
      [&](double u) { return std::log1p(gain * u); }, 1.0 / gain, 1e-10);
  return spec.m * r.value / detail::kLn2;
}

struct FadingMoments {
  double mean_z = 0.0;
  double mean_z_sq = 0.0;
  double cov_sum = 0.0;  ///< Σ_{i,j} cov{z_i, z_j}
};

/// Σ_{i,j=1}^m r^{|i-j|}.
inline double geometric_lag_sum(int m, double r) {
  if (std::abs(1.0 - r) < 1e-3) {
    double sum = m;
    double p = 1.0;
    for (int k = 1; k < m; ++k) {
      p *= r;
      sum += 2.0 * (m - k) * p;
    }
    return sum;
  }
  const double omr = 1.0 - r;
  return m + 2.0 * r * (m * omr - (1.0 - std::pow(r, m))) / (omr * omr);
}

inline FadingMoments fading_moments(const ChannelSpec& spec) {
  spec.validate();
  const double s2 = spec.sigma_h_sq * spec.sigma_h_sq;
  // cov{|h_i|^2, |h_j|^2} = |E h_i h_j^*|^2 = σ^4 ρ^{2|i-j|}
  return {spec.sigma_h_sq, 2.0 * s2, s2 * geometric_lag_sum(spec.m, spec.rho * spec.rho)};
}

/// Moments of the per-symbol rate L_i = log2(1 + snr z_i).
struct LogRateMoments {
  double mean = 0.0;     ///< E{L}, per symbol
  double cov_sum = 0.0;  ///< Σ_{i,j} cov{L_i, L_j}
  double std_error = 0.0;
  CapacityMethod method = CapacityMethod::quadrature;
};

inline LogRateMoments log_rate_moments_mc(const ChannelSpec& spec, double snr,
                                          std::uint64_t n_blocks, std::uint64_t seed,
                                          unsigned workers = 1) {
  spec.validate();
  detail::require_snr(snr);
  detail::require(n_blocks >= 2, "n_blocks", "must be >= 2");
  struct Acc {
    double sum = 0.0, sum_sq = 0.0;
  };
  // Var(Σ L_i) = Σ_{i,j} cov{L_i, L_j}
  auto chunks = run_chunked<Acc>(n_blocks, seed, workers,
                                 [&](Rng& rng, std::uint64_t begin, std::uint64_t end) {
                                   Acc a;
                                   for (std::uint64_t k = begin; k < end; ++k) {
                                     const double v =
                                         service_rate(sample_fading_block(spec, rng), snr);
                                     a.sum += v;
                                     a.sum_sq += v * v;
                                   }
                                   return a;
                                 });
  Acc total;
  for (const auto& c : chunks) {
    total.sum += c.sum;
    total.sum_sq += c.sum_sq;
  }
  const double n = static_cast<double>(n_blocks);
  const double mean_block = total.sum / n;
  const double var = (total.sum_sq - n * mean_block * mean_block) / (n - 1.0);
  LogRateMoments out;
  out.mean = mean_block / spec.m;
  out.cov_sum = var;
  out.std_error = var * std::sqrt(2.0 / (n - 1.0));  // normal-theory approximation
  out.method = CapacityMethod::monte_carlo;
  return out;
}

inline LogRateMoments log_rate_moments(const ChannelSpec& spec, double snr,
                                       double rel_tol = 1e-8) {
  spec.validate();
  detail::require_snr(snr);
  const double gain = snr * spec.sigma_h_sq;
  auto rate = [&](double u) { return std::log1p(gain * u) / detail::kLn2; };
  LogRateMoments out;
  out.mean = quadrature::expect_exponential(rate, 1.0 / gain, 1e-10).value;
  const double var =
      quadrature::expect_exponential(
          [&](double u) {
            const double c = rate(u) - out.mean;
            return c * c;
          },
          1.0 / gain, 1e-10)
          .value;
  const int m = spec.m;
  if (spec.rho == 0.0 || m == 1) {
    out.cov_sum = m * var;
    return out;
  }
  if (spec.rho == 1.0) {
    out.cov_sum = static_cast<double>(m) * m * var;
    return out;
  }

  auto lag_sum = [&](const detail::GaussMarkovGrid& grid) {
    Vector l(grid.nodes.size());
    for (Eigen::Index j = 0; j < l.size(); ++j) l(j) = rate(grid.nodes(j));
    l.array() -= grid.stationary.dot(l);
    double sum = 0.0;
    Vector v = l;
    for (int k = 1; k < m; ++k) {
      v = grid.transfer * v;
      sum += 2.0 * (m - k) * grid.stationary.dot(l.cwiseProduct(v));
    }
    return sum;
  };
  const double coarse = lag_sum(detail::gauss_markov_grid<detail::kGridCoarse>(spec.rho, gain));
  const double fine = lag_sum(detail::gauss_markov_grid<detail::kGridFine>(spec.rho, gain));
  detail::require_grid_agreement(m * var + coarse, m * var + fine, rel_tol, "log-rate covariance");
  out.cov_sum = m * var + fine;
  return out;
}

}  // namespace qosrate
