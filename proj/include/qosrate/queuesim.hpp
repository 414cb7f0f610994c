#pragma once

// Monte Carlo queue fed by a Markov source and drained by the block-fading
// channel. Measures the overflow and FIFO delay tails and fits their
// exponential decay rates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <random>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "qosrate/channel.hpp"
#include "qosrate/errors.hpp"
#include "qosrate/random.hpp"
#include "qosrate/sources.hpp"

namespace qosrate {

inline double lindley_step(double q, double arrivals, double service) {
  return std::max(q + arrivals - service, 0.0);
}

/// Queue lengths after each block, starting from q0.
inline std::vector<double> lindley_trace(const std::vector<double>& arrivals,
                                         const std::vector<double>& services, double q0 = 0.0) {
  detail::require(arrivals.size() == services.size(), "services",
                  "must have one entry per arrival");
  std::vector<double> out;
  out.reserve(arrivals.size());
  double q = q0;
  for (std::size_t k = 0; k < arrivals.size(); ++k) {
    q = lindley_step(q, arrivals[k], services[k]);
    out.push_back(q);
  }
  return out;
}

struct TailPoint {
  double threshold = 0.0;
  double probability = 0.0;
  std::uint64_t count = 0;  ///< events behind the estimate
};

struct DecayFit {
  double slope = 0.0;  ///< decay rate: minus the regression slope
  double intercept = 0.0;
  double r_squared = 0.0;
  int n_used = 0;
};

inline constexpr std::uint64_t kMinTailEvents = 100;

/// Least squares of log p on threshold over points with p > 0 and at least
/// kMinTailEvents events.
inline DecayFit fit_decay_slope(const std::vector<TailPoint>& points) {
  std::vector<std::pair<double, double>> xy;
  for (const auto& p : points) {
    if (p.probability > 0.0 && p.count >= kMinTailEvents) {
      xy.emplace_back(p.threshold, std::log(p.probability));
    }
  }
  if (xy.size() < 4) {
    throw Error(ErrorCode::insufficient_tail,
                "need at least 4 tail points with >= 100 events, have " +
                    std::to_string(xy.size()));
  }
  const double n = static_cast<double>(xy.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : xy) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& [x, y] : xy) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  detail::require(sxx > 0.0, "points", "thresholds must not all be equal");
  DecayFit fit;
  const double beta = sxy / sxx;
  fit.slope = -beta;
  fit.intercept = my - beta * mx;
  const double ss_res = std::max(0.0, syy - beta * sxy);
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 0.0;
  fit.n_used = static_cast<int>(xy.size());
  return fit;
}

/// Points without event counts are taken as exact.
inline DecayFit fit_decay_slope(const std::vector<std::pair<double, double>>& points) {
  std::vector<TailPoint> tp;
  tp.reserve(points.size());
  for (const auto& [q, p] : points) {
    tp.push_back({q, p, std::numeric_limits<std::uint64_t>::max()});
  }
  return fit_decay_slope(tp);
}

struct SimConfig {
  SourceModel source = ConstantRate{0.0};  ///< rates already scaled (e.g. by λ*)
  ChannelSpec channel;
  double snr = 1.0;
  std::uint64_t n_blocks = 1000000;
  std::uint64_t seed = 0;
  std::vector<double> q_thresholds;  ///< bits; empty selects them from the data
  std::vector<double> d_thresholds;  ///< blocks; empty selects them from the data

  void validate() const {
    channel.validate();
    detail::require(snr > 0.0 && std::isfinite(snr), "snr", "must be finite and > 0");
    detail::require(n_blocks >= 10000, "n_blocks", "must be >= 10000");
    auto increasing = [](const std::vector<double>& v, const char* field) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        detail::require(std::isfinite(v[i]) && v[i] >= 0.0,
                        std::string(field) + "/" + std::to_string(i), "must be finite and >= 0");
        detail::require(i == 0 || v[i] > v[i - 1], std::string(field) + "/" + std::to_string(i),
                        "thresholds must be strictly increasing");
      }
    };
    increasing(q_thresholds, "q_thresholds");
    increasing(d_thresholds, "d_thresholds");
  }
};

struct QueueSimReport {
  std::vector<TailPoint> overflow_points;  ///< Pr{Q >= q}
  std::vector<TailPoint> delay_points;     ///< Pr{D >= d}, bit-weighted
  double theta_sim = std::numeric_limits<double>::quiet_NaN();
  double delay_slope_sim = std::numeric_limits<double>::quiet_NaN();
  DecayFit overflow_fit;
  DecayFit delay_fit;
  std::string overflow_fit_error;
  std::string delay_fit_error;
  double varsigma_hat = 0.0;    ///< Pr{Q > 0}
  double varsigma_ratio = 0.0;  ///< mean arrival / mean service
  double mean_arrival = 0.0;
  double mean_service = 0.0;
  std::uint64_t n_blocks = 0;
  std::uint64_t warmup = 0;
};

struct VarsigmaEstimate {
  double empirical = 0.0;
  double ratio_approx = 0.0;
};

inline VarsigmaEstimate varsigma_estimate(const QueueSimReport& report) {
  return {report.varsigma_hat, report.varsigma_ratio};
}

/// Blocks discarded before tail statistics: 1% of the run, at least 10^4,
/// never more than half.
inline std::uint64_t warmup_blocks(std::uint64_t n_blocks) {
  return std::min(std::max<std::uint64_t>(n_blocks / 100, 10000), n_blocks / 2);
}

namespace detail {

/// Per-block arrival generator for any source model.
class ArrivalProcess {
 public:
  explicit ArrivalProcess(const SourceModel& model) {
    std::visit([this](const auto& s) { init(s); }, model);
  }

  void start(Rng& rng) {
    state_ = pick(stationary_cumulative_.data(), stationary_cumulative_.size(), 1, rng);
  }

  double next(Rng& rng) {
    if (kind_ == Kind::discrete) {
      state_ = draw_row(state_, rng);
      return rates_(state_);
    }
    // One unit of continuous time; holding times are memoryless, so a dwell
    // cut by the block boundary is simply redrawn in the next block.
    double t = 0.0;
    double volume = 0.0;
    while (t < 1.0) {
      const double exit = exit_rates_(state_);
      double dwell = 1.0 - t;
      bool jumps = false;
      if (exit > 0.0) {
        const double hold = std::exponential_distribution<double>(exit)(rng);
        if (hold < dwell) {
          dwell = hold;
          jumps = true;
        }
      }
      volume += rates_(state_) * dwell;
      t += dwell;
      if (jumps) state_ = draw_row(state_, rng);
    }
    if (kind_ == Kind::fluid || volume == 0.0) return volume;
    return static_cast<double>(std::poisson_distribution<long long>(volume)(rng));
  }

 private:
  enum class Kind { discrete, fluid, poisson };

  void init(const ConstantRate& s) {
    require(s.lambda >= 0.0 && std::isfinite(s.lambda), "lambda", "must be finite and >= 0");
    set_discrete(Matrix::Ones(1, 1), Vector::Constant(1, s.lambda), Vector::Ones(1));
  }
  void init(const OnOffDiscreteParams& s) { init(to_discrete_source(s)); }
  void init(const FluidOnOff& s) { init(to_fluid_source(s.params)); }
  void init(const MmppOnOff& s) { init(to_mmpp_source(s.params)); }
  void init(const DiscreteMarkovSource& s) {
    set_discrete(s.transition_probs(), s.rates(), s.stationary());
  }
  void init(const FluidMarkovSource& s) {
    set_continuous(s.generator(), s.rates(), s.stationary(), Kind::fluid);
  }
  void init(const MmppSource& s) {
    set_continuous(s.generator(), s.intensities(), s.stationary(), Kind::poisson);
  }

  void set_discrete(const Matrix& j, const Vector& rates, const Vector& pi) {
    kind_ = Kind::discrete;
    cumulative_ = j;
    rates_ = rates;
    stationary_ = pi;
    accumulate();
  }

  void set_continuous(const Matrix& g, const Vector& rates, const Vector& pi, Kind kind) {
    kind_ = kind;
    const Eigen::Index n = g.rows();
    exit_rates_ = -g.diagonal();
    cumulative_ = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (exit_rates_(i) <= 0.0) continue;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j != i) cumulative_(i, j) = g(i, j) / exit_rates_(i);
      }
    }
    rates_ = rates;
    stationary_ = pi;
    accumulate();
  }

  void accumulate() {
    for (Eigen::Index i = 0; i < cumulative_.rows(); ++i) {
      for (Eigen::Index j = 1; j < cumulative_.cols(); ++j) cumulative_(i, j) += cumulative_(i, j - 1);
    }
    Vector c = stationary_;
    for (Eigen::Index j = 1; j < c.size(); ++j) c(j) += c(j - 1);
    stationary_cumulative_ = c;
  }

  Eigen::Index draw_row(Eigen::Index row, Rng& rng) const {
    // column-major storage: row entries are strided by rows()
    return pick(cumulative_.data() + row, cumulative_.cols(), cumulative_.rows(), rng);
  }

  static Eigen::Index pick(const double* cum, Eigen::Index n, Eigen::Index stride, Rng& rng) {
    const double total = cum[(n - 1) * stride];
    const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    for (Eigen::Index j = 0; j + 1 < n; ++j) {
      if (u < cum[j * stride]) return j;
    }
    return n - 1;
  }

  Kind kind_ = Kind::discrete;
  Matrix cumulative_;
  Vector exit_rates_;
  Vector rates_;
  Vector stationary_;
  Vector stationary_cumulative_;
  Eigen::Index state_ = 0;
};

/// `count` evenly spaced values from the 50th to the 99.99th percentile of a
/// sorted sample; when the median is 0 the grid starts one step above 0.
inline std::vector<double> percentile_grid(const std::vector<double>& sorted, int count = 12) {
  if (sorted.empty()) return {};
  auto at = [&](double p) {
    const auto idx = static_cast<std::size_t>(std::floor(p * (sorted.size() - 1)));
    return sorted[idx];
  };
  const double lo = at(0.5);
  const double hi = at(0.9999);
  std::vector<double> grid;
  if (!(hi > lo)) return grid;
  if (lo > 0.0) {
    for (int i = 0; i < count; ++i) grid.push_back(lo + (hi - lo) * i / (count - 1));
  } else {
    for (int i = 1; i <= count; ++i) grid.push_back(hi * i / count);
  }
  return grid;
}

}  // namespace detail

/// Runs the queue for cfg.n_blocks blocks: per block the source emits a(k),
/// the channel serves ν(k), Q(k) = max(Q(k-1) + a(k) - ν(k), 0), and bits leave
/// in FIFO order. Tail statistics skip the warm-up blocks.
inline QueueSimReport simulate_queue(const SimConfig& cfg) {
  cfg.validate();
  detail::ArrivalProcess source(cfg.source);
  Rng source_rng = make_stream(cfg.seed, 0);
  Rng channel_rng = make_stream(cfg.seed, 1);
  source.start(source_rng);

  const std::uint64_t n = cfg.n_blocks;
  const std::uint64_t warmup = warmup_blocks(n);
  constexpr std::uint64_t kCheckpoint = 100000;

  std::vector<double> queue_samples;
  queue_samples.reserve(n - warmup);
  std::vector<double> delay_bits;          // bits that waited d blocks
  std::vector<std::uint64_t> delay_count;  // departure fragments that waited d blocks
  std::deque<std::pair<std::uint64_t, double>> backlog;  // (arrival block, bits)

  double q = 0.0;
  double total_arrival = 0.0;
  double total_service = 0.0;
  std::uint64_t busy = 0;
  for (std::uint64_t k = 0; k < n; ++k) {
    const double a = source.next(source_rng);
    const double nu = service_rate(sample_fading_block(cfg.channel, channel_rng), cfg.snr);
    total_arrival += a;
    total_service += nu;
    const double next_q = lindley_step(q, a, nu);
    if (a > 0.0) backlog.emplace_back(k, a);
    double departed = q + a - next_q;
    q = next_q;
    if (q == 0.0) {
      departed = std::numeric_limits<double>::infinity();  // flush rounding residue
    }

    const bool record = k >= warmup;
    while (departed > 0.0 && !backlog.empty()) {
      auto& front = backlog.front();
      const double take = std::min(front.second, departed);
      if (record && take > 0.0) {
        const std::uint64_t d = k - front.first;
        if (d >= delay_bits.size()) {
          delay_bits.resize(d + 1, 0.0);
          delay_count.resize(d + 1, 0);
        }
        delay_bits[d] += take;
        delay_count[d] += 1;
      }
      departed -= take;
      front.second -= take;
      if (front.second <= 0.0 || departed == std::numeric_limits<double>::infinity()) {
        backlog.pop_front();
      }
    }

    if (record) {
      queue_samples.push_back(q);
      if (q > 0.0) ++busy;
    }
    if ((k + 1) % kCheckpoint == 0 && k + 1 > kCheckpoint &&
        total_arrival > 1.01 * total_service) {
      throw Error(ErrorCode::unstable_queue,
                  "mean arrival " + std::to_string(total_arrival / (k + 1)) +
                      " exceeds mean service " + std::to_string(total_service / (k + 1)) +
                      " by more than 1% after " + std::to_string(k + 1) + " blocks");
    }
  }

  QueueSimReport report;
  report.n_blocks = n;
  report.warmup = warmup;
  report.mean_arrival = total_arrival / n;
  report.mean_service = total_service / n;
  report.varsigma_ratio = report.mean_service > 0.0 ? report.mean_arrival / report.mean_service : 0.0;
  const double recorded = static_cast<double>(queue_samples.size());
  report.varsigma_hat = busy / recorded;

  std::sort(queue_samples.begin(), queue_samples.end());
  const auto q_grid =
      cfg.q_thresholds.empty() ? detail::percentile_grid(queue_samples) : cfg.q_thresholds;
  for (double thr : q_grid) {
    const auto it = std::lower_bound(queue_samples.begin(), queue_samples.end(), thr);
    const auto count = static_cast<std::uint64_t>(queue_samples.end() - it);
    report.overflow_points.push_back({thr, count / recorded, count});
  }

  // Delay distribution, bit-weighted, with fragment counts as events.
  double total_bits = 0.0;
  for (double b : delay_bits) total_bits += b;
  std::vector<double> d_grid = cfg.d_thresholds;
  if (d_grid.empty() && total_bits > 0.0) {
    double cum = 0.0;
    double lo = -1.0;
    double hi = -1.0;
    for (std::size_t d = 0; d < delay_bits.size(); ++d) {
      cum += delay_bits[d];
      if (lo < 0.0 && cum >= 0.5 * total_bits) lo = static_cast<double>(d);
      if (hi < 0.0 && cum >= 0.9999 * total_bits) hi = static_cast<double>(d);
    }
    if (lo == 0.0) lo = 1.0;
    for (int i = 0; i < 12 && hi > lo; ++i) {
      const double d = std::round(lo + (hi - lo) * i / 11.0);
      if (d_grid.empty() || d > d_grid.back()) d_grid.push_back(d);
    }
  }
  if (total_bits > 0.0) {
    std::vector<double> tail_bits(delay_bits.size() + 1, 0.0);
    std::vector<std::uint64_t> tail_count(delay_bits.size() + 1, 0);
    for (std::size_t d = delay_bits.size(); d-- > 0;) {
      tail_bits[d] = tail_bits[d + 1] + delay_bits[d];
      tail_count[d] = tail_count[d + 1] + delay_count[d];
    }
    for (double thr : d_grid) {
      const auto idx = std::min(static_cast<std::size_t>(std::ceil(thr)), delay_bits.size());
      report.delay_points.push_back({thr, tail_bits[idx] / total_bits, tail_count[idx]});
    }
  } else {
    for (double thr : d_grid) report.delay_points.push_back({thr, 0.0, 0});
  }

  try {
    report.overflow_fit = fit_decay_slope(report.overflow_points);
    report.theta_sim = report.overflow_fit.slope;
  } catch (const Error& e) {
    report.overflow_fit_error = e.what();
  }
  try {
    report.delay_fit = fit_decay_slope(report.delay_points);
    report.delay_slope_sim = report.delay_fit.slope;
  } catch (const Error& e) {
    report.delay_fit_error = e.what();
  }
  return report;
}

}  // namespace qosrate
