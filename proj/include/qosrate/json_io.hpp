#pragma once

// JSON documents for sources, channels and results. Parse errors surface as
// ValidationError with the offending field path ("source/transition/1/0").

#include <json.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "qosrate/channel.hpp"
#include "qosrate/energy.hpp"
#include "qosrate/errors.hpp"
#include "qosrate/queuesim.hpp"
#include "qosrate/sources.hpp"
#include "qosrate/throughput.hpp"

namespace qosrate {

using Json = nlohmann::json;

namespace detail {

inline std::string join_path(const std::string& prefix, const std::string& field) {
  if (prefix.empty()) return field;
  if (field.empty()) return prefix;
  return prefix + "/" + field;
}

inline const Json& member(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw ValidationError(join_path(path, key), "is required");
  return obj.at(key);
}

inline double number(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = member(obj, key, path);
  if (!v.is_number()) throw ValidationError(join_path(path, key), "must be a number");
  return v.get<double>();
}

inline double number_or(const Json& obj, const std::string& key, const std::string& path,
                        double fallback) {
  return obj.contains(key) ? number(obj, key, path) : fallback;
}

inline int integer(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = member(obj, key, path);
  if (!v.is_number_integer()) throw ValidationError(join_path(path, key), "must be an integer");
  return v.get<int>();
}

inline Vector vector_field(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = member(obj, key, path);
  if (!v.is_array()) throw ValidationError(join_path(path, key), "must be an array");
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      throw ValidationError(join_path(path, key + "/" + std::to_string(i)), "must be a number");
    }
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

inline Matrix matrix_field(const Json& obj, const std::string& key, const std::string& path) {
  const Json& v = member(obj, key, path);
  if (!v.is_array() || v.empty()) throw ValidationError(join_path(path, key), "must be a non-empty array of rows");
  const std::size_t n = v.size();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string row_path = key + "/" + std::to_string(i);
    if (!v[i].is_array() || v[i].size() != n) {
      throw ValidationError(join_path(path, row_path), "must be an array of " + std::to_string(n) + " numbers");
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (!v[i][j].is_number()) {
        throw ValidationError(join_path(path, row_path + "/" + std::to_string(j)), "must be a number");
      }
      out(i, j) = v[i][j].get<double>();
    }
  }
  return out;
}

/// Runs a constructor, re-rooting its field paths under `path` and turning
/// structural chain errors into validation errors on the transition matrix.
template <class F>
auto with_path(const std::string& path, F&& build) -> decltype(build()) {
  try {
    return build();
  } catch (const ValidationError& e) {
    throw ValidationError(join_path(path, e.field()), e.detail());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::no_unique_stationary || e.code() == ErrorCode::periodic_chain) {
      throw ValidationError(join_path(path, "transition"), e.what());
    }
    throw;
  }
}

}  // namespace detail

/// Source document. Kinds: constant, onoff-discrete, onoff-fluid, onoff-mmpp,
/// discrete, fluid, mmpp, binomial-discrete, birth-death-fluid,
/// birth-death-mmpp. "lambda" defaults to 1 where it is only a scale.
inline SourceModel source_from_json(const Json& doc, const std::string& path = "source") {
  using namespace detail;
  if (!doc.is_object()) throw ValidationError(path, "must be an object");
  const Json& kind_json = member(doc, "kind", path);
  if (!kind_json.is_string()) throw ValidationError(join_path(path, "kind"), "must be a string");
  const std::string kind = kind_json.get<std::string>();

  return with_path(path, [&]() -> SourceModel {
    if (kind == "constant") {
      const double lambda = number(doc, "lambda", "");
      require(lambda >= 0.0 && std::isfinite(lambda), "lambda", "must be finite and >= 0");
      return ConstantRate{lambda};
    }
    if (kind == "onoff-discrete") {
      OnOffDiscreteParams p{number(doc, "p11", ""), number(doc, "p22", ""),
                            number_or(doc, "lambda", "", 1.0)};
      p.validate();
      return p;
    }
    if (kind == "onoff-fluid" || kind == "onoff-mmpp") {
      OnOffContinuousParams p{number(doc, "alpha", ""), number(doc, "beta", ""),
                              number_or(doc, "lambda", "", 1.0)};
      p.validate();
      if (kind == "onoff-fluid") return FluidOnOff{p};
      return MmppOnOff{p};
    }
    if (kind == "discrete") {
      return DiscreteMarkovSource(matrix_field(doc, "transition", ""), vector_field(doc, "rates", ""));
    }
    if (kind == "fluid") {
      return FluidMarkovSource(matrix_field(doc, "transition", ""), vector_field(doc, "rates", ""));
    }
    if (kind == "mmpp") {
      const char* key = doc.contains("intensities") ? "intensities" : "rates";
      return MmppSource(matrix_field(doc, "transition", ""), vector_field(doc, key, ""));
    }
    if (kind == "binomial-discrete") {
      return build_binomial_discrete_source(integer(doc, "n", ""), number(doc, "s", ""),
                                            number_or(doc, "lambda", "", 1.0));
    }
    if (kind == "birth-death-fluid" || kind == "birth-death-mmpp") {
      const int n = integer(doc, "n", "");
      const double alpha = number(doc, "alpha", "");
      const double beta = number(doc, "beta", "");
      const double lambda = number_or(doc, "lambda", "", 1.0);
      if (kind == "birth-death-fluid") return build_birth_death_fluid(n, alpha, beta, lambda);
      return build_birth_death_mmpp(n, alpha, beta, lambda);
    }
    throw ValidationError("kind", "unknown source kind '" + kind + "'");
  });
}

inline ChannelSpec channel_from_json(const Json& doc, const std::string& path = "channel") {
  using namespace detail;
  if (!doc.is_object()) throw ValidationError(path, "must be an object");
  ChannelSpec spec;
  spec.m = integer(doc, "m", path);
  spec.rho = number_or(doc, "rho", path, 0.0);
  spec.sigma_h_sq = number_or(doc, "sigma_h_sq", path, 1.0);
  if (doc.contains("distribution")) {
    const Json& d = doc.at("distribution");
    if (!d.is_string() || d.get<std::string>() != "gauss-markov-rayleigh") {
      throw ValidationError(join_path(path, "distribution"),
                            "only \"gauss-markov-rayleigh\" is supported");
    }
  }
  with_path(path, [&] {
    spec.validate();
    return 0;
  });
  return spec;
}

inline Json to_json(const ChannelSpec& spec) {
  return {{"m", spec.m},
          {"rho", spec.rho},
          {"sigma_h_sq", spec.sigma_h_sq},
          {"distribution", "gauss-markov-rayleigh"}};
}

inline Json to_json(const EffCapEstimate& e) {
  return {{"value", e.value},         {"std_error", e.std_error}, {"method", to_string(e.method)},
          {"n_samples", e.n_samples}, {"theta", e.theta},         {"snr", e.snr}};
}

inline Json to_json(const ThroughputResult& r) {
  return {{"r_avg_star", r.r_avg_star},
          {"lambda_star", r.lambda_star},
          {"theta", r.theta},
          {"effective_capacity", r.effective_capacity},
          {"method", to_string(r.method)}};
}

inline Json to_json(const EnergyMetrics& e) {
  return {{"ebn0_min_linear", e.ebn0_min_linear},
          {"ebn0_min_db", e.ebn0_min_db},
          {"wideband_slope", e.wideband_slope},
          {"theta", e.theta},
          {"provenance", to_string(e.provenance)}};
}

inline Json to_json(const TailPoint& p) {
  return {{"threshold", p.threshold}, {"probability", p.probability}, {"count", p.count}};
}

inline Json to_json(const DecayFit& f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"r_squared", f.r_squared},
          {"n_used", f.n_used}};
}

inline Json to_json(const QueueSimReport& r) {
  Json overflow = Json::array();
  for (const auto& p : r.overflow_points) overflow.push_back(to_json(p));
  Json delay = Json::array();
  for (const auto& p : r.delay_points) delay.push_back(to_json(p));
  auto finite_or_null = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  Json out = {{"overflow_points", overflow},
              {"delay_points", delay},
              {"theta_sim", finite_or_null(r.theta_sim)},
              {"delay_slope_sim", finite_or_null(r.delay_slope_sim)},
              {"varsigma_hat", r.varsigma_hat},
              {"varsigma_ratio", r.varsigma_ratio},
              {"mean_arrival", r.mean_arrival},
              {"mean_service", r.mean_service},
              {"n_blocks", r.n_blocks},
              {"warmup", r.warmup}};
  out["overflow_fit"] = r.overflow_fit_error.empty() ? to_json(r.overflow_fit) : Json(nullptr);
  out["delay_fit"] = r.delay_fit_error.empty() ? to_json(r.delay_fit) : Json(nullptr);
  if (!r.overflow_fit_error.empty()) out["overflow_fit_error"] = r.overflow_fit_error;
  if (!r.delay_fit_error.empty()) out["delay_fit_error"] = r.delay_fit_error;
  return out;
}

}  // namespace qosrate
