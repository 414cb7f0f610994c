#pragma once

// Command-line front end. `run` is the whole program minus process exit so
// tests can drive it in-process.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qosrate/qosrate.hpp"

#ifndef QOSRATE_VERSION
#define QOSRATE_VERSION "0.0.0"
#endif

namespace qosrate::cli {

enum ExitCode { kOk = 0, kValidation = 2, kRuntime = 3 };

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

/// A number written with a fixed count of decimals.
struct Fixed {
  double value;
  int decimals;
};

using Cell = std::variant<std::monostate, double, std::string, Fixed>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// 17 significant digits, C locale; NaN becomes an empty cell.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ',';
    out += t.columns[i];
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      if (const auto* d = std::get_if<double>(&row[i])) out += format_number(*d);
      if (const auto* s = std::get_if<std::string>(&row[i])) out += csv_escape(*s);
      if (const auto* f = std::get_if<Fixed>(&row[i])) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*f", f->decimals, f->value);
        out += buf;
      }
    }
    out += '\n';
  }
  return out;
}

inline Json to_json(const Table& t) {
  Json arr = Json::array();
  for (const auto& row : t.rows) {
    Json obj = Json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (const auto* d = std::get_if<double>(&row[i])) {
        obj[t.columns[i]] = std::isfinite(*d) ? Json(*d) : Json(nullptr);
      } else if (const auto* s = std::get_if<std::string>(&row[i])) {
        obj[t.columns[i]] = *s;
      } else if (const auto* f = std::get_if<Fixed>(&row[i])) {
        const double scale = std::pow(10.0, f->decimals);
        obj[t.columns[i]] = std::round(f->value * scale) / scale;
      } else {
        obj[t.columns[i]] = nullptr;
      }
    }
    arr.push_back(std::move(obj));
  }
  return arr;
}

inline Cell num_or_empty(double v) { return std::isfinite(v) ? Cell(v) : Cell(); }

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Resolved parameters of one invocation. Keys mirror the long flags with
/// dashes replaced by underscores.
struct Context {
  std::string command;
  Json params = Json::object();
  std::string format = "csv";
  unsigned workers = 1;
};

inline std::string read_file(const std::string& path, const std::string& field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(field, "cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Json parse_json_text(const std::string& text, const std::string& field) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(field, std::string("invalid JSON: ") + e.what());
  }
}

/// Inline JSON when the argument starts with '{', otherwise a file path.
inline Json json_argument(const std::string& arg, const std::string& field) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && arg[first] == '{') return parse_json_text(arg, field);
  return parse_json_text(read_file(arg, field), field);
}

inline std::vector<double> grid(const Json& params, const std::string& key) {
  const Json& v = detail::member(params, key, "");
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array() && !v.empty()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ValidationError(key + "/" + std::to_string(i), "must be a number");
      out.push_back(v[i].get<double>());
    }
  } else {
    throw ValidationError(key, "must be a number or a non-empty array of numbers");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    detail::require(std::isfinite(out[i]), key + "/" + std::to_string(i), "must be finite");
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<double> theta_grid(const Json& params) {
  auto g = grid(params, "theta");
  for (std::size_t i = 0; i < g.size(); ++i) {
    detail::require(g[i] > 0.0, "theta/" + std::to_string(i), "must be > 0");
  }
  return g;
}

inline double scalar(const Json& params, const std::string& key) {
  return detail::number(params, key, "");
}

inline std::uint64_t unsigned_param(const Json& params, const std::string& key,
                                    std::uint64_t fallback) {
  if (!params.contains(key)) return fallback;
  const Json& v = params.at(key);
  if (!v.is_number_unsigned()) throw ValidationError(key, "must be a non-negative integer");
  return v.get<std::uint64_t>();
}

inline std::uint64_t require_seed(const Json& params) {
  if (!params.contains("seed")) {
    throw ValidationError("seed", "randomized commands need an explicit --seed");
  }
  return unsigned_param(params, "seed", 0);
}

inline CapacityOptions capacity_options(const Context& ctx) {
  const Json& p = ctx.params;
  CapacityOptions opt;
  std::string name = "quadrature";
  if (p.contains("capacity_method")) {
    const Json& v = p.at("capacity_method");
    if (!v.is_string()) throw ValidationError("capacity_method", "must be a string");
    name = v.get<std::string>();
  }
  if (name == "closed-iid") {
    opt.method = CapacityMethod::closed_form_iid_rayleigh;
  } else if (name == "mc") {
    opt.method = CapacityMethod::monte_carlo;
    opt.seed = require_seed(p);
    opt.n_samples = unsigned_param(p, "n_samples", opt.n_samples);
    detail::require(opt.n_samples >= 2, "n_samples", "must be >= 2");
  } else if (name == "quadrature") {
    opt.method = CapacityMethod::quadrature;
  } else {
    throw ValidationError("capacity_method", "must be one of closed-iid, mc, quadrature");
  }
  opt.workers = ctx.workers;
  return opt;
}

inline SourceModel source_param(const Json& params) {
  return source_from_json(detail::member(params, "source", ""), "source");
}

inline ChannelSpec channel_param(const Json& params) {
  return channel_from_json(detail::member(params, "channel", ""), "channel");
}

inline void check_capacity_compat(const ChannelSpec& spec, const CapacityOptions& opt) {
  if (opt.method == CapacityMethod::closed_form_iid_rayleigh) {
    detail::require(spec.rho == 0.0 || spec.m == 1, "capacity_method",
                    "closed-iid needs channel rho = 0");
  }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

enum class Console { out, err, none };

struct OutputFile {
  std::string name;
  std::string content;
  Console console = Console::none;  ///< where it goes when there is no --out-dir
};

struct CommandOutput {
  std::vector<OutputFile> files;
  std::string summary;  ///< one line for stderr, may be empty
};

inline OutputFile table_file(const Context& ctx, const std::string& stem, const Table& t,
                             Console console) {
  if (ctx.format == "json") return {stem + ".json", to_json(t).dump(2) + "\n", console};
  return {stem + ".csv", to_csv(t), console};
}

inline CommandOutput cmd_ebw(const Context& ctx) {
  const SourceModel model = source_param(ctx.params);
  const auto thetas = theta_grid(ctx.params);
  Table t{{"theta", "a_star", "a_star_closed", "a_star_eigen"}, {}};
  for (double theta : thetas) {
    double closed = std::nan("");
    double eigen = std::nan("");
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, ConstantRate>) {
            closed = s.lambda;
          } else if constexpr (std::is_same_v<T, OnOffDiscreteParams>) {
            closed = effective_bandwidth_onoff_discrete(s, theta);
            eigen = effective_bandwidth_discrete(to_discrete_source(s), theta);
          } else if constexpr (std::is_same_v<T, FluidOnOff>) {
            closed = effective_bandwidth_onoff_fluid(s.params, theta);
            eigen = effective_bandwidth_fluid(to_fluid_source(s.params), theta);
          } else if constexpr (std::is_same_v<T, MmppOnOff>) {
            closed = effective_bandwidth_onoff_mmpp(s.params, theta);
            eigen = effective_bandwidth_mmpp(to_mmpp_source(s.params), theta);
          } else {
            eigen = effective_bandwidth(MarkovSource(s), theta);
          }
        },
        model);
    const double a = std::isnan(closed) ? eigen : closed;
    t.rows.push_back({theta, a, num_or_empty(closed), num_or_empty(eigen)});
  }
  return {{table_file(ctx, "ebw", t, Console::out)}, ""};
}

inline CommandOutput cmd_ecap(const Context& ctx) {
  const ChannelSpec spec = channel_param(ctx.params);
  const auto opt = capacity_options(ctx);
  check_capacity_compat(spec, opt);
  const auto thetas = theta_grid(ctx.params);
  const auto snrs = grid(ctx.params, "snr_db");
  Table t{{"theta", "snr_db", "ce", "std_error", "method", "ergodic", "error"}, {}};
  for (double theta : thetas) {
    for (double snr_db : snrs) {
      const double snr = from_db(snr_db);
      try {
        const auto ce = effective_capacity(spec, snr, theta, opt);
        t.rows.push_back({theta, snr_db, ce.value, ce.std_error, std::string(to_string(ce.method)),
                          ergodic_capacity(spec, snr), std::string()});
      } catch (const Error& e) {
        t.rows.push_back({theta, snr_db, Cell(), Cell(), std::string(to_string(opt.method)), Cell(),
                          std::string(e.what())});
      }
    }
  }
  return {{table_file(ctx, "ecap", t, Console::out)}, ""};
}

inline CommandOutput cmd_throughput(const Context& ctx) {
  const SourceModel model = source_param(ctx.params);
  const ChannelSpec spec = channel_param(ctx.params);
  const auto opt = capacity_options(ctx);
  check_capacity_compat(spec, opt);
  const auto thetas = theta_grid(ctx.params);
  const auto snrs = grid(ctx.params, "snr_db");
  Table t{{"theta", "snr_db", "ce", "ce_std_error", "r_avg_star", "lambda_star", "capacity_method",
           "solve_method", "error"},
          {}};
  for (double theta : thetas) {
    for (double snr_db : snrs) {
      const std::string cap_name(to_string(opt.method));
      try {
        const auto ce = effective_capacity(spec, from_db(snr_db), theta, opt);
        try {
          const auto r = max_avg_rate(model, theta, ce.value);
          t.rows.push_back({theta, snr_db, ce.value, ce.std_error, r.r_avg_star, r.lambda_star,
                            cap_name, std::string(to_string(r.method)), std::string()});
        } catch (const Error& e) {
          t.rows.push_back({theta, snr_db, ce.value, ce.std_error, Cell(), Cell(), cap_name, Cell(),
                            std::string(e.what())});
        }
      } catch (const Error& e) {
        t.rows.push_back({theta, snr_db, Cell(), Cell(), Cell(), Cell(), cap_name, Cell(),
                          std::string(e.what())});
      }
    }
  }
  return {{table_file(ctx, "throughput", t, Console::out)}, ""};
}

inline CommandOutput cmd_energy(const Context& ctx) {
  const SourceModel model = source_param(ctx.params);
  const ChannelSpec spec = channel_param(ctx.params);
  const auto opt = capacity_options(ctx);
  check_capacity_compat(spec, opt);
  const double theta = scalar(ctx.params, "theta");
  detail::require(theta > 0.0 && std::isfinite(theta), "theta", "must be finite and > 0");
  const auto snrs = grid(ctx.params, "snr_db");

  const std::string kind(to_string(family(model)));
  Json metrics;
  try {
    metrics = qosrate::to_json(energy_metrics(model, spec, theta));
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    const bool closed = model.index() < 4;  // the ON/OFF and constant alternatives
    metrics = {{"theta", theta},
               {"provenance", closed ? "closed_form" : "numeric"},
               {"ebn0_min_db", nullptr},
               {"wideband_slope", nullptr},
               {"error", e.what()}};
  }
  metrics["source_family"] = kind;

  Table t{{"kind", "theta", "snr_db", "ebn0_db", "rate_per_symbol", "error"}, {}};
  for (double snr_db : snrs) {
    const double snr = from_db(snr_db);
    try {
      const double ce = effective_capacity(spec, snr, theta, opt).value;
      const double r = max_avg_rate(model, theta, ce).r_avg_star;
      if (r > 0.0) {
        const double per_symbol = r / spec.m;
        t.rows.push_back({kind, theta, snr_db, Fixed{to_db(snr / per_symbol), 4}, per_symbol,
                          std::string()});
      } else {
        t.rows.push_back({kind, theta, snr_db, Cell(), 0.0, std::string("zero throughput")});
      }
    } catch (const Error& e) {
      t.rows.push_back({kind, theta, snr_db, Cell(), Cell(), std::string(e.what())});
    }
  }
  return {{table_file(ctx, "energy_curve", t, Console::out),
           {"metrics.json", metrics.dump(2) + "\n", Console::err}},
          ""};
}

inline Table tail_table(const std::vector<TailPoint>& points) {
  Table t{{"threshold", "probability", "count"}, {}};
  for (const auto& p : points) {
    t.rows.push_back({p.threshold, p.probability, static_cast<double>(p.count)});
  }
  return t;
}

inline std::vector<double> optional_grid(const Json& params, const std::string& key) {
  if (!params.contains(key)) return {};
  const Json& v = params.at(key);
  if (v.is_array() && v.empty()) return {};
  return grid(params, key);
}

inline CommandOutput cmd_simulate(const Context& ctx) {
  const Json& p = ctx.params;
  SimConfig cfg;
  cfg.source = source_param(p);
  cfg.channel = channel_param(p);
  cfg.seed = require_seed(p);
  cfg.snr = from_db(p.contains("snr_db") ? scalar(p, "snr_db") : 0.0);
  cfg.n_blocks = unsigned_param(p, "n_blocks", cfg.n_blocks);
  cfg.q_thresholds = optional_grid(p, "q_thresholds");
  cfg.d_thresholds = optional_grid(p, "d_thresholds");

  Json extra = Json::object();
  double theta = std::nan("");
  if (p.contains("theta")) {
    theta = scalar(p, "theta");
    detail::require(theta > 0.0 && std::isfinite(theta), "theta", "must be finite and > 0");
    auto opt = capacity_options(ctx);
    check_capacity_compat(cfg.channel, opt);
    const auto ce = effective_capacity(cfg.channel, cfg.snr, theta, opt);
    const auto r = max_avg_rate(cfg.source, theta, ce.value);
    cfg.source = with_rate_scale(cfg.source, r.lambda_star);
    extra = {{"theta", theta},
             {"effective_capacity", ce.value},
             {"lambda_star", r.lambda_star},
             {"r_avg_star", r.r_avg_star},
             {"delay_slope_target", theta * ce.value}};
  }

  const auto report = simulate_queue(cfg);
  Json doc = qosrate::to_json(report);
  if (!extra.empty()) doc["target"] = extra;

  char line[256];
  if (std::isfinite(theta)) {
    std::snprintf(line, sizeof line, "theta_sim=%s theta=%s ratio=%s",
                  format_number(report.theta_sim).c_str(), format_number(theta).c_str(),
                  format_number(report.theta_sim / theta).c_str());
  } else {
    std::snprintf(line, sizeof line, "theta_sim=%s varsigma_hat=%s",
                  format_number(report.theta_sim).c_str(),
                  format_number(report.varsigma_hat).c_str());
  }
  return {{{"report.json", doc.dump(2) + "\n", Console::out},
           table_file(ctx, "overflow", tail_table(report.overflow_points), Console::none),
           table_file(ctx, "delay", tail_table(report.delay_points), Console::none)},
          line};
}

// ---------------------------------------------------------------------------
// Manifest and driver
// ---------------------------------------------------------------------------

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

/// Merges the --config document (a parameter object or a previous manifest)
/// under the flags given on the command line.
inline Json load_config(const std::string& path) {
  Json doc = parse_json_text(read_file(path, "config"), "config");
  if (!doc.is_object()) throw ValidationError("config", "must be a JSON object");
  if (doc.contains("params") && doc.contains("command")) return doc.at("params");
  return doc;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Delay-constrained throughput and energy efficiency of Markov sources over fading channels",
               "qosrate"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", QOSRATE_VERSION);

  std::uint64_t seed = 0;
  std::string out_dir;
  std::string format = "csv";
  std::string config_path;
  unsigned workers = 1;
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (required by mc capacity and simulate)");
  app.add_option("--out-dir", out_dir, "Write outputs and manifest.json here instead of stdout");
  app.add_option("--format", format, "Table format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--config", config_path, "JSON parameter file or earlier manifest; flags win");
  app.add_option("--workers", workers, "Threads for Monte Carlo capacity")->check(CLI::Range(1u, 1024u));

  std::string source, channel, method;
  std::vector<double> theta, snr_db, q_thr, d_thr;
  std::uint64_t n_samples = 0, n_blocks = 0;

  struct Flags {
    CLI::Option* source = nullptr;
    CLI::Option* channel = nullptr;
    CLI::Option* theta = nullptr;
    CLI::Option* snr_db = nullptr;
    CLI::Option* method = nullptr;
    CLI::Option* n_samples = nullptr;
    CLI::Option* n_blocks = nullptr;
    CLI::Option* q_thr = nullptr;
    CLI::Option* d_thr = nullptr;
  };
  std::map<std::string, Flags> flags;

  auto add_source = [&](CLI::App* sub) {
    return sub->add_option("--source", source, "Source JSON, inline or a file path");
  };
  auto add_channel = [&](CLI::App* sub) {
    return sub->add_option("--channel", channel, "Channel JSON, inline or a file path");
  };
  auto add_thetas = [&](CLI::App* sub) {
    return sub->add_option("--theta", theta, "QoS exponent grid (comma separated)")->delimiter(',');
  };
  auto add_snrs = [&](CLI::App* sub) {
    return sub->add_option("--snr-db", snr_db, "SNR grid in dB (comma separated)")->delimiter(',');
  };
  auto add_method = [&](CLI::App* sub) {
    sub->add_option("--samples", n_samples, "Monte Carlo blocks per capacity estimate");
    return sub->add_option("--capacity-method", method, "closed-iid, mc or quadrature")
        ->check(CLI::IsMember({"closed-iid", "mc", "quadrature"}));
  };

  auto* ebw = app.add_subcommand("ebw", "Effective bandwidth a*(theta) of a source");
  flags["ebw"] = {add_source(ebw), nullptr, add_thetas(ebw)};

  auto* ecap = app.add_subcommand("ecap", "Effective capacity of a fading channel");
  {
    Flags f{nullptr, add_channel(ecap), add_thetas(ecap), add_snrs(ecap), add_method(ecap)};
    f.n_samples = ecap->get_option("--samples");
    flags["ecap"] = f;
  }

  auto* thr = app.add_subcommand("throughput", "Maximum average arrival rate r*(theta, snr)");
  {
    Flags f{add_source(thr), add_channel(thr), add_thetas(thr), add_snrs(thr), add_method(thr)};
    f.n_samples = thr->get_option("--samples");
    flags["throughput"] = f;
  }

  auto* energy = app.add_subcommand("energy", "Minimum energy per bit, wideband slope and Eb/N0 curve");
  {
    Flags f{add_source(energy), add_channel(energy),
            energy->add_option("--theta", theta, "QoS exponent")->expected(1), add_snrs(energy),
            add_method(energy)};
    f.n_samples = energy->get_option("--samples");
    flags["energy"] = f;
  }

  auto* sim = app.add_subcommand("simulate", "Queue simulation with tail fits");
  {
    Flags f;
    f.source = add_source(sim);
    f.channel = add_channel(sim);
    f.theta = sim->add_option("--theta", theta, "Scale the source to lambda*(theta) first")->expected(1);
    f.snr_db = sim->add_option("--snr-db", snr_db, "SNR in dB")->expected(1);
    f.method = add_method(sim);
    f.n_samples = sim->get_option("--samples");
    f.n_blocks = sim->add_option("--blocks", n_blocks, "Number of blocks");
    f.q_thr = sim->add_option("--q-thresholds", q_thr, "Backlog thresholds in bits")->delimiter(',');
    f.d_thr = sim->add_option("--d-thresholds", d_thr, "Delay thresholds in blocks")->delimiter(',');
    flags["simulate"] = f;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, r;
    const int code = app.exit(e, o, r);
    out << o.str();
    err << r.str();
    return code == 0 ? kOk : kValidation;
  }

  Context ctx;
  ctx.command = app.get_subcommands().front()->get_name();
  ctx.format = format;
  ctx.workers = workers;
  try {
    if (!config_path.empty()) ctx.params = load_config(config_path);
    Json& p = ctx.params;
    const Flags& f = flags.at(ctx.command);
    auto given = [](CLI::Option* o) { return o != nullptr && o->count() > 0; };
    if (given(f.source)) p["source"] = json_argument(source, "source");
    if (given(f.channel)) p["channel"] = json_argument(channel, "channel");
    const bool single_theta = ctx.command == "energy" || ctx.command == "simulate";
    if (given(f.theta)) p["theta"] = single_theta ? Json(theta.at(0)) : Json(theta);
    if (given(f.snr_db)) p["snr_db"] = ctx.command == "simulate" ? Json(snr_db.at(0)) : Json(snr_db);
    if (given(f.method)) p["capacity_method"] = method;
    if (given(f.n_samples)) p["n_samples"] = n_samples;
    if (given(f.n_blocks)) p["n_blocks"] = n_blocks;
    if (given(f.q_thr)) p["q_thresholds"] = q_thr;
    if (given(f.d_thr)) p["d_thresholds"] = d_thr;
    if (seed_opt->count() > 0) p["seed"] = seed;

    const auto started = std::chrono::system_clock::now();
    CommandOutput result;
    if (ctx.command == "ebw") result = cmd_ebw(ctx);
    else if (ctx.command == "ecap") result = cmd_ecap(ctx);
    else if (ctx.command == "throughput") result = cmd_throughput(ctx);
    else if (ctx.command == "energy") result = cmd_energy(ctx);
    else result = cmd_simulate(ctx);
    const auto finished = std::chrono::system_clock::now();

    if (out_dir.empty()) {
      for (const auto& file : result.files) {
        if (file.console == Console::out) out << file.content;
        if (file.console == Console::err) err << file.content;
      }
    } else {
      const std::filesystem::path dir(out_dir);
      std::filesystem::create_directories(dir);
      Json outputs = Json::object();
      for (const auto& file : result.files) {
        write_file(dir / file.name, file.content);
        outputs[file.name] = {{"sha256", sha256_hex(file.content)}, {"bytes", file.content.size()}};
      }
      Json manifest = {{"command", ctx.command},
                       {"params", p},
                       {"format", ctx.format},
                       {"seed", p.contains("seed") ? p.at("seed") : Json(nullptr)},
                       {"version", QOSRATE_VERSION},
                       {"started_at", utc_timestamp(started)},
                       {"finished_at", utc_timestamp(finished)},
                       {"outputs", outputs}};
      write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    }
    if (!result.summary.empty()) err << result.summary << '\n';
    return kOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace qosrate::cli
