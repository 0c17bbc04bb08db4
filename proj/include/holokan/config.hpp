#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "holokan/analysis.hpp"
#include "holokan/io.hpp"
#include "holokan/kan.hpp"
#include "holokan/symbolic.hpp"
#include "holokan/systems.hpp"
#include "holokan/training.hpp"

namespace holokan {

struct ExperimentConfig {
  SystemId system = SystemId::Quadratic;
  ModelKind model = ModelKind::Kan;
  double c_re = -0.4;
  double c_im = 0.6;
  double free_stream_u = 1.0;
  double radius_a = 1.0;

  TrainConfig train;
  KanArchitecture kan;
  int mlp_hidden = 64;

  int eval_resolution = 100;

  double fractal_lo = -2.0;
  double fractal_hi = 2.0;
  int fractal_resolution = 200;
  int fractal_max_iter = 50;
  double fractal_bailout = 2.0;
  IterationMode fractal_mode = IterationMode::Direct;

  int lyapunov_resolution = 200;
  LyapunovOptions lyapunov;

  FamilyRule symbolic_rule = FamilyRule::Response;
  int symbolic_top_k = 4;
  int symbolic_resolution = 100;

  int transfer_steps = 100;

  std::string out;

  void validate() const {
    train.validate();
    if (kan.hidden < 1) throw ConfigError("hidden must be positive");
    if (kan.grid_intervals < 1) throw ConfigError("grid_intervals must be positive");
    if (kan.spline_order < 0 || kan.spline_order > KnotGrid::kMaxOrder) throw ConfigError("spline_order out of range");
    if (!(kan.input_lo < kan.input_hi)) throw ConfigError("input range must satisfy lo < hi");
    if (!(kan.hidden_lo < kan.hidden_hi)) throw ConfigError("hidden range must satisfy lo < hi");
    if (mlp_hidden < 1) throw ConfigError("mlp_hidden must be positive");
    if (eval_resolution < 1) throw ConfigError("eval_resolution must be positive");
    if (!(fractal_lo < fractal_hi)) throw ConfigError("fractal range must satisfy lo < hi");
    if (fractal_resolution < 1) throw ConfigError("fractal_resolution must be positive");
    if (fractal_max_iter < 1) throw ConfigError("fractal_max_iter must be at least 1");
    if (!(fractal_bailout > 0.0)) throw ConfigError("fractal_bailout must be positive");
    if (lyapunov_resolution < 1) throw ConfigError("lyapunov_resolution must be positive");
    if (lyapunov.n_iter < 1) throw ConfigError("lyapunov_iter must be at least 1");
    if (!(lyapunov.delta0 > 0.0)) throw ConfigError("lyapunov_delta0 must be positive");
    if (!(lyapunov.bailout > 0.0)) throw ConfigError("lyapunov_bailout must be positive");
    if (symbolic_top_k < 1) throw ConfigError("symbolic_top_k must be at least 1");
    if (symbolic_resolution < 2) throw ConfigError("symbolic_resolution must be at least 2");
    if (transfer_steps < 0) throw ConfigError("transfer_steps must be non-negative");
    if (system == SystemId::PotentialFlow && !(radius_a > 0.0)) throw ConfigError("radius_a must be positive");
  }

  SystemSpec spec() const { return make_system(system, {c_re, c_im}, free_stream_u, radius_a); }
  EvalGrid eval_grid() const { return {eval_resolution, eval_resolution, spec().domain}; }
  EvalGrid fractal_grid() const { return {fractal_resolution, fractal_resolution, {fractal_lo, fractal_hi}}; }
  EvalGrid lyapunov_grid() const { return {lyapunov_resolution, lyapunov_resolution, spec().domain}; }
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

template <class T>
T parse_integer(std::string_view key, std::string_view v) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("config key '" + std::string(key) + "': expected an integer, got '" + std::string(v) + "'");
  return out;
}

struct ConfigKey {
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

inline const std::map<std::string, ConfigKey, std::less<>>& config_schema() {
  using C = ExperimentConfig;
  static const std::map<std::string, ConfigKey, std::less<>> schema = [] {
    std::map<std::string, ConfigKey, std::less<>> m;
    const auto realf = [&m](std::string name, auto access) {
      m[name] = {[name, access](C& c, std::string_view v) { access(c) = parse_real(v, name); },
                 [access](const C& c) {
                   C copy = c;
                   return format_real(access(copy));
                 }};
    };
    const auto integer = [&m](std::string name, auto access) {
      m[name] = {[name, access](C& c, std::string_view v) {
                   using T = std::remove_reference_t<decltype(access(c))>;
                   access(c) = parse_integer<T>(name, v);
                 },
                 [access](const C& c) {
                   C copy = c;
                   return std::to_string(access(copy));
                 }};
    };

    m["system"] = {[](C& c, std::string_view v) { c.system = parse_system_id(v); },
                   [](const C& c) { return std::string(system_key(c.system)); }};
    m["model"] = {[](C& c, std::string_view v) {
                    if (v == "kan") c.model = ModelKind::Kan;
                    else if (v == "mlp") c.model = ModelKind::Mlp;
                    else throw ConfigError("config key 'model': expected kan or mlp, got '" + std::string(v) + "'");
                  },
                  [](const C& c) { return std::string(model_kind_name(c.model)); }};
    realf("c_re", [](C& c) -> double& { return c.c_re; });
    realf("c_im", [](C& c) -> double& { return c.c_im; });
    realf("free_stream_u", [](C& c) -> double& { return c.free_stream_u; });
    realf("radius_a", [](C& c) -> double& { return c.radius_a; });

    integer("seed", [](C& c) -> std::uint64_t& { return c.train.seed; });
    integer("steps", [](C& c) -> int& { return c.train.steps; });
    realf("learning_rate", [](C& c) -> double& { return c.train.learning_rate; });
    integer("batch_size", [](C& c) -> std::size_t& { return c.train.batch_size; });
    realf("lambda_max", [](C& c) -> double& { return c.train.lambda_max; });
    integer("warmup_steps", [](C& c) -> int& { return c.train.warmup_steps; });
    realf("clip_norm", [](C& c) -> double& { return c.train.clip_norm; });
    integer("patience", [](C& c) -> int& { return c.train.patience; });
    realf("improvement_tolerance", [](C& c) -> double& { return c.train.improvement_tolerance; });
    realf("noise_level", [](C& c) -> double& { return c.train.noise_level; });
    integer("calibration_step", [](C& c) -> int& { return c.train.calibration_step; });
    integer("calibration_samples", [](C& c) -> std::size_t& { return c.train.calibration_samples; });
    integer("monitor_samples", [](C& c) -> std::size_t& { return c.train.monitor_samples; });

    integer("hidden", [](C& c) -> int& { return c.kan.hidden; });
    integer("grid_intervals", [](C& c) -> int& { return c.kan.grid_intervals; });
    integer("spline_order", [](C& c) -> int& { return c.kan.spline_order; });
    realf("input_lo", [](C& c) -> double& { return c.kan.input_lo; });
    realf("input_hi", [](C& c) -> double& { return c.kan.input_hi; });
    realf("hidden_lo", [](C& c) -> double& { return c.kan.hidden_lo; });
    realf("hidden_hi", [](C& c) -> double& { return c.kan.hidden_hi; });
    integer("mlp_hidden", [](C& c) -> int& { return c.mlp_hidden; });

    integer("eval_resolution", [](C& c) -> int& { return c.eval_resolution; });
    realf("fractal_lo", [](C& c) -> double& { return c.fractal_lo; });
    realf("fractal_hi", [](C& c) -> double& { return c.fractal_hi; });
    integer("fractal_resolution", [](C& c) -> int& { return c.fractal_resolution; });
    integer("fractal_max_iter", [](C& c) -> int& { return c.fractal_max_iter; });
    realf("fractal_bailout", [](C& c) -> double& { return c.fractal_bailout; });
    m["fractal_mode"] = {[](C& c, std::string_view v) { c.fractal_mode = parse_iteration_mode(v); },
                         [](const C& c) { return std::string(iteration_mode_name(c.fractal_mode)); }};

    integer("lyapunov_resolution", [](C& c) -> int& { return c.lyapunov_resolution; });
    integer("lyapunov_iter", [](C& c) -> int& { return c.lyapunov.n_iter; });
    realf("lyapunov_delta0", [](C& c) -> double& { return c.lyapunov.delta0; });
    realf("lyapunov_dt", [](C& c) -> double& { return c.lyapunov.dt; });
    realf("lyapunov_bailout", [](C& c) -> double& { return c.lyapunov.bailout; });
    m["lyapunov_mode"] = {[](C& c, std::string_view v) { c.lyapunov.mode = parse_iteration_mode(v); },
                          [](const C& c) { return std::string(iteration_mode_name(c.lyapunov.mode)); }};

    m["symbolic_rule"] = {[](C& c, std::string_view v) {
                            if (v == "response") c.symbolic_rule = FamilyRule::Response;
                            else if (v == "edge-vote") c.symbolic_rule = FamilyRule::EdgeVote;
                            else throw ConfigError("config key 'symbolic_rule': expected response or edge-vote");
                          },
                          [](const C& c) { return std::string(family_rule_name(c.symbolic_rule)); }};
    integer("symbolic_top_k", [](C& c) -> int& { return c.symbolic_top_k; });
    integer("symbolic_resolution", [](C& c) -> int& { return c.symbolic_resolution; });
    integer("transfer_steps", [](C& c) -> int& { return c.transfer_steps; });
    return m;
  }();
  return schema;
}

}  // namespace detail

/// Sets one key from its text form. Unknown keys are rejected.
inline void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  const auto& schema = detail::config_schema();
  const auto it = schema.find(key);
  if (it == schema.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second.set(cfg, detail::trim(value));
}

/// Applies "key = value" lines; blank lines and lines starting with '#' are
/// skipped. Returns the keys that were set, in file order.
inline std::vector<std::string> apply_config_text(ExperimentConfig& cfg, std::string_view text) {
  std::vector<std::string> keys;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    keys.push_back(detail::trim(std::string_view(t).substr(0, eq)));
    set_config_value(cfg, keys.back(), std::string_view(t).substr(eq + 1));
  }
  return keys;
}

inline std::vector<std::string> apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  return apply_config_text(cfg, read_text_file(path));
}

/// Every schema key with its current value, sorted by key, one per line.
inline std::string canonical_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [key, entry] : detail::config_schema()) out += key + " = " + entry.get(cfg) + "\n";
  return out;
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_config(cfg))));
  return buf;
}

}  // namespace holokan
