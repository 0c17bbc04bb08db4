#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "holokan/io.hpp"
#include "holokan/kan.hpp"
#include "holokan/mlp.hpp"

namespace holokan {

using AnyNetwork = std::variant<KanNetwork, MlpNetwork>;

inline ModelKind network_kind(const AnyNetwork& net) {
  return std::holds_alternative<KanNetwork>(net) ? ModelKind::Kan : ModelKind::Mlp;
}

struct TrainingMeta {
  std::string system = "none";
  std::uint64_t seed = 42;
  int steps_completed = 0;
  double final_mse = 0.0;
  double final_cr = 0.0;
};

struct Checkpoint {
  AnyNetwork net{KanNetwork{}};
  TrainingMeta meta;
};

inline constexpr int kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointMagic = "holokan-checkpoint";

namespace detail {

inline std::string hex_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::hex);
  return std::string(buf, res.ptr);
}

class CheckpointReader {
 public:
  explicit CheckpointReader(std::string_view text) : in_(std::string(text)) {}

  /// Reads the next "key value..." line and checks the key.
  std::vector<std::string> field(std::string_view key, std::size_t values) {
    std::string line;
    while (std::getline(in_, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) break;
    }
    if (!in_ && line.empty()) fail(key, "missing");
    std::istringstream ls(line);
    std::string got;
    ls >> got;
    if (got != key) fail(key, "expected this field, found '" + got + "'");
    std::vector<std::string> out;
    std::string tok;
    while (ls >> tok) out.push_back(tok);
    if (out.size() != values)
      fail(key, "expected " + std::to_string(values) + " value(s), found " + std::to_string(out.size()));
    return out;
  }

  std::string text(std::string_view key) { return field(key, 1)[0]; }

  long integer(std::string_view key) {
    const auto s = text(key);
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail(key, "not an integer: '" + s + "'");
    return v;
  }

  std::uint64_t unsigned_integer(std::string_view key) {
    const auto s = text(key);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail(key, "not an unsigned integer: '" + s + "'");
    return v;
  }

  static double real_token(std::string_view key, const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail(key, "not a hex-float value: '" + s + "'");
    return v;
  }

  double real(std::string_view key) { return real_token(key, text(key)); }

  std::pair<double, double> range(std::string_view key) {
    const auto v = field(key, 2);
    return {real_token(key, v[0]), real_token(key, v[1])};
  }

  std::vector<double> values(std::string_view key, std::size_t expected) {
    const long n = integer(key);
    if (n < 0 || static_cast<std::size_t>(n) != expected)
      fail(key, "declares " + std::to_string(n) + " values, architecture needs " + std::to_string(expected));
    std::vector<double> out;
    out.reserve(expected);
    std::string tok;
    while (out.size() < expected && in_ >> tok) {
      if (tok == "end") break;
      out.push_back(real_token(key, tok));
    }
    if (out.size() != expected)
      fail(key, "expected " + std::to_string(expected) + " values, found " + std::to_string(out.size()));
    return out;
  }

  void end() {
    std::string tok;
    if (!(in_ >> tok)) fail("end", "missing");
    if (tok != "end") fail("end", "found extra data '" + tok + "'");
    if (in_ >> tok) fail("end", "trailing data after end marker");
  }

  [[noreturn]] static void fail(std::string_view key, const std::string& why) {
    throw CheckpointError("checkpoint field '" + std::string(key) + "': " + why);
  }

 private:
  std::istringstream in_;
};

}  // namespace detail

/// Text layout, one "key value" per line, reals as hex floats:
///   holokan-checkpoint 1
///   model kan|mlp
///   hidden, grid_intervals, spline_order, input_range, hidden_range   (kan)
///   hidden                                                             (mlp)
///   system, seed, steps_completed, final_mse, final_cr
///   parameters N, followed by N values in the network's flat order
///   end
inline std::string serialize_checkpoint(const Checkpoint& ckpt) {
  using detail::hex_real;
  std::ostringstream out;
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  std::span<const double> params;
  if (const auto* kan = std::get_if<KanNetwork>(&ckpt.net)) {
    const auto& a = kan->architecture();
    out << "model kan\n";
    out << "hidden " << a.hidden << '\n';
    out << "grid_intervals " << a.grid_intervals << '\n';
    out << "spline_order " << a.spline_order << '\n';
    out << "input_range " << hex_real(a.input_lo) << ' ' << hex_real(a.input_hi) << '\n';
    out << "hidden_range " << hex_real(a.hidden_lo) << ' ' << hex_real(a.hidden_hi) << '\n';
    params = kan->parameters();
  } else {
    const auto& mlp = std::get<MlpNetwork>(ckpt.net);
    out << "model mlp\n";
    out << "hidden " << mlp.hidden() << '\n';
    params = mlp.parameters();
  }
  out << "system " << ckpt.meta.system << '\n';
  out << "seed " << ckpt.meta.seed << '\n';
  out << "steps_completed " << ckpt.meta.steps_completed << '\n';
  out << "final_mse " << hex_real(ckpt.meta.final_mse) << '\n';
  out << "final_cr " << hex_real(ckpt.meta.final_cr) << '\n';
  out << "parameters " << params.size() << '\n';
  for (double p : params) out << hex_real(p) << '\n';
  out << "end\n";
  return out.str();
}

inline Checkpoint parse_checkpoint(std::string_view text) {
  detail::CheckpointReader rd(text);
  const auto head = rd.field(kCheckpointMagic, 1);
  if (head[0] != std::to_string(kCheckpointVersion))
    detail::CheckpointReader::fail("version", "unsupported version " + head[0]);
  const auto model = rd.text("model");
  Checkpoint ckpt;
  if (model == "kan") {
    KanArchitecture a;
    a.hidden = static_cast<int>(rd.integer("hidden"));
    a.grid_intervals = static_cast<int>(rd.integer("grid_intervals"));
    a.spline_order = static_cast<int>(rd.integer("spline_order"));
    std::tie(a.input_lo, a.input_hi) = rd.range("input_range");
    std::tie(a.hidden_lo, a.hidden_hi) = rd.range("hidden_range");
    if (a.hidden < 1) detail::CheckpointReader::fail("hidden", "must be positive");
    if (a.grid_intervals < 1) detail::CheckpointReader::fail("grid_intervals", "must be positive");
    if (a.spline_order < 0 || a.spline_order > KnotGrid::kMaxOrder)
      detail::CheckpointReader::fail("spline_order", "out of range");
    KanNetwork net(a);
    ckpt.meta.system = rd.text("system");
    ckpt.meta.seed = rd.unsigned_integer("seed");
    ckpt.meta.steps_completed = static_cast<int>(rd.integer("steps_completed"));
    ckpt.meta.final_mse = rd.real("final_mse");
    ckpt.meta.final_cr = rd.real("final_cr");
    const auto values = rd.values("parameters", net.parameter_count());
    std::copy(values.begin(), values.end(), net.parameters().begin());
    ckpt.net = std::move(net);
  } else if (model == "mlp") {
    const long hidden = rd.integer("hidden");
    if (hidden < 1) detail::CheckpointReader::fail("hidden", "must be positive");
    MlpNetwork net(static_cast<int>(hidden));
    ckpt.meta.system = rd.text("system");
    ckpt.meta.seed = rd.unsigned_integer("seed");
    ckpt.meta.steps_completed = static_cast<int>(rd.integer("steps_completed"));
    ckpt.meta.final_mse = rd.real("final_mse");
    ckpt.meta.final_cr = rd.real("final_cr");
    const auto values = rd.values("parameters", net.parameter_count());
    std::copy(values.begin(), values.end(), net.parameters().begin());
    ckpt.net = std::move(net);
  } else {
    detail::CheckpointReader::fail("model", "unknown model kind '" + model + "'");
  }
  rd.end();
  return ckpt;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_text_file(path, serialize_checkpoint(ckpt));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw CheckpointError("checkpoint not found: " + path.string());
  return parse_checkpoint(read_text_file(path));
}

/// Throws ArchitectureMismatch unless the checkpoint holds a KAN with the
/// requested width, grid size and order. Knot ranges are not compared.
inline const KanNetwork& expect_kan(const Checkpoint& ckpt, const std::optional<KanArchitecture>& want = {}) {
  const auto* kan = std::get_if<KanNetwork>(&ckpt.net);
  if (!kan) throw ArchitectureMismatch("checkpoint holds an mlp, a kan was requested");
  if (want) {
    const auto& a = kan->architecture();
    if (a.hidden != want->hidden || a.grid_intervals != want->grid_intervals || a.spline_order != want->spline_order)
      throw ArchitectureMismatch("checkpoint kan is [2," + std::to_string(a.hidden) + ",2] G=" +
                                 std::to_string(a.grid_intervals) + " k=" + std::to_string(a.spline_order) +
                                 ", requested [2," + std::to_string(want->hidden) + ",2] G=" +
                                 std::to_string(want->grid_intervals) + " k=" + std::to_string(want->spline_order));
  }
  return *kan;
}

inline const MlpNetwork& expect_mlp(const Checkpoint& ckpt, std::optional<int> hidden = {}) {
  const auto* mlp = std::get_if<MlpNetwork>(&ckpt.net);
  if (!mlp) throw ArchitectureMismatch("checkpoint holds a kan, an mlp was requested");
  if (hidden && mlp->hidden() != *hidden)
    throw ArchitectureMismatch("checkpoint mlp has hidden width " + std::to_string(mlp->hidden()) + ", requested " +
                               std::to_string(*hidden));
  return *mlp;
}

}  // namespace holokan
