#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "holokan/model.hpp"
#include "holokan/random.hpp"
#include "holokan/spline.hpp"

namespace holokan {

/// SiLU x * sigmoid(x) and its first two derivatives.
struct Silu {
  double value;
  double d1;
  double d2;
};

inline Silu silu(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return {x * s, s * (1.0 + x * (1.0 - s)), s * (1.0 - s) * (2.0 + x * (1.0 - 2.0 * s))};
}

struct KanArchitecture {
  int hidden = 5;
  int grid_intervals = 5;
  int spline_order = 3;
  double input_lo = -2.5;
  double input_hi = 2.5;
  double hidden_lo = -2.5;
  double hidden_hi = 2.5;

  friend bool operator==(const KanArchitecture&, const KanArchitecture&) = default;
};

/// A [2, H, 2] Kolmogorov-Arnold network.
///
/// Every edge computes phi(x) = w_b * silu(x) + w_s * spline(x). The spline is
/// driven by G + 2k + 1 control values, one per knot of the extended grid; the
/// coefficient of basis function B_m is the mean of the k + 2 control values
/// on the knots spanning B_m's support. Nodes sum their incoming edges and
/// carry no bias.
///
/// Flat parameter order: layer-1 edges (input j, hidden h) at index j * H + h,
/// then layer-2 edges (hidden h, output o) at index h * 2 + o. Each edge block
/// holds [control_0 .. control_{G+2k}, w_b, w_s].
class KanNetwork {
 public:
  static constexpr ModelKind kind = ModelKind::Kan;
  static constexpr int kInputs = 2;
  static constexpr int kOutputs = 2;

  explicit KanNetwork(KanArchitecture arch = {})
      : arch_(arch),
        grid1_(KnotGrid::uniform(arch.input_lo, arch.input_hi, arch.grid_intervals, arch.spline_order)),
        grid2_(KnotGrid::uniform(arch.hidden_lo, arch.hidden_hi, arch.grid_intervals, arch.spline_order)) {
    if (arch.hidden < 1) throw ConfigError("hidden width must be positive");
    params_.assign(static_cast<std::size_t>(edge_count() * edge_parameter_count()), 0.0);
  }

  /// Controls ~ Normal(0, 0.1), w_b = w_s = 1.
  static KanNetwork initialized(KanArchitecture arch, std::uint64_t seed) {
    KanNetwork net(arch);
    Rng rng(seed);
    for (int e = 0; e < net.edge_count(); ++e) {
      auto block = net.edge_block(e);
      for (int i = 0; i < net.control_count(); ++i) block[static_cast<std::size_t>(i)] = rng.normal(0.0, 0.1);
      block[static_cast<std::size_t>(net.control_count())] = 1.0;
      block[static_cast<std::size_t>(net.control_count() + 1)] = 1.0;
    }
    return net;
  }

  const KanArchitecture& architecture() const { return arch_; }
  int hidden() const { return arch_.hidden; }
  int order() const { return arch_.spline_order; }
  int control_count() const { return arch_.grid_intervals + 2 * arch_.spline_order + 1; }
  int edge_parameter_count() const { return control_count() + 2; }
  int layer_edge_count(int layer) const { return layer == 1 ? kInputs * arch_.hidden : arch_.hidden * kOutputs; }
  int edge_count() const { return layer_edge_count(1) + layer_edge_count(2); }
  std::size_t parameter_count() const { return params_.size(); }

  /// Global edge index of (layer, from, to).
  int edge_index(int layer, int from, int to) const {
    return layer == 1 ? from * arch_.hidden + to : layer_edge_count(1) + from * kOutputs + to;
  }

  std::span<double> edge_block(int edge) {
    return std::span<double>(params_).subspan(static_cast<std::size_t>(edge * edge_parameter_count()),
                                              static_cast<std::size_t>(edge_parameter_count()));
  }
  std::span<const double> edge_block(int edge) const {
    return std::span<const double>(params_).subspan(static_cast<std::size_t>(edge * edge_parameter_count()),
                                                    static_cast<std::size_t>(edge_parameter_count()));
  }

  const KnotGrid& grid(int layer) const { return layer == 1 ? grid1_ : grid2_; }

  /// Replaces the layer-2 knot range without touching parameters.
  void set_hidden_range(double lo, double hi) {
    grid2_ = KnotGrid::uniform(lo, hi, arch_.grid_intervals, arch_.spline_order);
    arch_.hidden_lo = lo;
    arch_.hidden_hi = hi;
  }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

 private:
  KanArchitecture arch_;
  KnotGrid grid1_;
  KnotGrid grid2_;
  std::vector<double> params_;
};

inline std::size_t kan_parameter_count(const KanArchitecture& arch) {
  const int per_edge = arch.grid_intervals + 2 * arch.spline_order + 1 + 2;
  return static_cast<std::size_t>(4 * arch.hidden * per_edge);
}

namespace detail {

/// One edge evaluated at one input with value and two input derivatives.
struct EdgeEval {
  double input = 0.0;
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  Silu base{};
  double spline = 0.0;
  double spline_d1 = 0.0;
  double spline_d2 = 0.0;
  LocalBasis basis{};
};

inline EdgeEval eval_edge(std::span<const double> block, const KnotGrid& grid, double x, int derivs) {
  EdgeEval e;
  e.input = x;
  const int nc = static_cast<int>(block.size()) - 2;
  const double wb = block[static_cast<std::size_t>(nc)];
  const double ws = block[static_cast<std::size_t>(nc + 1)];
  const int span = grid.order + 2;
  const double inv = 1.0 / span;
  e.basis = local_basis(grid, x, derivs);
  for (int j = 0; j < e.basis.count; ++j) {
    const int m = e.basis.first + j;
    double coeff = 0.0;
    for (int i = m; i < m + span; ++i) coeff += block[static_cast<std::size_t>(i)];
    coeff *= inv;
    e.spline += coeff * e.basis.ders[0][j];
    if (derivs >= 1) e.spline_d1 += coeff * e.basis.ders[1][j];
    if (derivs >= 2) e.spline_d2 += coeff * e.basis.ders[2][j];
  }
  e.base = silu(x);
  e.value = wb * e.base.value + ws * e.spline;
  e.d1 = wb * e.base.d1 + ws * e.spline_d1;
  e.d2 = wb * e.base.d2 + ws * e.spline_d2;
  return e;
}

/// Adds g_value * d(phi)/d(theta) + g_slope * d(phi')/d(theta) into grad.
inline void accumulate_edge_gradient(std::span<const double> block, const EdgeEval& e, double g_value,
                                     double g_slope, int order, std::span<double> grad) {
  const int nc = static_cast<int>(block.size()) - 2;
  const double ws = block[static_cast<std::size_t>(nc + 1)];
  grad[static_cast<std::size_t>(nc)] += g_value * e.base.value + g_slope * e.base.d1;
  grad[static_cast<std::size_t>(nc + 1)] += g_value * e.spline + g_slope * e.spline_d1;
  const int span = order + 2;
  const double inv = ws / span;
  for (int j = 0; j < e.basis.count; ++j) {
    const double w = inv * (g_value * e.basis.ders[0][j] + g_slope * e.basis.ders[1][j]);
    if (w == 0.0) continue;
    const int m = e.basis.first + j;
    for (int i = m; i < m + span; ++i) grad[static_cast<std::size_t>(i)] += w;
  }
}

/// Forward state of one sample, kept for the reverse pass.
struct KanTape {
  std::vector<EdgeEval> layer1;  // [j * H + h]
  std::vector<EdgeEval> layer2;  // [h * 2 + o]
  std::vector<double> hidden;    // a_h
  Complex out;
  InputJacobian jac;
};

inline void kan_run(const KanNetwork& net, Complex z, int derivs, KanTape& tape) {
  const int H = net.hidden();
  tape.layer1.resize(static_cast<std::size_t>(2 * H));
  tape.layer2.resize(static_cast<std::size_t>(2 * H));
  tape.hidden.assign(static_cast<std::size_t>(H), 0.0);
  const double in[2] = {z.real(), z.imag()};
  for (int j = 0; j < 2; ++j) {
    for (int h = 0; h < H; ++h) {
      const int idx = j * H + h;
      tape.layer1[static_cast<std::size_t>(idx)] =
          eval_edge(net.edge_block(net.edge_index(1, j, h)), net.grid(1), in[j], derivs);
      tape.hidden[static_cast<std::size_t>(h)] += tape.layer1[static_cast<std::size_t>(idx)].value;
    }
  }
  double out[2] = {0.0, 0.0};
  double jac[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  for (int h = 0; h < H; ++h) {
    for (int o = 0; o < 2; ++o) {
      const int idx = h * 2 + o;
      auto& e = tape.layer2[static_cast<std::size_t>(idx)];
      e = eval_edge(net.edge_block(net.edge_index(2, h, o)), net.grid(2), tape.hidden[static_cast<std::size_t>(h)],
                    derivs);
      out[o] += e.value;
      if (derivs >= 1) {
        for (int j = 0; j < 2; ++j) jac[o][j] += e.d1 * tape.layer1[static_cast<std::size_t>(j * H + h)].d1;
      }
    }
  }
  tape.out = {out[0], out[1]};
  tape.jac = {jac[0][0], jac[0][1], jac[1][0], jac[1][1]};
}

/// Reverse pass: g_out = dL/d(u, v), g_jac[o][j] = dL/dJ_oj. Returns dL/d(x, y).
inline Complex kan_backward(const KanNetwork& net, const KanTape& tape, const double g_out[2],
                            const double g_jac[2][2], std::span<double> grad) {
  const int H = net.hidden();
  const int k = net.order();
  const auto block_grad = [&](int edge) {
    return grad.subspan(static_cast<std::size_t>(edge * net.edge_parameter_count()),
                        static_cast<std::size_t>(net.edge_parameter_count()));
  };
  double g_in[2] = {0.0, 0.0};
  for (int h = 0; h < H; ++h) {
    double g_hidden = 0.0;
    double g_slope1[2] = {0.0, 0.0};  // dL/d(phi1_jh')
    for (int o = 0; o < 2; ++o) {
      const auto& e = tape.layer2[static_cast<std::size_t>(h * 2 + o)];
      double g_slope2 = 0.0;  // dL/d(phi2_ho')
      for (int j = 0; j < 2; ++j) {
        g_slope2 += g_jac[o][j] * tape.layer1[static_cast<std::size_t>(j * H + h)].d1;
        g_slope1[j] += g_jac[o][j] * e.d1;
      }
      const int edge = net.edge_index(2, h, o);
      accumulate_edge_gradient(net.edge_block(edge), e, g_out[o], g_slope2, k, block_grad(edge));
      g_hidden += g_out[o] * e.d1 + g_slope2 * e.d2;
    }
    for (int j = 0; j < 2; ++j) {
      const auto& e = tape.layer1[static_cast<std::size_t>(j * H + h)];
      const int edge = net.edge_index(1, j, h);
      accumulate_edge_gradient(net.edge_block(edge), e, g_hidden, g_slope1[j], k, block_grad(edge));
      g_in[j] += g_hidden * e.d1 + g_slope1[j] * e.d2;
    }
  }
  return {g_in[0], g_in[1]};
}

inline void require_finite(Complex v) {
  if (!is_finite(v)) throw NonFinite("network output is not finite");
}

}  // namespace detail

/// Scalar input/output pairs observed on every edge, indexed by global edge index.
struct EdgeTrace {
  std::vector<double> inputs;
  std::vector<double> outputs;
};

inline std::vector<Complex> forward(const KanNetwork& net, std::span<const Complex> batch,
                                    std::vector<EdgeTrace>* record = nullptr) {
  std::vector<Complex> out;
  out.reserve(batch.size());
  if (record) record->assign(static_cast<std::size_t>(net.edge_count()), {});
  detail::KanTape tape;
  const int H = net.hidden();
  for (Complex z : batch) {
    detail::kan_run(net, z, 0, tape);
    detail::require_finite(tape.out);
    out.push_back(tape.out);
    if (record) {
      for (int j = 0; j < 2; ++j)
        for (int h = 0; h < H; ++h) {
          auto& tr = (*record)[static_cast<std::size_t>(net.edge_index(1, j, h))];
          const auto& e = tape.layer1[static_cast<std::size_t>(j * H + h)];
          tr.inputs.push_back(e.input);
          tr.outputs.push_back(e.value);
        }
      for (int h = 0; h < H; ++h)
        for (int o = 0; o < 2; ++o) {
          auto& tr = (*record)[static_cast<std::size_t>(net.edge_index(2, h, o))];
          const auto& e = tape.layer2[static_cast<std::size_t>(h * 2 + o)];
          tr.inputs.push_back(e.input);
          tr.outputs.push_back(e.value);
        }
    }
  }
  return out;
}

inline Complex forward(const KanNetwork& net, Complex z) {
  thread_local detail::KanTape tape;
  detail::kan_run(net, z, 0, tape);
  return tape.out;
}

/// Outputs with exact input-Jacobians, propagated through silu' and the basis derivatives.
inline std::vector<FieldSample> forward_with_jacobian(const KanNetwork& net, std::span<const Complex> batch) {
  std::vector<FieldSample> out;
  out.reserve(batch.size());
  detail::KanTape tape;
  for (Complex z : batch) {
    detail::kan_run(net, z, 1, tape);
    detail::require_finite(tape.out);
    out.push_back({tape.out, tape.jac});
  }
  return out;
}

/// Hidden-node pre-activations a_h (the layer-2 edge inputs) at z.
inline std::vector<double> hidden_inputs(const KanNetwork& net, Complex z) {
  detail::KanTape tape;
  detail::kan_run(net, z, 0, tape);
  return tape.hidden;
}

/// Gradient of mse + lambda * cr over the batch with respect to every
/// parameter. The function differentiated is the forward-with-Jacobian map,
/// so the CR term contributes through second input-derivatives of each edge.
/// `grad` is overwritten.
inline LossBreakdown loss_gradient(const KanNetwork& net, std::span<const Complex> batch,
                                   std::span<const Complex> targets, double lambda, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  const double n = static_cast<double>(batch.size());
  LossBreakdown loss;
  loss.lambda = lambda;
  detail::KanTape tape;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    detail::kan_run(net, batch[s], 2, tape);
    detail::require_finite(tape.out);
    const double du = tape.out.real() - targets[s].real();
    const double dv = tape.out.imag() - targets[s].imag();
    loss.mse += du * du + dv * dv;
    const double r1 = tape.jac.ux - tape.jac.vy;
    const double r2 = tape.jac.uy + tape.jac.vx;
    loss.cr += r1 * r1 + r2 * r2;
    const double g_out[2] = {2.0 * du / n, 2.0 * dv / n};
    const double c = 2.0 * lambda / n;
    const double g_jac[2][2] = {{c * r1, c * r2}, {c * r2, -c * r1}};
    detail::kan_backward(net, tape, g_out, g_jac, grad);
  }
  loss.mse /= n;
  loss.cr /= n;
  loss.total = loss.mse + lambda * loss.cr;
  return loss;
}

/// Vector-Jacobian product at z: accumulates cotangent . d(out)/d(theta) into
/// grad and returns cotangent . d(out)/d(x, y).
inline Complex vjp(const KanNetwork& net, Complex z, Complex cotangent, std::span<double> grad) {
  detail::KanTape tape;
  detail::kan_run(net, z, 1, tape);
  const double g_out[2] = {cotangent.real(), cotangent.imag()};
  const double g_jac[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  return detail::kan_backward(net, tape, g_out, g_jac, grad);
}

/// Spline part of one edge, sum_i control_i * w_i(x), without scale.
inline double edge_spline(const KanNetwork& net, int edge, double x) {
  const int layer = edge < net.layer_edge_count(1) ? 1 : 2;
  return detail::eval_edge(net.edge_block(edge), net.grid(layer), x, 0).spline;
}

inline double edge_activation(const KanNetwork& net, int edge, double x) {
  const int layer = edge < net.layer_edge_count(1) ? 1 : 2;
  return detail::eval_edge(net.edge_block(edge), net.grid(layer), x, 0).value;
}

/// Re-expresses the layer-2 splines on a knot range matched to the observed
/// hidden pre-activations over `n` domain samples, padded by 10% of the
/// half-width on each side. Each edge's control values are refit by least
/// squares (minimum-norm) to its current curve over the new range.
inline void calibrate_hidden_grid(KanNetwork& net, const SystemSpec& spec, std::size_t n, std::uint64_t seed) {
  const auto samples = sample_domain(spec, n, seed);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Complex z : samples) {
    for (double a : hidden_inputs(net, z)) {
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
  }
  if (!(hi - lo >= 1e-9)) throw DegenerateRange("hidden pre-activations span a degenerate range");
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo) * 1.1;
  const double new_lo = center - half;
  const double new_hi = center + half;

  const KnotGrid new_grid =
      KnotGrid::uniform(new_lo, new_hi, net.architecture().grid_intervals, net.architecture().spline_order);
  const double fit_lo = new_lo;
  const double fit_hi = new_hi;
  constexpr int kFitPoints = 257;
  const int nc = net.control_count();
  const int span = net.order() + 2;

  Eigen::MatrixXd design(kFitPoints, nc);
  design.setZero();
  std::vector<double> xs(kFitPoints);
  for (int r = 0; r < kFitPoints; ++r) {
    xs[static_cast<std::size_t>(r)] = fit_lo + (fit_hi - fit_lo) * r / (kFitPoints - 1);
    const LocalBasis b = local_basis(new_grid, xs[static_cast<std::size_t>(r)], 0);
    for (int j = 0; j < b.count; ++j) {
      const int m = b.first + j;
      for (int i = m; i < m + span; ++i) design(r, i) += b.ders[0][j] / span;
    }
  }
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> solver(design);

  std::vector<Eigen::VectorXd> refit;
  for (int h = 0; h < net.hidden(); ++h) {
    for (int o = 0; o < 2; ++o) {
      const int edge = net.edge_index(2, h, o);
      Eigen::VectorXd target(kFitPoints);
      for (int r = 0; r < kFitPoints; ++r) target(r) = edge_spline(net, edge, xs[static_cast<std::size_t>(r)]);
      refit.push_back(solver.solve(target));
    }
  }
  net.set_hidden_range(new_lo, new_hi);
  std::size_t next = 0;
  for (int h = 0; h < net.hidden(); ++h) {
    for (int o = 0; o < 2; ++o) {
      auto block = net.edge_block(net.edge_index(2, h, o));
      const auto& q = refit[next++];
      for (int i = 0; i < nc; ++i) block[static_cast<std::size_t>(i)] = q(i);
    }
  }
}

}  // namespace holokan
