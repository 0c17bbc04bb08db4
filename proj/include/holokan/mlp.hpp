#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "holokan/model.hpp"
#include "holokan/random.hpp"

namespace holokan {

/// Dense 2 -> H -> H -> 2 baseline with tanh hidden activations and a linear output.
///
/// Flat parameter order (weights row-major, [out][in]):
///   W1 (H x 2), b1 (H), W2 (H x H), b2 (H), W3 (2 x H), b3 (2).
class MlpNetwork {
 public:
  static constexpr ModelKind kind = ModelKind::Mlp;

  explicit MlpNetwork(int hidden = 64) : hidden_(hidden) {
    if (hidden < 1) throw ConfigError("hidden width must be positive");
    params_.assign(parameter_count_for(hidden), 0.0);
  }

  /// Weights and biases ~ Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static MlpNetwork initialized(int hidden, std::uint64_t seed) {
    MlpNetwork net(hidden);
    Rng rng(seed);
    const auto fill = [&](std::span<double> s, int fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (double& w : s) w = rng.uniform(-bound, bound);
    };
    fill(net.w1(), 2);
    fill(net.b1(), 2);
    fill(net.w2(), hidden);
    fill(net.b2(), hidden);
    fill(net.w3(), hidden);
    fill(net.b3(), hidden);
    return net;
  }

  static std::size_t parameter_count_for(int h) {
    const auto H = static_cast<std::size_t>(h);
    return 2 * H + H + H * H + H + 2 * H + 2;
  }

  int hidden() const { return hidden_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::size_t off_w1() const { return 0; }
  std::size_t off_b1() const { return off_w1() + 2 * h(); }
  std::size_t off_w2() const { return off_b1() + h(); }
  std::size_t off_b2() const { return off_w2() + h() * h(); }
  std::size_t off_w3() const { return off_b2() + h(); }
  std::size_t off_b3() const { return off_w3() + 2 * h(); }

  std::span<double> w1() { return parameters().subspan(off_w1(), 2 * h()); }
  std::span<double> b1() { return parameters().subspan(off_b1(), h()); }
  std::span<double> w2() { return parameters().subspan(off_w2(), h() * h()); }
  std::span<double> b2() { return parameters().subspan(off_b2(), h()); }
  std::span<double> w3() { return parameters().subspan(off_w3(), 2 * h()); }
  std::span<double> b3() { return parameters().subspan(off_b3(), 2); }

 private:
  std::size_t h() const { return static_cast<std::size_t>(hidden_); }

  int hidden_;
  std::vector<double> params_;
};

namespace detail {

struct MlpTape {
  std::vector<double> h1, h2;            // activations
  std::vector<double> dz1[2], dh1[2];    // tangents along x and y
  std::vector<double> dz2[2], dh2[2];
  Complex out;
  InputJacobian jac;
};

inline void mlp_run(const MlpNetwork& net, Complex z, bool tangents, MlpTape& t) {
  const std::size_t H = static_cast<std::size_t>(net.hidden());
  const auto p = net.parameters();
  const double* W1 = p.data() + net.off_w1();
  const double* B1 = p.data() + net.off_b1();
  const double* W2 = p.data() + net.off_w2();
  const double* B2 = p.data() + net.off_b2();
  const double* W3 = p.data() + net.off_w3();
  const double* B3 = p.data() + net.off_b3();
  const double x[2] = {z.real(), z.imag()};

  t.h1.resize(H);
  t.h2.resize(H);
  for (std::size_t i = 0; i < H; ++i) t.h1[i] = std::tanh(W1[2 * i] * x[0] + W1[2 * i + 1] * x[1] + B1[i]);
  for (std::size_t i = 0; i < H; ++i) {
    double acc = B2[i];
    const double* row = W2 + i * H;
    for (std::size_t k = 0; k < H; ++k) acc += row[k] * t.h1[k];
    t.h2[i] = std::tanh(acc);
  }
  double out[2];
  for (std::size_t o = 0; o < 2; ++o) {
    double acc = B3[o];
    for (std::size_t k = 0; k < H; ++k) acc += W3[o * H + k] * t.h2[k];
    out[o] = acc;
  }
  t.out = {out[0], out[1]};
  if (!tangents) return;

  double jac[2][2];
  for (int j = 0; j < 2; ++j) {
    auto& dz1 = t.dz1[j];
    auto& dh1 = t.dh1[j];
    auto& dz2 = t.dz2[j];
    auto& dh2 = t.dh2[j];
    dz1.resize(H);
    dh1.resize(H);
    dz2.resize(H);
    dh2.resize(H);
    for (std::size_t i = 0; i < H; ++i) {
      dz1[i] = W1[2 * i + static_cast<std::size_t>(j)];
      dh1[i] = (1.0 - t.h1[i] * t.h1[i]) * dz1[i];
    }
    for (std::size_t i = 0; i < H; ++i) {
      double acc = 0.0;
      const double* row = W2 + i * H;
      for (std::size_t k = 0; k < H; ++k) acc += row[k] * dh1[k];
      dz2[i] = acc;
      dh2[i] = (1.0 - t.h2[i] * t.h2[i]) * acc;
    }
    for (std::size_t o = 0; o < 2; ++o) {
      double acc = 0.0;
      for (std::size_t k = 0; k < H; ++k) acc += W3[o * H + k] * dh2[k];
      jac[o][j] = acc;
    }
  }
  t.jac = {jac[0][0], jac[0][1], jac[1][0], jac[1][1]};
}

/// Reverse pass through the value and (optionally) tangent channels.
inline Complex mlp_backward(const MlpNetwork& net, const MlpTape& t, Complex z, const double g_out[2],
                            const double g_jac[2][2], bool tangents, std::span<double> grad) {
  const std::size_t H = static_cast<std::size_t>(net.hidden());
  const auto p = net.parameters();
  const double* W1 = p.data() + net.off_w1();
  const double* W2 = p.data() + net.off_w2();
  const double* W3 = p.data() + net.off_w3();
  double* gW1 = grad.data() + net.off_w1();
  double* gB1 = grad.data() + net.off_b1();
  double* gW2 = grad.data() + net.off_w2();
  double* gB2 = grad.data() + net.off_b2();
  double* gW3 = grad.data() + net.off_w3();
  double* gB3 = grad.data() + net.off_b3();
  const double x[2] = {z.real(), z.imag()};

  std::vector<double> g_h2(H), g_z2(H), g_h1(H), g_z1(H);
  std::vector<double> g_dh2[2], g_dz2[2], g_dh1[2], g_dz1[2];

  for (std::size_t o = 0; o < 2; ++o) {
    gB3[o] += g_out[o];
    for (std::size_t k = 0; k < H; ++k) {
      double g = g_out[o] * t.h2[k];
      if (tangents) g += g_jac[o][0] * t.dh2[0][k] + g_jac[o][1] * t.dh2[1][k];
      gW3[o * H + k] += g;
    }
  }
  for (std::size_t k = 0; k < H; ++k) g_h2[k] = W3[k] * g_out[0] + W3[H + k] * g_out[1];
  if (tangents) {
    for (int j = 0; j < 2; ++j) {
      g_dh2[j].resize(H);
      for (std::size_t k = 0; k < H; ++k) g_dh2[j][k] = W3[k] * g_jac[0][j] + W3[H + k] * g_jac[1][j];
    }
  }

  for (std::size_t i = 0; i < H; ++i) {
    const double s = 1.0 - t.h2[i] * t.h2[i];
    double g = g_h2[i] * s;
    if (tangents) {
      const double ds = -2.0 * t.h2[i] * s;  // d(s)/d(z2)
      g += (g_dh2[0][i] * t.dz2[0][i] + g_dh2[1][i] * t.dz2[1][i]) * ds;
    }
    g_z2[i] = g;
  }
  if (tangents) {
    for (int j = 0; j < 2; ++j) {
      g_dz2[j].resize(H);
      for (std::size_t i = 0; i < H; ++i) g_dz2[j][i] = g_dh2[j][i] * (1.0 - t.h2[i] * t.h2[i]);
    }
  }
  std::fill(g_h1.begin(), g_h1.end(), 0.0);
  if (tangents) {
    for (int j = 0; j < 2; ++j) g_dh1[j].assign(H, 0.0);
  }
  for (std::size_t i = 0; i < H; ++i) {
    gB2[i] += g_z2[i];
    double* grow = gW2 + i * H;
    const double* row = W2 + i * H;
    for (std::size_t k = 0; k < H; ++k) {
      double g = g_z2[i] * t.h1[k];
      if (tangents) g += g_dz2[0][i] * t.dh1[0][k] + g_dz2[1][i] * t.dh1[1][k];
      grow[k] += g;
      g_h1[k] += row[k] * g_z2[i];
      if (tangents) {
        g_dh1[0][k] += row[k] * g_dz2[0][i];
        g_dh1[1][k] += row[k] * g_dz2[1][i];
      }
    }
  }

  double g_in[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < H; ++i) {
    const double s = 1.0 - t.h1[i] * t.h1[i];
    double g = g_h1[i] * s;
    double g_dz1_x = 0.0;
    double g_dz1_y = 0.0;
    if (tangents) {
      const double ds = -2.0 * t.h1[i] * s;
      g += (g_dh1[0][i] * t.dz1[0][i] + g_dh1[1][i] * t.dz1[1][i]) * ds;
      g_dz1_x = g_dh1[0][i] * s;
      g_dz1_y = g_dh1[1][i] * s;
    }
    g_z1[i] = g;
    gB1[i] += g;
    gW1[2 * i] += g * x[0] + g_dz1_x;
    gW1[2 * i + 1] += g * x[1] + g_dz1_y;
    g_in[0] += W1[2 * i] * g;
    g_in[1] += W1[2 * i + 1] * g;
  }
  return {g_in[0], g_in[1]};
}

}  // namespace detail

inline std::vector<Complex> forward(const MlpNetwork& net, std::span<const Complex> batch) {
  std::vector<Complex> out;
  out.reserve(batch.size());
  detail::MlpTape tape;
  for (Complex z : batch) {
    detail::mlp_run(net, z, false, tape);
    if (!is_finite(tape.out)) throw NonFinite("network output is not finite");
    out.push_back(tape.out);
  }
  return out;
}

inline Complex forward(const MlpNetwork& net, Complex z) {
  thread_local detail::MlpTape tape;
  detail::mlp_run(net, z, false, tape);
  return tape.out;
}

inline std::vector<FieldSample> forward_with_jacobian(const MlpNetwork& net, std::span<const Complex> batch) {
  std::vector<FieldSample> out;
  out.reserve(batch.size());
  detail::MlpTape tape;
  for (Complex z : batch) {
    detail::mlp_run(net, z, true, tape);
    if (!is_finite(tape.out)) throw NonFinite("network output is not finite");
    out.push_back({tape.out, tape.jac});
  }
  return out;
}

/// Gradient of mse + lambda * cr. With lambda == 0 the tangent channels are
/// skipped and the reported cr is 0.
inline LossBreakdown loss_gradient(const MlpNetwork& net, std::span<const Complex> batch,
                                   std::span<const Complex> targets, double lambda, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  const double n = static_cast<double>(batch.size());
  const bool tangents = lambda != 0.0;
  LossBreakdown loss;
  loss.lambda = lambda;
  detail::MlpTape tape;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    detail::mlp_run(net, batch[s], tangents, tape);
    if (!is_finite(tape.out)) throw NonFinite("network output is not finite");
    const double du = tape.out.real() - targets[s].real();
    const double dv = tape.out.imag() - targets[s].imag();
    loss.mse += du * du + dv * dv;
    const double g_out[2] = {2.0 * du / n, 2.0 * dv / n};
    double g_jac[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    if (tangents) {
      const double r1 = tape.jac.ux - tape.jac.vy;
      const double r2 = tape.jac.uy + tape.jac.vx;
      loss.cr += r1 * r1 + r2 * r2;
      const double c = 2.0 * lambda / n;
      g_jac[0][0] = c * r1;
      g_jac[0][1] = c * r2;
      g_jac[1][0] = c * r2;
      g_jac[1][1] = -c * r1;
    }
    detail::mlp_backward(net, tape, batch[s], g_out, g_jac, tangents, grad);
  }
  loss.mse /= n;
  loss.cr /= n;
  loss.total = loss.mse + lambda * loss.cr;
  return loss;
}

inline Complex vjp(const MlpNetwork& net, Complex z, Complex cotangent, std::span<double> grad) {
  detail::MlpTape tape;
  detail::mlp_run(net, z, false, tape);
  const double g_out[2] = {cotangent.real(), cotangent.imag()};
  const double g_jac[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  return detail::mlp_backward(net, tape, z, g_out, g_jac, false, grad);
}

}  // namespace holokan
