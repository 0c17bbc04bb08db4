#pragma once

#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

#include "holokan/systems.hpp"

namespace holokan {

/// Partial derivatives of (u, v) with respect to (x, y) at one sample.
struct InputJacobian {
  double ux = 0.0;
  double uy = 0.0;
  double vx = 0.0;
  double vy = 0.0;
};

/// Squared Cauchy-Riemann violation (ux - vy)^2 + (uy + vx)^2.
inline double cr_violation(const InputJacobian& j) {
  const double a = j.ux - j.vy;
  const double b = j.uy + j.vx;
  return a * a + b * b;
}

struct FieldSample {
  Complex value;
  InputJacobian jacobian;
};

/// Loss terms of one batch: total = mse + lambda * cr.
struct LossBreakdown {
  double mse = 0.0;
  double cr = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

enum class ModelKind { Kan, Mlp };

inline std::string_view model_kind_name(ModelKind k) { return k == ModelKind::Kan ? "kan" : "mlp"; }

/// Networks the training loop can drive. Each model type provides free
/// functions found by argument-dependent lookup:
///   forward(model, batch)                       -> std::vector<Complex>
///   forward_with_jacobian(model, batch)         -> std::vector<FieldSample>
///   loss_gradient(model, batch, targets, lambda, grad) -> LossBreakdown
///   vjp(model, z, cotangent, grad)              -> Complex (d/dx + i d/dy)
template <class M>
concept FieldModel = requires(M m, const M& cm, std::span<const Complex> batch, std::span<double> grad,
                              Complex z) {
  { cm.parameter_count() } -> std::convertible_to<std::size_t>;
  { m.parameters() } -> std::convertible_to<std::span<double>>;
  { cm.parameters() } -> std::convertible_to<std::span<const double>>;
  { forward(cm, batch) } -> std::same_as<std::vector<Complex>>;
  { forward_with_jacobian(cm, batch) } -> std::same_as<std::vector<FieldSample>>;
  { loss_gradient(cm, batch, batch, 0.0, grad) } -> std::same_as<LossBreakdown>;
  { vjp(cm, z, z, grad) } -> std::same_as<Complex>;
  { M::kind } -> std::convertible_to<ModelKind>;
};

}  // namespace holokan
