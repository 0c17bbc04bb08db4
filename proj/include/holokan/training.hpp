#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <span>
#include <vector>

#include "holokan/integrator.hpp"
#include "holokan/kan.hpp"
#include "holokan/mlp.hpp"
#include "holokan/model.hpp"
#include "holokan/random.hpp"
#include "holokan/systems.hpp"

namespace holokan {

struct TrainConfig {
  double learning_rate = 1e-2;
  std::size_t batch_size = 128;
  int steps = 500;
  double lambda_max = 0.5;
  int warmup_steps = 100;
  double clip_norm = 1.0;
  int patience = 50;
  std::uint64_t seed = 42;
  double noise_level = 0.0;
  double improvement_tolerance = 1e-6;
  int calibration_step = 200;  // KAN only; -1 disables
  std::size_t calibration_samples = 2048;
  std::size_t monitor_samples = 512;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (steps < 0) throw ConfigError("steps must be non-negative");
    if (lambda_max < 0.0) throw ConfigError("lambda_max must be non-negative");
    if (warmup_steps < 0) throw ConfigError("warmup_steps must be non-negative");
    if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
    if (patience < 1) throw ConfigError("patience must be positive");
    if (patience > std::max(steps, 1)) throw ConfigError("patience must not exceed steps");
    if (noise_level < 0.0 || noise_level > 1.0) throw ConfigError("noise_level must lie in [0, 1]");
    if (improvement_tolerance < 0.0) throw ConfigError("improvement_tolerance must be non-negative");
    if (monitor_samples < 1) throw ConfigError("monitor_samples must be at least 1");
    if (calibration_step < -1) throw ConfigError("calibration_step must be -1 or a step index");
  }
};

struct LossReport {
  int step = 0;
  double mse = 0.0;
  double cr = 0.0;
  double lambda_cr = 0.0;
  double total = 0.0;
  double grad_norm_preclip = 0.0;
};

struct TrainHistory {
  std::vector<LossReport> reports;
  bool stopped_early = false;
  int best_step = -1;
  double best_monitor_mse = std::numeric_limits<double>::infinity();
};

template <class M>
struct TrainResult {
  M net;
  TrainHistory history;
};

inline double mse_loss(std::span<const Complex> pred, std::span<const Complex> target) {
  if (pred.size() != target.size() || pred.empty()) throw ConfigError("mse_loss needs equal, non-empty inputs");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += std::norm(pred[i] - target[i]);
  return acc / static_cast<double>(pred.size());
}

inline double cr_loss(std::span<const InputJacobian> jacobians) {
  if (jacobians.empty()) throw ConfigError("cr_loss needs a non-empty batch");
  double acc = 0.0;
  for (const auto& j : jacobians) acc += cr_violation(j);
  return acc / static_cast<double>(jacobians.size());
}

/// Linear ramp min(lambda_max, step / T_w * lambda_max); T_w = 0 means saturated.
inline double warmup_weight(int step, double lambda_max, int warmup_steps) {
  if (warmup_steps <= 0) return lambda_max;
  return std::min(lambda_max, static_cast<double>(step) / warmup_steps * lambda_max);
}

inline double warmup_weight(int step, const TrainConfig& config) {
  return warmup_weight(step, config.lambda_max, config.warmup_steps);
}

inline double l2_norm(std::span<const double> g) {
  double acc = 0.0;
  for (double x : g) acc += x * x;
  return std::sqrt(acc);
}

/// Rescales g in place to norm max_norm when it is longer. Returns the original norm.
inline double clip_gradient(std::span<double> g, double max_norm) {
  const double norm = l2_norm(g);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& x : g) x *= scale;
  }
  return norm;
}

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update of params in place.
inline void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad, double lr) {
  if (state.m.size() != params.size() || grad.size() != params.size())
    throw ConfigError("adam_step shape mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

/// Adds Normal(0, (level * rms)^2) to each component, where rms is that
/// component's root-mean-square over `targets`.
inline std::vector<Complex> inject_noise(std::span<const Complex> targets, double level, Rng& rng) {
  std::vector<Complex> out(targets.begin(), targets.end());
  if (level == 0.0 || targets.empty()) return out;
  double su = 0.0;
  double sv = 0.0;
  for (Complex t : targets) {
    su += t.real() * t.real();
    sv += t.imag() * t.imag();
  }
  const double n = static_cast<double>(targets.size());
  const double sigma_u = level * std::sqrt(su / n);
  const double sigma_v = level * std::sqrt(sv / n);
  for (Complex& t : out) {
    const double du = rng.normal(0.0, sigma_u);
    const double dv = rng.normal(0.0, sigma_v);
    t += Complex(du, dv);
  }
  return out;
}

inline std::vector<Complex> inject_noise(std::span<const Complex> targets, double level, std::uint64_t seed) {
  Rng rng(seed);
  return inject_noise(targets, level, rng);
}

/// Whether the CR penalty is applied to a model type during training.
/// The MLP baseline is fit on velocities alone.
template <class M>
inline constexpr bool kTrainsWithCr = M::kind == ModelKind::Kan;

namespace detail {

template <FieldModel M>
TrainResult<M> run_training(const SystemSpec& spec, M net, const TrainConfig& config, bool saturated_warmup,
                            int calibrate_at) {
  config.validate();
  Rng sampler(config.seed);
  Rng noise_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  const auto monitor = sample_domain(spec, config.monitor_samples, config.seed ^ 0xD1B54A32D192ED03ULL);
  const auto monitor_targets = velocities(spec, monitor);
  AdamState adam(net.parameter_count());
  std::vector<double> grad(net.parameter_count());
  std::vector<double> best_params(net.parameters().begin(), net.parameters().end());
  double best_mse = std::numeric_limits<double>::infinity();
  int since_best = 0;
  const int tracking_from = saturated_warmup ? 0 : config.warmup_steps;

  TrainHistory history;
  for (int step = 0; step < config.steps; ++step) {
    if constexpr (M::kind == ModelKind::Kan) {
      if (step == calibrate_at) {
        calibrate_hidden_grid(net, spec, config.calibration_samples, config.seed);
        adam = AdamState(net.parameter_count());
        best_mse = std::numeric_limits<double>::infinity();
        since_best = 0;
      }
    }
    const auto batch = sample_domain(spec, config.batch_size, sampler);
    const auto clean = velocities(spec, batch);
    const auto targets = inject_noise(clean, config.noise_level, noise_rng);

    double lambda = 0.0;
    if constexpr (kTrainsWithCr<M>) {
      lambda = saturated_warmup ? config.lambda_max : warmup_weight(step, config);
    }
    LossBreakdown loss;
    try {
      loss = loss_gradient(net, batch, targets, lambda, grad);
    } catch (const NonFinite& e) {
      throw Diverged(std::string("training diverged at step ") + std::to_string(step) + ": " + e.what());
    }
    if (!std::isfinite(loss.total)) throw Diverged("training loss became non-finite at step " + std::to_string(step));

    LossReport report;
    report.step = step;
    report.mse = loss.mse;
    report.cr = loss.cr;
    report.lambda_cr = lambda;
    report.total = loss.total;
    report.grad_norm_preclip = clip_gradient(grad, config.clip_norm);
    if (!std::isfinite(report.grad_norm_preclip)) throw Diverged("gradient became non-finite at step " + std::to_string(step));
    history.reports.push_back(report);

    if (step >= tracking_from) {
      const double monitor_mse = mse_loss(forward(net, monitor), monitor_targets);
      if (monitor_mse < best_mse - config.improvement_tolerance) {
        best_mse = monitor_mse;
        history.best_monitor_mse = monitor_mse;
        history.best_step = step;
        std::copy(net.parameters().begin(), net.parameters().end(), best_params.begin());
        since_best = 0;
      } else if (++since_best >= config.patience) {
        history.stopped_early = true;
        std::copy(best_params.begin(), best_params.end(), net.parameters().begin());
        break;
      }
    }
    adam_step(adam, net.parameters(), grad, config.learning_rate);
  }
  return {std::move(net), std::move(history)};
}

}  // namespace detail

/// Supervised velocity matching: every step draws a fresh batch, fits
/// mse + lambda(t) * cr with clipped Adam, and stops early once the velocity
/// MSE on a fixed monitor sample has not improved for `patience` steps after
/// warmup, restoring the best parameters seen. A KAN has its hidden knot range
/// calibrated once, at `calibration_step`, after which Adam restarts and
/// best-parameter tracking starts over.
template <FieldModel M>
TrainResult<M> train(const SystemSpec& spec, M net, const TrainConfig& config) {
  return detail::run_training(spec, std::move(net), config, false, config.calibration_step);
}

/// Continues training on a new system with fresh Adam moments and the CR
/// weight held at lambda_max from the first step.
template <FieldModel M>
TrainResult<M> fine_tune(const SystemSpec& target, M net, int steps, TrainConfig config) {
  config.steps = steps;
  config.patience = std::min(config.patience, std::max(steps, 1));
  return detail::run_training(target, std::move(net), config, true, -1);
}

struct TrajectoryLoss {
  double value = 0.0;
  std::vector<double> gradient;
};

/// Mean squared distance between RK4 trajectories under the network and under
/// the analytic field, sampled after every step of size dt up to `horizon`.
/// A trajectory pair is cut at the first step where either state leaves the
/// bailout radius; later samples contribute nothing. The gradient is obtained
/// by differentiating through every integrator step.
template <FieldModel M>
TrajectoryLoss trajectory_loss(const M& net, const SystemSpec& spec, std::span<const Complex> initial,
                               double horizon, double dt, double bailout = 10.0) {
  if (!(dt > 0.0) || horizon < dt) throw ConfigError("trajectory loss needs dt > 0 and horizon >= dt");
  if (initial.empty()) throw ConfigError("trajectory loss needs at least one initial point");
  const int n = static_cast<int>(std::lround(horizon / dt));
  const auto model_field = [&](Complex z) { return forward(net, z); };
  const auto true_field = [&](Complex z) { return evaluate_unchecked(spec, z); };
  const double norm = 1.0 / (static_cast<double>(initial.size()) * n);
  const auto inside = [bailout](Complex s) { return is_finite(s) && std::abs(s) <= bailout; };

  TrajectoryLoss out;
  out.gradient.assign(net.parameter_count(), 0.0);
  std::vector<Complex> states(static_cast<std::size_t>(n + 1));
  std::vector<Complex> truth(static_cast<std::size_t>(n + 1));
  for (Complex z0 : initial) {
    states[0] = z0;
    truth[0] = z0;
    int kept = 0;
    while (kept < n) {
      const Complex s = rk4_step(model_field, states[static_cast<std::size_t>(kept)], dt);
      const Complex t = rk4_step(true_field, truth[static_cast<std::size_t>(kept)], dt);
      if (!inside(s) || !inside(t)) break;
      ++kept;
      states[static_cast<std::size_t>(kept)] = s;
      truth[static_cast<std::size_t>(kept)] = t;
      out.value += norm * std::norm(s - t);
    }
    if (kept == 0) continue;
    // Reverse sweep; adjoint holds dL/d(state_{k+1}).
    Complex adjoint = 2.0 * norm * (states[static_cast<std::size_t>(kept)] - truth[static_cast<std::size_t>(kept)]);
    for (int k = kept - 1; k >= 0; --k) {
      const Complex s = states[static_cast<std::size_t>(k)];
      const Complex k1 = forward(net, s);
      const Complex p2 = s + 0.5 * dt * k1;
      const Complex k2 = forward(net, p2);
      const Complex p3 = s + 0.5 * dt * k2;
      const Complex k3 = forward(net, p3);
      const Complex p4 = s + dt * k3;
      Complex g_s = adjoint;
      Complex g_k1 = dt / 6.0 * adjoint;
      Complex g_k2 = dt / 3.0 * adjoint;
      Complex g_k3 = dt / 3.0 * adjoint;
      const Complex g_k4 = dt / 6.0 * adjoint;
      const Complex g_p4 = vjp(net, p4, g_k4, out.gradient);
      g_s += g_p4;
      g_k3 += dt * g_p4;
      const Complex g_p3 = vjp(net, p3, g_k3, out.gradient);
      g_s += g_p3;
      g_k2 += 0.5 * dt * g_p3;
      const Complex g_p2 = vjp(net, p2, g_k2, out.gradient);
      g_s += g_p2;
      g_k1 += 0.5 * dt * g_p2;
      g_s += vjp(net, s, g_k1, out.gradient);
      adjoint = g_s;
      if (k > 0) adjoint += 2.0 * norm * (s - truth[static_cast<std::size_t>(k)]);
    }
  }
  return out;
}

struct TrajectoryConfig {
  double horizon = 0.5;
  double dt = 0.05;
  std::size_t initial_points = 16;
  double bailout = 10.0;

  void validate() const {
    if (!(dt > 0.0) || horizon < dt) throw ConfigError("trajectory training needs dt > 0 and horizon >= dt");
    if (initial_points < 1) throw ConfigError("trajectory training needs at least one initial point");
    if (!(bailout > 0.0)) throw ConfigError("trajectory bailout must be positive");
  }
};

/// Neural-ODE style fitting: each step draws initial points whose true RK4
/// trajectory stays inside the bailout radius, and descends the trajectory
/// loss with clipped Adam for config.steps steps. Reports carry the
/// trajectory loss in both `mse` and `total`.
template <FieldModel M>
TrainResult<M> train_on_trajectories(const SystemSpec& spec, M net, const TrainConfig& config,
                                     const TrajectoryConfig& traj) {
  config.validate();
  traj.validate();
  Rng sampler(config.seed);
  AdamState adam(net.parameter_count());
  const auto truth = [&spec](Complex z) { return evaluate_unchecked(spec, z); };
  TrainHistory history;
  for (int step = 0; step < config.steps; ++step) {
    std::vector<Complex> initial;
    int attempts = 0;
    while (initial.size() < traj.initial_points) {
      if (++attempts > 1000 * static_cast<int>(traj.initial_points))
        throw Diverged("no initial point keeps the true trajectory inside the bailout radius");
      const Complex z0 = sample_domain(spec, 1, sampler).front();
      if (!integrate_trajectory(truth, z0, traj.horizon, traj.dt, traj.bailout).diverged) initial.push_back(z0);
    }
    auto loss = trajectory_loss(net, spec, initial, traj.horizon, traj.dt, traj.bailout);
    if (!std::isfinite(loss.value)) throw Diverged("trajectory loss became non-finite at step " + std::to_string(step));
    LossReport report;
    report.step = step;
    report.mse = loss.value;
    report.total = loss.value;
    report.grad_norm_preclip = clip_gradient(loss.gradient, config.clip_norm);
    history.reports.push_back(report);
    adam_step(adam, net.parameters(), loss.gradient, config.learning_rate);
  }
  history.best_step = config.steps - 1;
  return {std::move(net), std::move(history)};
}

}  // namespace holokan
