#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "holokan/integrator.hpp"
#include "holokan/model.hpp"
#include "holokan/systems.hpp"

namespace holokan {

/// Cell-center lattice over a square. Row-major: index = row * nx + col,
/// row 0 is the top (largest imaginary part), col 0 the left edge.
struct EvalGrid {
  int nx = 100;
  int ny = 100;
  SquareDomain domain{};

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }

  Complex point(int row, int col) const {
    const double hx = domain.width() / nx;
    const double hy = domain.width() / ny;
    return {domain.lo + (col + 0.5) * hx, domain.hi - (row + 0.5) * hy};
  }

  std::vector<Complex> points() const {
    std::vector<Complex> out;
    out.reserve(size());
    for (int r = 0; r < ny; ++r)
      for (int c = 0; c < nx; ++c) out.push_back(point(r, c));
    return out;
  }
};

/// Evaluates a field and its input-Jacobian over a batch.
using FieldEvaluator = std::function<std::vector<FieldSample>(std::span<const Complex>)>;

template <FieldModel M>
FieldEvaluator model_evaluator(const M& net) {
  return [&net](std::span<const Complex> batch) { return forward_with_jacobian(net, batch); };
}

template <FieldModel M>
VectorField model_field(const M& net) {
  return [&net](Complex z) { return forward(net, z); };
}

/// Analytic field with central finite-difference Jacobians.
inline FieldEvaluator analytic_evaluator(const SystemSpec& spec, double h = 1e-5) {
  return [spec, h](std::span<const Complex> batch) {
    std::vector<FieldSample> out;
    out.reserve(batch.size());
    for (Complex z : batch) {
      const Complex fx = (evaluate_unchecked(spec, z + Complex(h, 0)) - evaluate_unchecked(spec, z - Complex(h, 0))) / (2 * h);
      const Complex fy = (evaluate_unchecked(spec, z + Complex(0, h)) - evaluate_unchecked(spec, z - Complex(0, h))) / (2 * h);
      out.push_back({evaluate_unchecked(spec, z), {fx.real(), fy.real(), fx.imag(), fy.imag()}});
    }
    return out;
  };
}

struct FieldMetrics {
  double mse = 0.0;
  double r_squared = 0.0;
  double cr_residual = 0.0;
  double var_true = 0.0;
  std::size_t points = 0;
};

/// Accuracy of field `a` against the analytic reference over the grid cells
/// that lie outside the reference's exclusion disk.
///
/// mse is the per-point squared error summed over both components, and
/// var_true uses the same convention around the pooled mean m of all u and v
/// samples: (1/N) sum[(u - m)^2 + (v - m)^2]. Hence a constant prediction of
/// m + im scores R^2 = 0. cr_residual is the mean CR violation of `a`.
inline FieldMetrics evaluate_field(const FieldEvaluator& a, const SystemSpec& reference, const EvalGrid& grid) {
  std::vector<Complex> pts;
  for (Complex z : grid.points())
    if (!reference.excluded(z)) pts.push_back(z);
  if (pts.empty()) throw DegenerateVariance("evaluation grid has no admissible points");
  const auto samples = a(pts);
  FieldMetrics m;
  m.points = pts.size();
  std::vector<Complex> truth;
  truth.reserve(pts.size());
  double mean = 0.0;
  for (Complex z : pts) {
    truth.push_back(evaluate_unchecked(reference, z));
    mean += truth.back().real() + truth.back().imag();
  }
  const double n = static_cast<double>(pts.size());
  mean /= 2.0 * n;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    m.mse += std::norm(samples[i].value - truth[i]);
    const double du = truth[i].real() - mean;
    const double dv = truth[i].imag() - mean;
    m.var_true += du * du + dv * dv;
    m.cr_residual += cr_violation(samples[i].jacobian);
  }
  m.mse /= n;
  m.var_true /= n;
  m.cr_residual /= n;
  if (m.var_true < 1e-12) throw DegenerateVariance("reference field has (near) zero variance on the grid");
  m.r_squared = 1.0 - m.mse / m.var_true;
  return m;
}

enum class IterationMode { Direct, Euler };

inline std::string_view iteration_mode_name(IterationMode m) { return m == IterationMode::Direct ? "direct" : "euler"; }

inline IterationMode parse_iteration_mode(std::string_view s) {
  if (s == "direct") return IterationMode::Direct;
  if (s == "euler") return IterationMode::Euler;
  throw ConfigError("iteration mode must be direct or euler, got '" + std::string(s) + "'");
}

struct EscapeMask {
  int nx = 0;
  int ny = 0;
  int max_iter = 0;
  std::vector<std::uint8_t> escaped;
  std::vector<int> iterations;
};

/// Escape-time iteration from every cell center: z <- f(z) (direct) or
/// z <- z + f(z) (euler). The count records the first application after
/// which |z| > bailout (or z is non-finite); orbits still bounded after
/// max_iter - 1 applications keep the count max_iter and are not escaped.
inline EscapeMask escape_mask(const VectorField& f, const EvalGrid& grid, int max_iter = 50, double bailout = 2.0,
                              IterationMode mode = IterationMode::Direct) {
  if (max_iter < 1) throw ConfigError("max_iter must be at least 1");
  EscapeMask mask;
  mask.nx = grid.nx;
  mask.ny = grid.ny;
  mask.max_iter = max_iter;
  mask.escaped.assign(grid.size(), 0);
  mask.iterations.assign(grid.size(), max_iter);
  std::size_t idx = 0;
  for (int r = 0; r < grid.ny; ++r) {
    for (int c = 0; c < grid.nx; ++c, ++idx) {
      Complex z = grid.point(r, c);
      for (int k = 1; k < max_iter; ++k) {
        z = mode == IterationMode::Direct ? f(z) : z + f(z);
        if (!is_finite(z) || std::abs(z) > bailout) {
          mask.escaped[idx] = 1;
          mask.iterations[idx] = k;
          break;
        }
      }
    }
  }
  return mask;
}

/// Percentage of cells whose escaped flags agree.
inline double boundary_agreement(const EscapeMask& a, const EscapeMask& b) {
  if (a.nx != b.nx || a.ny != b.ny || a.escaped.size() != b.escaped.size())
    throw ResolutionMismatch("escape masks have different resolutions");
  if (a.escaped.empty()) return 100.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.escaped.size(); ++i) same += (a.escaped[i] == b.escaped[i]) ? 1 : 0;
  return 100.0 * static_cast<double>(same) / static_cast<double>(a.escaped.size());
}

enum class Stability { Chaotic, Stable };

inline std::string_view stability_name(Stability s) { return s == Stability::Chaotic ? "Chaotic" : "Stable"; }

struct LyapunovOptions {
  int n_iter = 50;
  double delta0 = 1e-8;
  double dt = 1.0;
  double bailout = 10.0;
  IterationMode mode = IterationMode::Direct;
};

struct LyapunovReport {
  double mean_lambda = 0.0;
  Stability classification = Stability::Stable;
  std::vector<double> exponents;  // NaN where no step was accumulated
  std::size_t counted = 0;
};

/// Perturbation-method Lyapunov exponents of the map z <- f(z) (direct) or
/// z <- z + dt f(z) (euler). Each step accumulates ln(separation / delta0)
/// and renormalizes the companion orbit back to delta0 along the current
/// separation. An orbit stops accumulating at the first step that leaves the
/// bailout radius. Per-cell exponent = accumulated sum / n_iter.
inline LyapunovReport lyapunov_grid(const VectorField& f, const EvalGrid& grid, const LyapunovOptions& opt = {}) {
  if (!(opt.delta0 > 0.0)) throw ConfigError("delta0 must be positive");
  if (opt.n_iter < 1) throw ConfigError("n_iter must be at least 1");
  const auto step = [&](Complex z) { return opt.mode == IterationMode::Direct ? f(z) : z + opt.dt * f(z); };
  LyapunovReport rep;
  rep.exponents.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
  double total = 0.0;
  std::size_t idx = 0;
  for (int r = 0; r < grid.ny; ++r) {
    for (int c = 0; c < grid.nx; ++c, ++idx) {
      Complex z = grid.point(r, c);
      Complex w = z + Complex(opt.delta0, 0.0);
      double sum = 0.0;
      int accumulated = 0;
      for (int k = 0; k < opt.n_iter; ++k) {
        const Complex zn = step(z);
        const Complex wn = step(w);
        if (!is_finite(zn) || !is_finite(wn) || std::abs(zn) > opt.bailout) break;
        const Complex sep = wn - zn;
        const double d = std::abs(sep);
        if (!(d > 0.0) || !std::isfinite(d)) break;
        sum += std::log(d / opt.delta0);
        ++accumulated;
        z = zn;
        w = zn + sep * (opt.delta0 / d);
      }
      if (accumulated > 0) {
        rep.exponents[idx] = sum / opt.n_iter;
        total += rep.exponents[idx];
        ++rep.counted;
      }
    }
  }
  rep.mean_lambda = rep.counted > 0 ? total / static_cast<double>(rep.counted) : 0.0;
  rep.classification = rep.mean_lambda > 0.0 ? Stability::Chaotic : Stability::Stable;
  return rep;
}

}  // namespace holokan
