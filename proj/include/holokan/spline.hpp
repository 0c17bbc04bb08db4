#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "holokan/error.hpp"

namespace holokan {

/// Uniform extended knot grid for B-splines of order k on G intervals.
///
/// The grid spans [lo, hi] with G equal intervals and is extended k steps
/// beyond each end, giving G + 2k + 1 knots and G + k basis functions.
struct KnotGrid {
  static constexpr int kMaxOrder = 7;

  double lo = -1.0;
  double hi = 1.0;
  int intervals = 5;
  int order = 3;
  std::vector<double> knots;

  static KnotGrid uniform(double lo, double hi, int intervals, int order) {
    if (!(lo < hi)) throw DegenerateRange("knot range requires lo < hi");
    if (intervals < 1) throw ConfigError("knot grid needs at least one interval");
    if (order < 0 || order > kMaxOrder) throw ConfigError("spline order out of supported range");
    KnotGrid g;
    g.lo = lo;
    g.hi = hi;
    g.intervals = intervals;
    g.order = order;
    const int count = intervals + 2 * order + 1;
    g.knots.resize(static_cast<std::size_t>(count));
    const double h = (hi - lo) / intervals;
    for (int i = 0; i < count; ++i) g.knots[static_cast<std::size_t>(i)] = lo + (i - order) * h;
    // Pin the interior endpoints so clamped evaluation lands exactly on them.
    g.knots[static_cast<std::size_t>(order)] = lo;
    g.knots[static_cast<std::size_t>(order + intervals)] = hi;
    return g;
  }

  int knot_count() const { return intervals + 2 * order + 1; }
  int basis_count() const { return intervals + order; }
  double step() const { return (hi - lo) / intervals; }
};

/// The k + 1 basis functions that are nonzero at one abscissa, together with
/// their first and second derivatives.
struct LocalBasis {
  int first = 0;  // global index of values[0]
  int count = 0;  // order + 1
  std::array<std::array<double, KnotGrid::kMaxOrder + 1>, 3> ders{};  // [derivative][local index]
};

/// Cox-de Boor evaluation of the nonzero basis functions and up to
/// `max_derivative` (<= 2) derivatives. x is clamped to [lo, hi]; derivatives
/// vanish when x lies strictly outside the range.
inline LocalBasis local_basis(const KnotGrid& grid, double x, int max_derivative = 0) {
  const int p = grid.order;
  const int n = std::min(max_derivative, p);
  const bool outside = x < grid.lo || x > grid.hi;
  const double u = std::clamp(x, grid.lo, grid.hi);
  const auto& U = grid.knots;

  int interval = static_cast<int>(std::floor((u - grid.lo) / grid.step()));
  interval = std::clamp(interval, 0, grid.intervals - 1);
  const int span = interval + p;

  constexpr int M = KnotGrid::kMaxOrder + 1;
  std::array<std::array<double, M>, M> ndu{};
  std::array<double, M> left{};
  std::array<double, M> right{};
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = u - U[static_cast<std::size_t>(span + 1 - j)];
    right[j] = U[static_cast<std::size_t>(span + j)] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }

  LocalBasis out;
  out.first = span - p;
  out.count = p + 1;
  for (int j = 0; j <= p; ++j) out.ders[0][j] = ndu[j][p];
  if (n == 0 || outside) return out;

  std::array<std::array<double, M>, 2> a{};
  for (int r = 0; r <= p; ++r) {
    int s1 = 0;
    int s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= n; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      out.ders[k][r] = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= n; ++k) {
    for (int j = 0; j <= p; ++j) out.ders[k][j] *= factor;
    factor *= (p - k);
  }
  return out;
}

/// All G + k basis values at x (x clamped to the knot range).
inline std::vector<double> basis_values(const KnotGrid& grid, double x) {
  std::vector<double> values(static_cast<std::size_t>(grid.basis_count()), 0.0);
  const LocalBasis b = local_basis(grid, x, 0);
  for (int j = 0; j < b.count; ++j) values[static_cast<std::size_t>(b.first + j)] = b.ders[0][j];
  return values;
}

/// All G + k basis derivatives at x; zero outside the knot range.
inline std::vector<double> basis_derivatives(const KnotGrid& grid, double x) {
  std::vector<double> values(static_cast<std::size_t>(grid.basis_count()), 0.0);
  const LocalBasis b = local_basis(grid, x, 1);
  for (int j = 0; j < b.count; ++j) values[static_cast<std::size_t>(b.first + j)] = b.ders[1][j];
  return values;
}

}  // namespace holokan
