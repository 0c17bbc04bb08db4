#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "holokan/spline.hpp"

using namespace holokan;
using Catch::Approx;

namespace {

// Textbook recursive Cox-de Boor on an arbitrary knot vector.
double cox_de_boor(const std::vector<double>& t, int i, int p, double x) {
  if (p == 0) return (t[i] <= x && x < t[i + 1]) ? 1.0 : 0.0;
  double left = 0.0;
  double right = 0.0;
  if (t[i + p] != t[i]) left = (x - t[i]) / (t[i + p] - t[i]) * cox_de_boor(t, i, p - 1, x);
  if (t[i + p + 1] != t[i + 1]) right = (t[i + p + 1] - x) / (t[i + p + 1] - t[i + 1]) * cox_de_boor(t, i + 1, p - 1, x);
  return left + right;
}

}  // namespace

TEST_CASE("knot grid layout") {
  const auto g = KnotGrid::uniform(-2.5, 2.5, 5, 3);
  CHECK(g.knot_count() == 12);
  CHECK(g.knots.size() == 12);
  CHECK(g.basis_count() == 8);
  CHECK(g.knots[3] == -2.5);
  CHECK(g.knots[8] == 2.5);
  CHECK(g.knots[0] == Approx(-5.5));
  CHECK(g.knots[11] == Approx(5.5));
}

TEST_CASE("invalid grids are rejected") {
  CHECK_THROWS_AS(KnotGrid::uniform(1.0, 1.0, 5, 3), DegenerateRange);
  CHECK_THROWS_AS(KnotGrid::uniform(2.0, 1.0, 5, 3), DegenerateRange);
  CHECK_THROWS_AS(KnotGrid::uniform(-1.0, 1.0, 0, 3), ConfigError);
  CHECK_THROWS_AS(KnotGrid::uniform(-1.0, 1.0, 5, 8), ConfigError);
}

TEST_CASE("basis values match recursive Cox-de Boor") {
  for (int order : {0, 1, 2, 3, 4}) {
    for (int G : {1, 3, 5, 10}) {
      const auto g = KnotGrid::uniform(-1.3, 2.1, G, order);
      for (int s = 0; s < 97; ++s) {
        const double x = -1.3 + 3.4 * (s + 0.37) / 97.0;
        const auto values = basis_values(g, x);
        REQUIRE(values.size() == static_cast<std::size_t>(G + order));
        for (int i = 0; i < G + order; ++i)
          CHECK(values[static_cast<std::size_t>(i)] == Approx(cox_de_boor(g.knots, i, order, x)).margin(1e-12));
      }
    }
  }
}

TEST_CASE("partition of unity and non-negativity inside the range") {
  const auto g = KnotGrid::uniform(-2.5, 2.5, 5, 3);
  for (int s = 0; s <= 400; ++s) {
    const double x = -2.5 + 5.0 * s / 400.0;
    double sum = 0.0;
    for (double v : basis_values(g, x)) {
      CHECK(v >= -1e-15);
      sum += v;
    }
    CHECK(sum == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("upper endpoint evaluates on the last interval") {
  const auto g = KnotGrid::uniform(0.0, 1.0, 4, 3);
  const auto at_end = basis_values(g, 1.0);
  const auto near_end = basis_values(g, 1.0 - 1e-12);
  for (std::size_t i = 0; i < at_end.size(); ++i) CHECK(at_end[i] == Approx(near_end[i]).margin(1e-9));
}

TEST_CASE("derivatives match central differences") {
  const auto g = KnotGrid::uniform(-2.0, 2.0, 5, 3);
  const double h = 1e-6;
  for (int s = 0; s < 40; ++s) {
    const double x = -1.9 + 3.8 * (s + 0.41) / 40.0;
    const auto d = basis_derivatives(g, x);
    const auto plus = basis_values(g, x + h);
    const auto minus = basis_values(g, x - h);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(d[i] == Approx((plus[i] - minus[i]) / (2 * h)).margin(1e-6));
    const auto lb = local_basis(g, x, 2);
    const auto lp = local_basis(g, x + h, 1);
    const auto lm = local_basis(g, x - h, 1);
    if (lp.first == lb.first && lm.first == lb.first) {
      for (int j = 0; j < lb.count; ++j)
        CHECK(lb.ders[2][j] == Approx((lp.ders[1][j] - lm.ders[1][j]) / (2 * h)).margin(1e-4));
    }
  }
}

TEST_CASE("inputs outside the range are clamped with zero slope") {
  const auto g = KnotGrid::uniform(-1.0, 1.0, 5, 3);
  const auto lo = basis_values(g, -1.0);
  const auto below = basis_values(g, -7.0);
  const auto hi = basis_values(g, 1.0);
  const auto above = basis_values(g, 3.0);
  for (std::size_t i = 0; i < lo.size(); ++i) {
    CHECK(below[i] == Approx(lo[i]).margin(1e-15));
    CHECK(above[i] == Approx(hi[i]).margin(1e-15));
  }
  for (double d : basis_derivatives(g, -7.0)) CHECK(d == 0.0);
  for (double d : basis_derivatives(g, 3.0)) CHECK(d == 0.0);
}
