#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fd_check.hpp"
#include "holokan/analysis.hpp"
#include "holokan/checkpoint.hpp"
#include "holokan/spline.hpp"

using namespace holokan;

namespace {

KanArchitecture random_arch(Rng& rng) {
  KanArchitecture a;
  a.hidden = 1 + static_cast<int>(rng.next_u64() % 3);
  a.grid_intervals = 2 + static_cast<int>(rng.next_u64() % 4);
  a.spline_order = 1 + static_cast<int>(rng.next_u64() % 3);
  a.input_lo = -2.0 - rng.uniform();
  a.input_hi = 2.0 + rng.uniform();
  a.hidden_lo = -3.0 - rng.uniform();
  a.hidden_hi = 3.0 + rng.uniform();
  return a;
}

std::vector<Complex> random_points(Rng& rng, std::size_t n) {
  std::vector<Complex> pts;
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back(rng.uniform(-2, 2), rng.uniform(-2, 2));
  return pts;
}

}  // namespace

TEST_CASE("random kans: exact gradients and jacobians") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    // Cubic splines need k >= 2 for a continuous second derivative in the CR gradient.
    auto a = random_arch(rng);
    a.spline_order = std::max(a.spline_order, 2);
    const auto net = KanNetwork::initialized(a, rng.next_u64());
    const auto batch = random_points(rng, 4);
    const auto targets = random_points(rng, 4);
    INFO("trial " << trial);
    CHECK(testing::max_jacobian_error(net, batch) < 1e-4);
    CHECK(testing::max_gradient_error(net, batch, targets, 0.0) < 1e-3);
    CHECK(testing::max_gradient_error(net, batch, targets, 0.5) < 1e-3);
  }
}

TEST_CASE("random mlps: exact gradients and jacobians") {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const auto net = MlpNetwork::initialized(2 + static_cast<int>(rng.next_u64() % 8), rng.next_u64());
    const auto batch = random_points(rng, 4);
    const auto targets = random_points(rng, 4);
    CHECK(testing::max_jacobian_error(net, batch) < 1e-4);
    CHECK(testing::max_gradient_error(net, batch, targets, 0.0) < 1e-3);
    CHECK(testing::max_gradient_error(net, batch, targets, 0.5) < 1e-3);
  }
}

TEST_CASE("partition of unity on random grids") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const double lo = rng.uniform(-5, 0);
    const double hi = lo + rng.uniform(0.1, 6);
    const auto g = KnotGrid::uniform(lo, hi, 1 + static_cast<int>(rng.next_u64() % 12),
                                     static_cast<int>(rng.next_u64() % (KnotGrid::kMaxOrder + 1)));
    for (int s = 0; s < 20; ++s) {
      double sum = 0.0;
      for (double v : basis_values(g, rng.uniform(lo - 1, hi + 1))) sum += v;
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("random holomorphic polynomials have zero cr residual") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Complex> coeff;
    for (int i = 0; i < 5; ++i) coeff.emplace_back(rng.normal(), rng.normal());
    const auto f = [&](Complex z) {
      Complex acc{};
      for (auto it = coeff.rbegin(); it != coeff.rend(); ++it) acc = acc * z + *it;
      return acc;
    };
    const double h = 1e-5;
    for (Complex z : random_points(rng, 10)) {
      const Complex fx = (f(z + Complex(h, 0)) - f(z - Complex(h, 0))) / (2 * h);
      const Complex fy = (f(z + Complex(0, h)) - f(z - Complex(0, h))) / (2 * h);
      CHECK(cr_violation({fx.real(), fy.real(), fx.imag(), fy.imag()}) < 1e-12);
    }
    // The conjugate is anti-holomorphic: residual 4|f'|^2.
    const Complex z{0.3, 0.1};
    const Complex gx = (std::conj(f(z + Complex(h, 0))) - std::conj(f(z - Complex(h, 0)))) / (2 * h);
    const Complex gy = (std::conj(f(z + Complex(0, h))) - std::conj(f(z - Complex(0, h)))) / (2 * h);
    CHECK(cr_violation({gx.real(), gy.real(), gx.imag(), gy.imag()}) > 1e-6);
  }
}

TEST_CASE("warmup is monotone and bounded") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const double lmax = rng.uniform(0, 2);
    const int tw = static_cast<int>(rng.next_u64() % 300);
    double prev = -1.0;
    for (int t = 0; t < 400; ++t) {
      const double w = warmup_weight(t, lmax, tw);
      CHECK(w >= prev);
      CHECK(w <= lmax);
      prev = w;
    }
    CHECK(warmup_weight(tw, lmax, tw) == lmax);
  }
}

TEST_CASE("clipping never lengthens and keeps direction") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> g(10);
    for (double& x : g) x = rng.normal(0, rng.uniform(0.01, 10));
    const auto orig = g;
    const double n0 = clip_gradient(g, 1.0);
    CHECK(l2_norm(g) <= 1.0 + 1e-12);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(g[i] * n0 - orig[i] * std::min(n0, 1.0)) < 1e-9);
  }
}

TEST_CASE("random checkpoints round trip") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Checkpoint c;
    if (trial % 2 == 0)
      c.net = KanNetwork::initialized(random_arch(rng), rng.next_u64());
    else
      c.net = MlpNetwork::initialized(1 + static_cast<int>(rng.next_u64() % 20), rng.next_u64());
    c.meta.final_mse = rng.normal();
    c.meta.seed = rng.next_u64();
    const auto text = serialize_checkpoint(c);
    const auto back = parse_checkpoint(text);
    CHECK(serialize_checkpoint(back) == text);
    CHECK(back.meta.seed == c.meta.seed);
  }
}

TEST_CASE("boundary agreement is symmetric and bounded") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    EscapeMask a{7, 3, 10, std::vector<std::uint8_t>(21), std::vector<int>(21, 10)};
    EscapeMask b = a;
    for (auto& e : a.escaped) e = rng.uniform() < 0.5;
    for (auto& e : b.escaped) e = rng.uniform() < 0.5;
    const double ab = boundary_agreement(a, b);
    CHECK(ab == boundary_agreement(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 100.0);
  }
}

TEST_CASE("lyapunov is ln|a| for any linear multiplier") {
  Rng rng(12);
  const EvalGrid g{3, 3, {-1e-9, 1e-9}};
  for (int trial = 0; trial < 20; ++trial) {
    const Complex a = std::polar(rng.uniform(0.2, 1.6), rng.uniform(-3.14, 3.14));
    LyapunovOptions opt;
    opt.bailout = 1e12;
    opt.n_iter = 30;
    const auto r = lyapunov_grid([a](Complex z) { return a * z; }, g, opt);
    CHECK(std::abs(r.mean_lambda - std::log(std::abs(a))) < 1e-9);
  }
}
