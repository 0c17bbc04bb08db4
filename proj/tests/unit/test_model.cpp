#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fd_check.hpp"
#include "holokan/kan.hpp"
#include "holokan/mlp.hpp"

using namespace holokan;
using Catch::Approx;

namespace {

KanArchitecture small_arch(int hidden = 3, int G = 4, int k = 3) {
  KanArchitecture a;
  a.hidden = hidden;
  a.grid_intervals = G;
  a.spline_order = k;
  a.input_lo = -2.0;
  a.input_hi = 2.0;
  a.hidden_lo = -3.0;
  a.hidden_hi = 3.0;
  return a;
}

std::vector<Complex> points(std::size_t n, std::uint64_t seed) {
  return sample_domain(make_system(SystemId::Quadratic), n, seed);
}

}  // namespace

TEST_CASE("kan parameter counts") {
  for (auto [h, expected] : {std::pair{3, 168}, {5, 280}, {8, 448}, {10, 560}}) {
    KanArchitecture a;
    a.hidden = h;
    CHECK(KanNetwork(a).parameter_count() == static_cast<std::size_t>(expected));
    CHECK(kan_parameter_count(a) == static_cast<std::size_t>(expected));
  }
  for (auto [g, expected] : {std::pair{3, 240}, {5, 280}, {7, 320}, {10, 380}}) {
    KanArchitecture a;
    a.grid_intervals = g;
    CHECK(KanNetwork(a).parameter_count() == static_cast<std::size_t>(expected));
  }
  CHECK_THROWS_AS(KanNetwork(small_arch(0)), ConfigError);
}

TEST_CASE("mlp parameter count") {
  CHECK(MlpNetwork(64).parameter_count() == 4482);
  CHECK(MlpNetwork::parameter_count_for(64) == 4482);
  CHECK(MlpNetwork(1).parameter_count() == 2 + 1 + 1 + 1 + 2 + 2);
}

TEST_CASE("zero networks output zero") {
  const KanNetwork kan;
  const MlpNetwork mlp;
  for (Complex z : points(20, 3)) {
    CHECK(forward(kan, z) == Complex{});
    CHECK(forward(mlp, z) == Complex{});
  }
}

TEST_CASE("kan forward matches a hand-assembled sum of edges") {
  const auto net = KanNetwork::initialized(small_arch(), 11);
  for (Complex z : points(10, 4)) {
    std::vector<double> hidden(3, 0.0);
    for (int h = 0; h < 3; ++h)
      hidden[static_cast<std::size_t>(h)] =
          edge_activation(net, net.edge_index(1, 0, h), z.real()) + edge_activation(net, net.edge_index(1, 1, h), z.imag());
    const auto got = hidden_inputs(net, z);
    for (int h = 0; h < 3; ++h) CHECK(got[static_cast<std::size_t>(h)] == Approx(hidden[static_cast<std::size_t>(h)]));
    double u = 0.0;
    double v = 0.0;
    for (int h = 0; h < 3; ++h) {
      u += edge_activation(net, net.edge_index(2, h, 0), hidden[static_cast<std::size_t>(h)]);
      v += edge_activation(net, net.edge_index(2, h, 1), hidden[static_cast<std::size_t>(h)]);
    }
    CHECK(forward(net, z).real() == Approx(u));
    CHECK(forward(net, z).imag() == Approx(v));
  }
}

TEST_CASE("edge activation combines silu and spline") {
  auto net = KanNetwork::initialized(small_arch(), 5);
  const int e = net.edge_index(1, 1, 2);
  auto block = net.edge_block(e);
  block[static_cast<std::size_t>(net.control_count())] = 0.7;
  block[static_cast<std::size_t>(net.control_count() + 1)] = -1.3;
  for (double x : {-1.5, -0.2, 0.9}) {
    const double silu_x = x / (1.0 + std::exp(-x));
    CHECK(edge_activation(net, e, x) == Approx(0.7 * silu_x - 1.3 * edge_spline(net, e, x)));
  }
}

TEST_CASE("constant control values give a constant spline") {
  auto net = KanNetwork(small_arch());
  auto block = net.edge_block(0);
  for (int i = 0; i < net.control_count(); ++i) block[static_cast<std::size_t>(i)] = 0.25;
  for (double x : {-2.0, -0.3, 1.7, 5.0}) CHECK(edge_spline(net, 0, x) == Approx(0.25));
}

TEST_CASE("kan gradients and jacobians match finite differences") {
  const auto batch = points(6, 21);
  const auto targets = velocities(make_system(SystemId::Cubic), batch);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto net = KanNetwork::initialized(small_arch(2, 3, 3), seed);
    CHECK(testing::max_jacobian_error(net, batch) < 1e-4);
    CHECK(testing::max_gradient_error(net, batch, targets, 0.0) < 1e-3);
    CHECK(testing::max_gradient_error(net, batch, targets, 0.5) < 1e-3);
  }
}

TEST_CASE("mlp gradients and jacobians match finite differences") {
  const auto batch = points(6, 22);
  const auto targets = velocities(make_system(SystemId::Sine), batch);
  const auto net = MlpNetwork::initialized(6, 9);
  CHECK(testing::max_jacobian_error(net, batch) < 1e-4);
  CHECK(testing::max_gradient_error(net, batch, targets, 0.0) < 1e-3);
  CHECK(testing::max_gradient_error(net, batch, targets, 0.5) < 1e-3);
}

TEST_CASE("vjp matches the directional derivative") {
  const auto net = KanNetwork::initialized(small_arch(), 17);
  const Complex z{0.4, -1.1};
  const Complex cot{0.3, -0.8};
  std::vector<double> grad(net.parameter_count(), 0.0);
  const Complex dz = vjp(net, z, cot, grad);
  const auto j = forward_with_jacobian(net, std::vector<Complex>{z})[0].jacobian;
  CHECK(dz.real() == Approx(cot.real() * j.ux + cot.imag() * j.vx));
  CHECK(dz.imag() == Approx(cot.real() * j.uy + cot.imag() * j.vy));

  auto probe = net;
  const double h = 1e-6;
  for (std::size_t i = 0; i < grad.size(); i += 7) {
    const double keep = probe.parameters()[i];
    probe.parameters()[i] = keep + h;
    const Complex up = forward(probe, z);
    probe.parameters()[i] = keep - h;
    const Complex down = forward(probe, z);
    probe.parameters()[i] = keep;
    const double fd = (cot.real() * (up - down).real() + cot.imag() * (up - down).imag()) / (2 * h);
    CHECK(grad[i] == Approx(fd).margin(1e-7));
  }
}

TEST_CASE("non-finite outputs are reported") {
  auto net = KanNetwork::initialized(small_arch(), 2);
  net.edge_block(0)[static_cast<std::size_t>(net.control_count())] = std::numeric_limits<double>::infinity();
  const std::vector<Complex> batch{Complex{0.1, 0.2}};
  CHECK_THROWS_AS(forward(net, std::span<const Complex>(batch)), NonFinite);
}

TEST_CASE("hidden grid calibration narrows to the observed range") {
  KanArchitecture arch;
  arch.hidden_lo = -6.0;
  arch.hidden_hi = 6.0;
  auto net = KanNetwork::initialized(arch, 42);
  const auto spec = make_system(SystemId::Quadratic);
  const auto before = net;
  calibrate_hidden_grid(net, spec, 1024, 42);
  const auto& g = net.grid(2);

  double lo = 1e300;
  double hi = -1e300;
  for (Complex z : sample_domain(spec, 1024, 42))
    for (double a : hidden_inputs(before, z)) {
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
  CHECK(g.hi - g.lo == Approx(1.1 * (hi - lo)));
  CHECK(0.5 * (g.hi + g.lo) == Approx(0.5 * (hi + lo)));
  REQUIRE(g.lo > -6.0);
  REQUIRE(g.hi < 6.0);

  for (int h = 0; h < net.hidden(); ++h) {
    for (int o = 0; o < 2; ++o) {
      const int e = net.edge_index(2, h, o);
      double sq = 0.0;
      for (int i = 0; i <= 200; ++i) {
        const double x = g.lo + (g.hi - g.lo) * i / 200.0;
        const double d = edge_spline(net, e, x) - edge_spline(before, e, x);
        sq += d * d;
      }
      CHECK(std::sqrt(sq / 201.0) < 1e-3);
    }
  }
  for (Complex z : sample_domain(spec, 50, 9)) CHECK(std::abs(forward(net, z) - forward(before, z)) < 1e-2);

  for (int e = 0; e < net.layer_edge_count(1); ++e)
    for (int i = 0; i < net.edge_parameter_count(); ++i)
      CHECK(net.edge_block(e)[static_cast<std::size_t>(i)] == before.edge_block(e)[static_cast<std::size_t>(i)]);

  const auto once = net;
  calibrate_hidden_grid(net, spec, 1024, 42);
  CHECK(std::abs(net.grid(2).lo - once.grid(2).lo) <= 1e-9 * std::abs(once.grid(2).lo));
  CHECK(std::abs(net.grid(2).hi - once.grid(2).hi) <= 1e-9 * std::abs(once.grid(2).hi));
}

TEST_CASE("hidden grid calibration can widen the range") {
  auto net = KanNetwork::initialized(KanArchitecture{}, 42);
  const auto before = net;
  calibrate_hidden_grid(net, make_system(SystemId::Quadratic), 1024, 42);
  CHECK(net.grid(2).hi > before.grid(2).hi);
  // The old curve is clamped (kinked) at its range ends, so the refit is only close, not exact.
  for (Complex z : sample_domain(make_system(SystemId::Quadratic), 50, 9))
    CHECK(std::abs(forward(net, z) - forward(before, z)) < 5e-2);
}

TEST_CASE("calibrating a zero network reports a degenerate range") {
  KanNetwork net;
  CHECK_THROWS_AS(calibrate_hidden_grid(net, make_system(SystemId::Quadratic), 128, 1), DegenerateRange);
}
