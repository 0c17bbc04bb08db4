// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "fd_check.hpp"
#include "holokan/experiments.hpp"

using namespace holokan;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Complex> random_points(Rng& rng, std::size_t n) {
  std::vector<Complex> pts;
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back(rng.uniform(-2, 2), rng.uniform(-2, 2));
  return pts;
}

ExperimentConfig system_config(SystemId id) {
  ExperimentConfig cfg;
  cfg.system = id;
  return cfg;
}

struct Trained {
  ExperimentConfig cfg;
  KanNetwork net;
  FieldMetrics metrics;
};

Outcome gradient_correctness() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1);
  double grad_err = 0.0;
  double jac_err = 0.0;
  for (int i = 0; i < 20; ++i) {
    KanArchitecture a;
    a.hidden = 2 + static_cast<int>(rng.next_u64() % 3);
    a.grid_intervals = 3 + static_cast<int>(rng.next_u64() % 3);
    const auto net = KanNetwork::initialized(a, rng.next_u64());
    const auto batch = random_points(rng, 4);
    const auto targets = random_points(rng, 4);
    for (double lam : {0.0, 0.5}) grad_err = std::max(grad_err, testing::max_gradient_error(net, batch, targets, lam));
    jac_err = std::max(jac_err, testing::max_jacobian_error(net, batch));
  }
  for (int i = 0; i < 5; ++i) {
    const auto net = MlpNetwork::initialized(4 + static_cast<int>(rng.next_u64() % 5), rng.next_u64());
    const auto batch = random_points(rng, 4);
    const auto targets = random_points(rng, 4);
    for (double lam : {0.0, 0.5}) grad_err = std::max(grad_err, testing::max_gradient_error(net, batch, targets, lam));
    jac_err = std::max(jac_err, testing::max_jacobian_error(net, batch));
  }
  const double elapsed = seconds_since(t0);
  o.require(grad_err < 1e-3, "max parameter-gradient rel. error " + fmt(grad_err));
  o.require(jac_err < 1e-4, "max input-Jacobian rel. error " + fmt(jac_err));
  o.require(elapsed < 60.0, "runtime " + fmt(elapsed, 3) + " s");
  return o;
}

Outcome holomorphic_oracle() {
  Outcome o;
  std::vector<SystemId> all(kPureSystems.begin(), kPureSystems.end());
  all.push_back(SystemId::PotentialFlow);
  for (SystemId id : all) {
    const auto spec = make_system(id);
    const EvalGrid grid{101, 101, spec.domain};
    std::vector<Complex> pts;
    for (Complex z : grid.points())
      if (!spec.excluded(z)) pts.push_back(z);
    double worst = 0.0;
    for (const auto& s : analytic_evaluator(spec)(pts)) worst = std::max(worst, cr_violation(s.jacobian));
    o.require(worst < 1e-4, std::string(system_key(id)) + " max residual " + fmt(worst, 2));
  }
  return o;
}

Outcome exact_counts() {
  Outcome o;
  for (auto [h, expected] : {std::pair{3, 168}, {5, 280}, {8, 448}, {10, 560}}) {
    KanArchitecture a;
    a.hidden = h;
    o.require(KanNetwork(a).parameter_count() == static_cast<std::size_t>(expected),
              "H=" + std::to_string(h) + " -> " + std::to_string(KanNetwork(a).parameter_count()));
  }
  o.require(MlpNetwork(64).parameter_count() == 4482, "mlp " + std::to_string(MlpNetwork(64).parameter_count()));
  const TrainConfig tc;
  o.require(warmup_weight(0, tc) == 0.0 && warmup_weight(tc.warmup_steps, tc) == tc.lambda_max, "warmup endpoints");
  Rng rng(10);
  bool clipped = true;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> g(50);
    for (double& x : g) x = rng.normal(0.0, 3.0);
    clip_gradient(g, 1.0);
    clipped = clipped && l2_norm(g) <= 1.0 + 1e-12;
  }
  o.require(clipped, "clipped norm <= 1");
  bool stable = true;
  for (int i = 0; i < 5; ++i) {
    Checkpoint c;
    c.net = KanNetwork::initialized(KanArchitecture{}, rng.next_u64());
    if (i % 2) c.net = MlpNetwork::initialized(64, rng.next_u64());
    const auto text = serialize_checkpoint(c);
    stable = stable && serialize_checkpoint(parse_checkpoint(text)) == text;
  }
  o.require(stable, "checkpoint round trip");
  return o;
}

Outcome integrator_order() {
  Outcome o;
  const auto f = [](Complex z) { return Complex(0, 1) * z; };
  const Complex z0{1.0, 0.0};
  const Complex exact = std::exp(Complex(0, 1.0));
  const auto err = [&](double dt) { return std::abs(integrate_trajectory(f, z0, 1.0, dt).states.back() - exact); };
  const double ratio = err(0.1) / err(0.05);
  o.require(ratio > 14.0 && ratio < 18.0, "error ratio " + fmt(ratio, 4));
  o.require(err(0.01) < 1e-6, "endpoint error at dt=0.01 " + fmt(err(0.01), 3));
  return o;
}

}  // namespace

int main() {
  std::map<int, Outcome> results;
  const auto report = [&](int id, const Outcome& o) {
    results[id] = o;
    std::printf("criterion %2d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, gradient_correctness());
  report(2, holomorphic_oracle());

  std::vector<Trained> trained;
  {
    Outcome o;
    for (SystemId id : kPureSystems) {
      auto cfg = system_config(id);
      const auto m = train_model(cfg);
      const auto& net = expect_kan(m.checkpoint);
      const auto metrics = evaluate_network(m.checkpoint.net, cfg);
      o.require(metrics.r_squared >= 0.90, std::string(system_key(id)) + " R2 " + fmt(metrics.r_squared));
      trained.push_back({cfg, net, metrics});
    }
    report(3, o);
  }
  {
    Outcome o;
    int correct = 0;
    double quad_r2 = 0.0;
    CandidateBasis quad_cand = CandidateBasis::One;
    for (const auto& t : trained) {
      const auto rep = symbolic_of(t.net, t.cfg);
      const bool ok = rep.detected_family == t.cfg.spec().family;
      correct += ok ? 1 : 0;
      if (t.cfg.system == SystemId::Quadratic) {
        quad_r2 = rep.mean_r2;
        quad_cand = rep.dominant_candidate;
      }
      o.detail += std::string(o.detail.empty() ? "" : ", ") + std::string(system_key(t.cfg.system)) + "=" +
                  std::string(family_name(rep.detected_family));
    }
    o.require(correct >= 5, std::to_string(correct) + "/6 correct");
    o.require(quad_cand == CandidateBasis::X2 && quad_r2 >= 0.90,
              "quadratic dominant " + std::string(candidate_name(quad_cand)) + " R2 " + fmt(quad_r2));
    report(4, o);
  }
  {
    Outcome o;
    for (const auto& t : trained) {
      const double agree = compare_fractals(model_field(t.net), t.cfg).agreement;
      o.require(agree >= 85.0, std::string(system_key(t.cfg.system)) + " " + fmt(agree, 3) + "%");
    }
    report(5, o);
  }
  {
    Outcome o;
    for (const auto& t : trained) {
      if (t.cfg.system == SystemId::Cubic) continue;
      const auto rep = lyapunov_of(model_field(t.net), t.cfg);
      const auto want = t.cfg.system == SystemId::Quadratic ? Stability::Chaotic : Stability::Stable;
      o.require(rep.classification == want, std::string(system_key(t.cfg.system)) + " " +
                                                fmt(rep.mean_lambda, 3) + " " +
                                                std::string(stability_name(rep.classification)));
    }
    double worst = 0.0;
    const EvalGrid g{4, 4, {-1e-6, 1e-6}};
    for (Complex mult : {Complex{0.5, 0.0}, Complex{0.6, 0.8}, Complex{1.3, 0.0}, Complex{0.0, 0.25}}) {
      LyapunovOptions opt;
      opt.bailout = 1e9;
      const auto r = lyapunov_grid([mult](Complex z) { return mult * z; }, g, opt);
      worst = std::max(worst, std::abs(r.mean_lambda - std::log(std::abs(mult))));
    }
    o.require(worst < 1e-9, "linear maps max |error| " + fmt(worst, 2));
    report(6, o);
  }
  {
    Outcome o;
    const auto t = cr_ablation(system_config(SystemId::Quadratic));
    bool monotone = true;
    std::string residuals;
    for (std::size_t i = 0; i < t.size(); ++i) {
      residuals += (i ? "/" : "") + fmt(t.real(i, "cr_residual"), 3);
      if (i > 0 && t.real(i, "cr_residual") > t.real(i - 1, "cr_residual")) monotone = false;
    }
    o.require(monotone, "cr residual " + residuals + " nonincreasing");
    const double mse0 = t.real(0, "mse");
    const double mse1 = t.real(t.size() - 1, "mse");
    o.require(mse1 > mse0, "MSE(1.0)=" + fmt(mse1) + " > MSE(0)=" + fmt(mse0));
    report(7, o);
  }
  {
    Outcome o;
    const auto t = noise_study(system_config(SystemId::Quadratic));
    const std::size_t last = t.size() - 1;
    const double kan = t.real(last, "kan_degradation");
    const double mlp = t.real(last, "mlp_degradation");
    o.require(kan < 2.0, "kan degradation " + fmt(kan) + "x < 2");
    o.require(mlp > kan, "mlp degradation " + fmt(mlp) + "x > kan");
    report(8, o);
  }
  {
    Outcome o;
    const auto t = transfer_study(ExperimentConfig{});
    const double scratch = t.real(0, "final_mse");
    const double transfer = t.real(1, "final_mse");
    const double improvement = t.real(1, "improvement_percent");
    o.require(transfer < scratch, "transfer " + fmt(transfer) + " < scratch " + fmt(scratch));
    o.require(improvement >= 50.0, "improvement " + fmt(improvement, 3) + "% >= 50%");
    report(9, o);
  }
  report(10, exact_counts());
  report(11, integrator_order());
  {
    Outcome o;
    auto cfg = system_config(SystemId::PotentialFlow);
    try {
      const auto m = train_model(cfg);
      const auto metrics = evaluate_network(m.checkpoint.net, cfg);
      const auto history = history_table(m.history);
      o.require(std::isfinite(metrics.r_squared), "potential flow completes, R2 " + fmt(metrics.r_squared));
      o.require(history.size() == m.history.reports.size() && history.size() > 0,
                "loss history emitted (" + std::to_string(history.size()) + " rows)");
    } catch (const std::exception& e) {
      o.require(false, std::string("potential flow run threw: ") + e.what());
    }
    report(12, o);
  }

  int failed = 0;
  for (const auto& [id, o] : results) failed += o.pass ? 0 : 1;
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed == 0 ? 0 : 1;
}
