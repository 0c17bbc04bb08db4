#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "holokan/analysis.hpp"
#include "holokan/checkpoint.hpp"
#include "holokan/config.hpp"
#include "holokan/io.hpp"
#include "holokan/symbolic.hpp"
#include "holokan/training.hpp"

namespace holokan {

inline constexpr std::array<double, 5> kCrSweep = {0.0, 0.01, 0.1, 0.5, 1.0};
inline constexpr std::array<int, 4> kGridSweep = {3, 5, 7, 10};
inline constexpr std::array<int, 4> kWidthSweep = {3, 5, 8, 10};
inline constexpr std::array<double, 4> kNoiseLevels = {0.0, 0.01, 0.05, 0.10};

struct TrainedModel {
  Checkpoint checkpoint;
  TrainHistory history;
};

inline TrainingMeta training_meta(const ExperimentConfig& cfg, const TrainHistory& h) {
  TrainingMeta meta;
  meta.system = std::string(system_key(cfg.system));
  meta.seed = cfg.train.seed;
  meta.steps_completed = static_cast<int>(h.reports.size());
  if (!h.reports.empty()) {
    meta.final_mse = h.reports.back().mse;
    meta.final_cr = h.reports.back().cr;
  }
  return meta;
}

/// Trains the configured model kind from a fresh seeded initialization.
inline TrainedModel train_model(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto spec = cfg.spec();
  TrainedModel out;
  if (cfg.model == ModelKind::Kan) {
    auto res = train(spec, KanNetwork::initialized(cfg.kan, cfg.train.seed), cfg.train);
    out.checkpoint.net = std::move(res.net);
    out.history = std::move(res.history);
  } else {
    auto res = train(spec, MlpNetwork::initialized(cfg.mlp_hidden, cfg.train.seed), cfg.train);
    out.checkpoint.net = std::move(res.net);
    out.history = std::move(res.history);
  }
  out.checkpoint.meta = training_meta(cfg, out.history);
  return out;
}

inline TrainedModel train_model_on_trajectories(const ExperimentConfig& cfg, const TrajectoryConfig& traj) {
  cfg.validate();
  const auto spec = cfg.spec();
  TrainedModel out;
  if (cfg.model == ModelKind::Kan) {
    auto res = train_on_trajectories(spec, KanNetwork::initialized(cfg.kan, cfg.train.seed), cfg.train, traj);
    out.checkpoint.net = std::move(res.net);
    out.history = std::move(res.history);
  } else {
    auto res = train_on_trajectories(spec, MlpNetwork::initialized(cfg.mlp_hidden, cfg.train.seed), cfg.train, traj);
    out.checkpoint.net = std::move(res.net);
    out.history = std::move(res.history);
  }
  out.checkpoint.meta = training_meta(cfg, out.history);
  return out;
}

inline ResultTable history_table(const TrainHistory& h) {
  ResultTable t({"step", "mse", "cr", "lambda", "total", "grad_norm"});
  for (const auto& r : h.reports) {
    ResultTable::Row row;
    row << r.step << r.mse << r.cr << r.lambda_cr << r.total << r.grad_norm_preclip;
    t.add(row);
  }
  return t;
}

/// Both callables borrow `net`, which must outlive them.
inline VectorField network_field(const AnyNetwork& net) {
  return std::visit([](const auto& n) { return model_field(n); }, net);
}

inline FieldEvaluator network_evaluator(const AnyNetwork& net) {
  return std::visit([](const auto& n) { return model_evaluator(n); }, net);
}

inline std::size_t network_parameter_count(const AnyNetwork& net) {
  return std::visit([](const auto& n) { return n.parameter_count(); }, net);
}

inline FieldMetrics evaluate_network(const AnyNetwork& net, const ExperimentConfig& cfg) {
  return evaluate_field(network_evaluator(net), cfg.spec(), cfg.eval_grid());
}

inline ResultTable metrics_table() {
  return ResultTable({"system", "model", "parameters", "mse", "r_squared", "cr_residual", "points"});
}

inline void add_metrics_row(ResultTable& t, std::string_view system, std::string_view model, std::size_t parameters,
                            const FieldMetrics& m) {
  ResultTable::Row row;
  row << system << model << parameters << m.mse << m.r_squared << m.cr_residual << m.points;
  t.add(row);
}

struct FractalComparison {
  EscapeMask learned;
  EscapeMask truth;
  double agreement = 0.0;
};

inline FractalComparison compare_fractals(const VectorField& learned, const ExperimentConfig& cfg) {
  const auto grid = cfg.fractal_grid();
  FractalComparison out;
  out.learned = escape_mask(learned, grid, cfg.fractal_max_iter, cfg.fractal_bailout, cfg.fractal_mode);
  out.truth = escape_mask(analytic_field(cfg.spec()), grid, cfg.fractal_max_iter, cfg.fractal_bailout, cfg.fractal_mode);
  out.agreement = boundary_agreement(out.learned, out.truth);
  return out;
}

inline LyapunovReport lyapunov_of(const VectorField& f, const ExperimentConfig& cfg) {
  return lyapunov_grid(f, cfg.lyapunov_grid(), cfg.lyapunov);
}

inline ResultTable lyapunov_table() {
  return ResultTable({"system", "source", "mean_lambda", "classification", "counted_cells"});
}

inline void add_lyapunov_row(ResultTable& t, std::string_view system, std::string_view source, const LyapunovReport& r) {
  ResultTable::Row row;
  row << system << source << r.mean_lambda << stability_name(r.classification) << r.counted;
  t.add(row);
}

inline FamilyReport symbolic_of(const KanNetwork& net, const ExperimentConfig& cfg) {
  return symbolic_report(net, cfg.spec(), cfg.symbolic_rule, cfg.symbolic_top_k, cfg.symbolic_resolution);
}

inline ResultTable symbolic_table() {
  return ResultTable({"system", "true_family", "detected_family", "mean_r2"});
}

inline void add_symbolic_row(ResultTable& t, const SystemSpec& spec, const FamilyReport& r) {
  ResultTable::Row row;
  row << system_key(spec.id) << family_name(spec.family) << family_name(r.detected_family) << r.mean_r2;
  t.add(row);
}

inline ResultTable edge_fit_table(const KanNetwork& net, const SystemSpec& spec, int resolution) {
  ResultTable t({"layer", "from", "to", "candidate", "a", "c0", "r_squared", "range_lo", "range_hi", "importance"});
  for (const auto& s : sweep_edges(net, spec, resolution)) {
    const auto f = best_fit(s);
    ResultTable::Row row;
    row << f.layer << f.from << f.to << candidate_name(f.candidate) << f.a << f.c0 << f.r_squared << f.range_lo
        << f.range_hi << f.importance;
    t.add(row);
  }
  return t;
}

/// Lambda_max sweep on the configured system (boundary agreement included).
inline ResultTable cr_ablation(ExperimentConfig cfg) {
  cfg.model = ModelKind::Kan;
  ResultTable t({"lambda_max", "parameters", "mse", "r_squared", "cr_residual", "boundary_agreement"});
  for (double lam : kCrSweep) {
    cfg.train.lambda_max = lam;
    const auto m = train_model(cfg);
    const auto metrics = evaluate_network(m.checkpoint.net, cfg);
    const auto fractal = compare_fractals(network_field(m.checkpoint.net), cfg);
    ResultTable::Row row;
    row << lam << network_parameter_count(m.checkpoint.net) << metrics.mse << metrics.r_squared << metrics.cr_residual
        << fractal.agreement;
    t.add(row);
  }
  return t;
}

inline ResultTable grid_ablation(ExperimentConfig cfg) {
  cfg.model = ModelKind::Kan;
  ResultTable t({"grid_intervals", "parameters", "mse", "r_squared", "cr_residual"});
  for (int g : kGridSweep) {
    cfg.kan.grid_intervals = g;
    const auto m = train_model(cfg);
    const auto metrics = evaluate_network(m.checkpoint.net, cfg);
    ResultTable::Row row;
    row << g << network_parameter_count(m.checkpoint.net) << metrics.mse << metrics.r_squared << metrics.cr_residual;
    t.add(row);
  }
  return t;
}

inline ResultTable width_ablation(ExperimentConfig cfg) {
  cfg.model = ModelKind::Kan;
  ResultTable t({"hidden", "parameters", "mse", "r_squared", "cr_residual"});
  for (int h : kWidthSweep) {
    cfg.kan.hidden = h;
    const auto m = train_model(cfg);
    const auto metrics = evaluate_network(m.checkpoint.net, cfg);
    ResultTable::Row row;
    row << h << network_parameter_count(m.checkpoint.net) << metrics.mse << metrics.r_squared << metrics.cr_residual;
    t.add(row);
  }
  return t;
}

/// KAN and MLP trained on noisy targets, scored on the clean evaluation
/// lattice. Degradation = noisy MSE / clean MSE from unrounded values.
inline ResultTable noise_study(ExperimentConfig cfg) {
  ResultTable t({"noise_level", "kan_mse", "kan_degradation", "mlp_mse", "mlp_degradation"});
  double kan_clean = 0.0;
  double mlp_clean = 0.0;
  for (double level : kNoiseLevels) {
    cfg.train.noise_level = level;
    cfg.model = ModelKind::Kan;
    const double kan = evaluate_network(train_model(cfg).checkpoint.net, cfg).mse;
    cfg.model = ModelKind::Mlp;
    const double mlp = evaluate_network(train_model(cfg).checkpoint.net, cfg).mse;
    if (level == 0.0) {
      kan_clean = kan;
      mlp_clean = mlp;
    }
    ResultTable::Row row;
    row << level << kan << kan / kan_clean << mlp << mlp / mlp_clean;
    t.add(row);
  }
  return t;
}

/// Quadratic-to-cubic transfer: a fully trained quadratic KAN fine-tuned for
/// transfer_steps on cubic data against a KAN trained from scratch for the
/// same number of steps, plus a fully trained MLP for scale. MSE is measured
/// on the cubic evaluation lattice.
inline ResultTable transfer_study(ExperimentConfig cfg) {
  cfg.model = ModelKind::Kan;
  auto source = cfg;
  source.system = SystemId::Quadratic;
  auto target = cfg;
  target.system = SystemId::Cubic;
  const auto target_spec = target.spec();

  auto scratch_cfg = target;
  scratch_cfg.train.steps = cfg.transfer_steps;
  scratch_cfg.train.patience = std::min(scratch_cfg.train.patience, std::max(cfg.transfer_steps, 1));
  const auto scratch = train_model(scratch_cfg);
  const double scratch_mse = evaluate_network(scratch.checkpoint.net, target).mse;

  auto pre = train(source.spec(), KanNetwork::initialized(cfg.kan, cfg.train.seed), cfg.train);
  auto tuned = fine_tune(target_spec, std::move(pre.net), cfg.transfer_steps, cfg.train);
  const double transfer_mse = evaluate_field(model_evaluator(tuned.net), target_spec, target.eval_grid()).mse;

  auto mlp_cfg = target;
  mlp_cfg.model = ModelKind::Mlp;
  const auto mlp = train_model(mlp_cfg);
  const double mlp_mse = evaluate_network(mlp.checkpoint.net, target).mse;

  ResultTable t({"method", "steps", "final_mse", "parameters", "improvement_percent"});
  ResultTable::Row a, b, c;
  a << "kan_scratch" << static_cast<int>(scratch.history.reports.size()) << scratch_mse
    << network_parameter_count(scratch.checkpoint.net) << "";
  b << "kan_transfer" << static_cast<int>(tuned.history.reports.size()) << transfer_mse << tuned.net.parameter_count()
    << 100.0 * (1.0 - transfer_mse / scratch_mse);
  c << "mlp_scratch" << static_cast<int>(mlp.history.reports.size()) << mlp_mse
    << network_parameter_count(mlp.checkpoint.net) << "";
  t.add(a);
  t.add(b);
  t.add(c);
  return t;
}

/// Output directory for a command: the configured one, or runs/<command>-<config hash>.
inline std::filesystem::path run_directory(const ExperimentConfig& cfg, std::string_view command) {
  if (!cfg.out.empty()) return cfg.out;
  return std::filesystem::path("runs") / (std::string(command) + "-" + config_hash(cfg));
}

class Manifest {
 public:
  explicit Manifest(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void add(const std::string& file, const ExperimentConfig& cfg, std::string_view what) {
    ResultTable::Row row;
    row << file << config_hash(cfg) << what;
    table_.add(row);
  }

  void write_csv_file(const std::string& file, const ResultTable& t, const ExperimentConfig& cfg, std::string_view what) {
    write_csv(dir_ / file, t);
    add(file, cfg, what);
  }

  void write_text(const std::string& file, std::string_view text, const ExperimentConfig& cfg, std::string_view what) {
    write_text_file(dir_ / file, text);
    add(file, cfg, what);
  }

  void finish() const { write_csv(dir_ / "manifest.csv", table_); }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  ResultTable table_{{"file", "config_hash", "contents"}};
};

using ProgressFn = std::function<void(std::string_view)>;

/// Runs every experiment with the configuration's shared settings and writes
/// all tables, checkpoints, histories and images under `dir`.
inline void reproduce_all(ExperimentConfig cfg, const std::filesystem::path& dir, const ProgressFn& progress = {}) {
  const auto note = [&](std::string_view s) {
    if (progress) progress(s);
  };
  cfg.validate();
  Manifest manifest(dir);
  manifest.write_text("config.txt", canonical_config(cfg), cfg, "base configuration");

  auto accuracy = metrics_table();
  auto symbolic = symbolic_table();
  ResultTable fractal({"system", "boundary_agreement"});
  auto lyapunov = lyapunov_table();
  ResultTable holomorphy({"system", "kan_cr_residual", "mlp_cr_residual"});

  for (SystemId id : kPureSystems) {
    auto sys = cfg;
    sys.system = id;
    const auto key = std::string(system_key(id));
    note("training " + key);
    sys.model = ModelKind::Kan;
    const auto kan = train_model(sys);
    sys.model = ModelKind::Mlp;
    const auto mlp = train_model(sys);
    sys.model = ModelKind::Kan;
    manifest.write_text("checkpoints/" + key + "-kan.txt", serialize_checkpoint(kan.checkpoint), sys, "kan checkpoint");
    manifest.write_csv_file("history/" + key + "-kan.csv", history_table(kan.history), sys, "kan training history");
    auto mlp_sys = sys;
    mlp_sys.model = ModelKind::Mlp;
    manifest.write_text("checkpoints/" + key + "-mlp.txt", serialize_checkpoint(mlp.checkpoint), mlp_sys,
                        "mlp checkpoint");
    manifest.write_csv_file("history/" + key + "-mlp.csv", history_table(mlp.history), mlp_sys, "mlp training history");

    const auto km = evaluate_network(kan.checkpoint.net, sys);
    const auto mm = evaluate_network(mlp.checkpoint.net, sys);
    add_metrics_row(accuracy, key, "kan", network_parameter_count(kan.checkpoint.net), km);
    add_metrics_row(accuracy, key, "mlp", network_parameter_count(mlp.checkpoint.net), mm);
    ResultTable::Row h;
    h << key << km.cr_residual << mm.cr_residual;
    holomorphy.add(h);

    note("analysing " + key);
    const auto& knet = std::get<KanNetwork>(kan.checkpoint.net);
    add_symbolic_row(symbolic, sys.spec(), symbolic_of(knet, sys));
    manifest.write_csv_file("symbolic/" + key + "-edges.csv", edge_fit_table(knet, sys.spec(), sys.symbolic_resolution),
                            sys, "per-edge candidate fits");
    const auto fr = compare_fractals(network_field(kan.checkpoint.net), sys);
    ResultTable::Row f;
    f << key << fr.agreement;
    fractal.add(f);
    manifest.write_text("fractals/" + key + "-learned.pgm", to_pgm(fr.learned), sys, "learned escape-time image");
    manifest.write_text("fractals/" + key + "-true.pgm", to_pgm(fr.truth), sys, "true escape-time image");
    add_lyapunov_row(lyapunov, key, "kan", lyapunov_of(network_field(kan.checkpoint.net), sys));
    add_lyapunov_row(lyapunov, key, "analytic", lyapunov_of(analytic_field(sys.spec()), sys));
  }

  note("training potential");
  auto flow = cfg;
  flow.system = SystemId::PotentialFlow;
  flow.model = ModelKind::Kan;
  const auto flow_kan = train_model(flow);
  add_metrics_row(accuracy, "potential", "kan", network_parameter_count(flow_kan.checkpoint.net),
                  evaluate_network(flow_kan.checkpoint.net, flow));
  add_symbolic_row(symbolic, flow.spec(), symbolic_of(std::get<KanNetwork>(flow_kan.checkpoint.net), flow));
  manifest.write_text("checkpoints/potential-kan.txt", serialize_checkpoint(flow_kan.checkpoint), flow,
                      "kan checkpoint");

  manifest.write_csv_file("accuracy.csv", accuracy, cfg, "velocity accuracy per system and model");
  manifest.write_csv_file("symbolic.csv", symbolic, cfg, "symbolic family identification");
  manifest.write_csv_file("fractal.csv", fractal, cfg, "fractal boundary agreement");
  manifest.write_csv_file("lyapunov.csv", lyapunov, cfg, "mean Lyapunov exponents");
  manifest.write_csv_file("holomorphy.csv", holomorphy, cfg, "mean Cauchy-Riemann residuals");

  auto quad = cfg;
  quad.system = SystemId::Quadratic;
  note("ablating cr weight");
  manifest.write_csv_file("ablation-cr.csv", cr_ablation(quad), quad, "cr weight sweep");
  note("ablating grid size");
  manifest.write_csv_file("ablation-grid.csv", grid_ablation(quad), quad, "grid size sweep");
  note("ablating hidden width");
  manifest.write_csv_file("ablation-width.csv", width_ablation(quad), quad, "hidden width sweep");
  note("noise study");
  manifest.write_csv_file("noise.csv", noise_study(quad), quad, "noise robustness");
  note("transfer study");
  manifest.write_csv_file("transfer.csv", transfer_study(cfg), cfg, "quadratic to cubic transfer");
  manifest.finish();
}

}  // namespace holokan
