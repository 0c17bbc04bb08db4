#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "holokan/checkpoint.hpp"
#include "holokan/config.hpp"
#include "holokan/experiments.hpp"

namespace fs = std::filesystem;
using namespace holokan;

namespace {

struct GlobalOptions {
  std::uint64_t seed = 42;
  std::string out;
  std::string system;
  std::string model;
  std::string config;
  std::optional<double> c_re;
  std::optional<double> c_im;
  std::vector<std::string> overrides;
};

struct ResolvedConfig {
  ExperimentConfig cfg;
  std::set<std::string> explicit_keys;
};

void set_key(ResolvedConfig& rc, const std::string& key, const std::string& value) {
  set_config_value(rc.cfg, key, value);
  rc.explicit_keys.insert(key);
}

ResolvedConfig resolve(const GlobalOptions& g, const CLI::App& app) {
  ResolvedConfig rc;
  if (!g.config.empty())
    for (auto& key : apply_config_file(rc.cfg, g.config)) rc.explicit_keys.insert(std::move(key));
  if (app.count("--seed")) set_key(rc, "seed", std::to_string(g.seed));
  if (!g.system.empty()) set_key(rc, "system", g.system);
  if (!g.model.empty()) set_key(rc, "model", g.model);
  if (g.c_re) set_key(rc, "c_re", format_real(*g.c_re));
  if (g.c_im) set_key(rc, "c_im", format_real(*g.c_im));
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_key(rc, kv.substr(0, eq), kv.substr(eq + 1));
  }
  rc.cfg.out = g.out;
  rc.cfg.validate();
  return rc;
}

/// Loads a checkpoint and checks it against any model or architecture the
/// user asked for explicitly.
Checkpoint load_for(const ResolvedConfig& rc, const std::string& path) {
  auto ckpt = load_checkpoint(path);
  const auto kind = network_kind(ckpt.net);
  if (rc.explicit_keys.count("model") && kind != rc.cfg.model)
    throw ArchitectureMismatch("checkpoint holds a " + std::string(model_kind_name(kind)) + ", --model requested " +
                               std::string(model_kind_name(rc.cfg.model)));
  if (kind == ModelKind::Kan) {
    const bool arch = rc.explicit_keys.count("hidden") || rc.explicit_keys.count("grid_intervals") ||
                      rc.explicit_keys.count("spline_order");
    expect_kan(ckpt, arch ? std::optional<KanArchitecture>(rc.cfg.kan) : std::nullopt);
  } else if (rc.explicit_keys.count("mlp_hidden")) {
    expect_mlp(ckpt, rc.cfg.mlp_hidden);
  }
  return ckpt;
}

void announce(const fs::path& dir) { std::cout << "output: " << dir.string() << "\n"; }

void print_table(const ResultTable& t) { std::cout << t.to_csv(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"holokan: Kolmogorov-Arnold networks for holomorphic vector fields"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--seed", g.seed, "random seed")->default_val(42);
  app.add_option("--out", g.out, "output directory (default runs/<command>-<config hash>)");
  app.add_option("--system", g.system, "quadratic|cubic|exp|sin|cos|zexp|potential");
  app.add_option("--model", g.model, "kan|mlp");
  app.add_option("--config", g.config, "key = value configuration file");
  app.add_option("--c-re", g.c_re, "real part of the system constant c");
  app.add_option("--c-im", g.c_im, "imaginary part of the system constant c");
  app.add_option("--set", g.overrides, "override one configuration key (key=value), repeatable");

  std::string objective = "velocity";
  double traj_horizon = 0.5;
  double traj_dt = 0.05;
  std::size_t traj_points = 16;
  auto* train = app.add_subcommand("train", "train a model and write its checkpoint and loss history");
  train->add_option("--objective", objective, "velocity|trajectory")->check(CLI::IsMember({"velocity", "trajectory"}));
  train->add_option("--horizon", traj_horizon, "trajectory horizon");
  train->add_option("--dt", traj_dt, "trajectory RK4 step");
  train->add_option("--trajectories", traj_points, "initial points per trajectory batch");

  std::string checkpoint;
  bool analytic = false;
  const auto add_source = [&](CLI::App* cmd) {
    auto* c = cmd->add_option("--checkpoint", checkpoint, "checkpoint file");
    auto* a = cmd->add_flag("--analytic", analytic, "use the analytic field itself (self-check)");
    c->excludes(a);
  };
  auto* evaluate = app.add_subcommand("evaluate", "velocity accuracy and Cauchy-Riemann residual of a checkpoint");
  add_source(evaluate);
  auto* fractal = app.add_subcommand("fractal", "escape-time images and boundary agreement");
  add_source(fractal);
  auto* lyapunov = app.add_subcommand("lyapunov", "mean Lyapunov exponent and stability class");
  add_source(lyapunov);
  bool zero_net = false;
  auto* symbolic = app.add_subcommand("symbolic", "candidate fits per edge and symbolic family");
  symbolic->add_option("--checkpoint", checkpoint, "KAN checkpoint file");
  symbolic->add_flag("--zero", zero_net, "analyse an all-zero network");
  std::string ablate_kind;
  auto* ablate = app.add_subcommand("ablate", "cr weight, grid size or hidden width sweep");
  ablate->add_option("kind", ablate_kind, "cr|grid|width")->required()->check(CLI::IsMember({"cr", "grid", "width"}));
  auto* noise = app.add_subcommand("noise", "noise robustness of KAN and MLP");
  auto* transfer = app.add_subcommand("transfer", "quadratic to cubic transfer against training from scratch");
  auto* reproduce = app.add_subcommand("reproduce-all", "run every experiment into one directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.get_exit_code() ? e.get_exit_code() : 2;
  }

  try {
    const auto rc = resolve(g, app);
    const auto& cfg = rc.cfg;
    const auto need_source = [&](std::string_view cmd) {
      if (checkpoint.empty() && !analytic)
        throw ConfigError(std::string(cmd) + " needs --checkpoint <file> or --analytic");
    };

    if (*train) {
      TrainedModel m;
      if (objective == "trajectory") {
        TrajectoryConfig traj;
        traj.horizon = traj_horizon;
        traj.dt = traj_dt;
        traj.initial_points = traj_points;
        m = train_model_on_trajectories(cfg, traj);
      } else {
        m = train_model(cfg);
      }
      const auto dir = run_directory(cfg, "train");
      save_checkpoint(dir / "checkpoint.txt", m.checkpoint);
      write_csv(dir / "history.csv", history_table(m.history));
      write_text_file(dir / "config.txt", canonical_config(cfg));
      std::cout << "steps: " << m.history.reports.size() << (m.history.stopped_early ? " (stopped early)" : "")
                << "\n";
      if (!m.history.reports.empty())
        std::cout << "final mse: " << format_real(m.history.reports.back().mse) << "\n";
      announce(dir);
    } else if (*evaluate) {
      need_source("evaluate");
      auto table = metrics_table();
      const auto key = std::string(system_key(cfg.system));
      if (analytic) {
        add_metrics_row(table, key, "analytic", 0, evaluate_field(analytic_evaluator(cfg.spec()), cfg.spec(), cfg.eval_grid()));
      } else {
        const auto ckpt = load_for(rc, checkpoint);
        add_metrics_row(table, key, model_kind_name(network_kind(ckpt.net)), network_parameter_count(ckpt.net),
                        evaluate_network(ckpt.net, cfg));
      }
      const auto dir = run_directory(cfg, "evaluate");
      write_csv(dir / "metrics.csv", table);
      print_table(table);
      announce(dir);
    } else if (*fractal) {
      need_source("fractal");
      std::optional<Checkpoint> ckpt;
      if (!analytic) ckpt = load_for(rc, checkpoint);
      const auto result =
          compare_fractals(analytic ? analytic_field(cfg.spec()) : network_field(ckpt->net), cfg);
      ResultTable table({"system", "source", "resolution", "max_iter", "mode", "boundary_agreement"});
      ResultTable::Row row;
      row << system_key(cfg.system) << (analytic ? "analytic" : "checkpoint") << cfg.fractal_resolution
          << cfg.fractal_max_iter << iteration_mode_name(cfg.fractal_mode) << result.agreement;
      table.add(row);
      const auto dir = run_directory(cfg, "fractal");
      write_text_file(dir / "learned.pgm", to_pgm(result.learned));
      write_text_file(dir / "true.pgm", to_pgm(result.truth));
      write_csv(dir / "agreement.csv", table);
      print_table(table);
      announce(dir);
    } else if (*lyapunov) {
      need_source("lyapunov");
      auto table = lyapunov_table();
      const auto key = std::string(system_key(cfg.system));
      if (analytic) {
        add_lyapunov_row(table, key, "analytic", lyapunov_of(analytic_field(cfg.spec()), cfg));
      } else {
        const auto ckpt = load_for(rc, checkpoint);
        add_lyapunov_row(table, key, model_kind_name(network_kind(ckpt.net)), lyapunov_of(network_field(ckpt.net), cfg));
      }
      const auto dir = run_directory(cfg, "lyapunov");
      write_csv(dir / "lyapunov.csv", table);
      print_table(table);
      announce(dir);
    } else if (*symbolic) {
      if (checkpoint.empty() && !zero_net) throw ConfigError("symbolic needs --checkpoint <file> or --zero");
      std::optional<Checkpoint> ckpt;
      if (!zero_net) ckpt = load_for(rc, checkpoint);
      const KanNetwork zero(cfg.kan);
      const KanNetwork& net = zero_net ? zero : expect_kan(*ckpt);
      auto table = symbolic_table();
      add_symbolic_row(table, cfg.spec(), symbolic_of(net, cfg));
      const auto dir = run_directory(cfg, "symbolic");
      write_csv(dir / "symbolic.csv", table);
      write_csv(dir / "edges.csv", edge_fit_table(net, cfg.spec(), cfg.symbolic_resolution));
      print_table(table);
      announce(dir);
    } else if (*ablate) {
      const auto table = ablate_kind == "cr" ? cr_ablation(cfg) : ablate_kind == "grid" ? grid_ablation(cfg) : width_ablation(cfg);
      const auto dir = run_directory(cfg, "ablate-" + ablate_kind);
      write_csv(dir / ("ablation-" + ablate_kind + ".csv"), table);
      print_table(table);
      announce(dir);
    } else if (*noise) {
      const auto table = noise_study(cfg);
      const auto dir = run_directory(cfg, "noise");
      write_csv(dir / "noise.csv", table);
      print_table(table);
      announce(dir);
    } else if (*transfer) {
      const auto table = transfer_study(cfg);
      const auto dir = run_directory(cfg, "transfer");
      write_csv(dir / "transfer.csv", table);
      print_table(table);
      announce(dir);
    } else if (*reproduce) {
      const auto dir = run_directory(cfg, "reproduce-all");
      reproduce_all(cfg, dir, [](std::string_view s) { std::cerr << s << "\n"; });
      announce(dir);
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& ch : msg)
      if (ch == '\n') ch = ' ';
    std::cerr << "error: " << msg << "\n";
    return 1;
  }
  return 0;
}
