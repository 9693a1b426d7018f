// structcv: fit, cross-validate, sweep and benchmark structured models.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "structcv/acv.hpp"
#include "structcv/config.hpp"
#include "structcv/cv.hpp"
#include "structcv/errors.hpp"
#include "structcv/io.hpp"
#include "structcv/parallel.hpp"

using namespace structcv;

namespace {

struct Context {
  RunConfig config;
  std::unique_ptr<Model> model;
  StructuredDataset data;
  std::string hash;
  std::filesystem::path out;
};

std::unique_ptr<Objective> make_objective(const Context& ctx) {
  if (ctx.config.target == WeightTarget::Structure) return std::make_unique<LscvObjective>(*ctx.model, ctx.data);
  return std::make_unique<LwcvObjective>(*ctx.model, ctx.data, ctx.config.structure, ctx.config.scheme);
}

template <class Fn>
void emit(const Context& ctx, const std::string& name, Fn writer) {
  std::ostringstream s;
  writer(s);
  write_file((ctx.out / name).string(), s.str());
}

FitResult full_fit(const Context& ctx, const Objective& obj) {
  OptimizerOptions opt = ctx.config.optimizer;
  opt.threads = ctx.config.threads;
  return fit(obj, Eigen::VectorXd::Ones(obj.num_weights()), ctx.model->initial_params(ctx.data), opt);
}

CVReport run_method(const Context& ctx, const Objective& obj, const FoldPlan& plan, const Eigen::VectorXd& theta,
                    Method method) {
  CVOptions opts{.threads = ctx.config.threads, .point_losses = ctx.config.point_losses,
                 .optimizer = ctx.config.optimizer};
  return method == Method::Exact ? exact_cv(obj, plan, theta, opts) : approx_cv(obj, plan, theta, method, opts);
}

void write_report(const Context& ctx, const CVReport& r) {
  const std::string stem = "report_" + to_string(r.method);
  emit(ctx, stem + ".csv", [&](std::ostream& o) { write_report_csv(o, r); });
  emit(ctx, stem + ".json", [&](std::ostream& o) { write_report_json(o, r, ctx.hash); });
  emit(ctx, stem + "_timing.csv", [&](std::ostream& o) { write_report_timing_csv(o, r); });
}

int cmd_fit(const Context& ctx) {
  const auto obj = make_objective(ctx);
  const FitResult r = full_fit(ctx, *obj);
  emit(ctx, "params.json", [&](std::ostream& o) { write_params_json(o, *ctx.model, r.theta_hat, ctx.hash); });
  emit(ctx, "trajectory.csv", [&](std::ostream& o) { write_trajectory_csv(o, r); });
  emit(ctx, "trajectory_timing.csv", [&](std::ostream& o) { write_trajectory_timing_csv(o, r); });
  std::cout << "fit: " << r.iterations << " iterations, gradient norm " << format_double(r.grad_norm)
            << (r.converged ? "" : " (not converged)") << '\n';
  return 0;
}

int cmd_cv(const Context& ctx) {
  const auto obj = make_objective(ctx);
  const FoldPlan plan = make_plan(ctx.config, ctx.data);
  const FitResult full = full_fit(ctx, *obj);
  std::optional<CVReport> exact;
  std::vector<CVReport> approx;
  for (Method m : ctx.config.methods) {
    CVReport r = run_method(ctx, *obj, plan, full.theta_hat, m);
    write_report(ctx, r);
    std::cout << to_string(m) << ": mean loss " << format_double(r.mean_loss) << ", " << r.refits << " refits";
    if (!r.failures().empty()) std::cout << ", " << r.failures().size() << " failed folds";
    std::cout << '\n';
    if (m == Method::Exact) {
      exact = std::move(r);
    } else {
      approx.push_back(std::move(r));
    }
  }
  if (exact) {
    for (const auto& a : approx) {
      const Comparison c = compare_reports(*exact, a);
      const std::string stem = "comparison_" + to_string(a.method);
      emit(ctx, stem + ".csv", [&](std::ostream& o) { write_comparison_csv(o, c); });
      emit(ctx, stem + ".json", [&](std::ostream& o) { write_comparison_json(o, c, ctx.hash); });
      emit(ctx, stem + "_timing.csv", [&](std::ostream& o) {
        o << "exact_seconds,approx_seconds,speedup\n"
          << format_double(exact->total_seconds) << ',' << format_double(a.total_seconds) << ','
          << format_double(c.speedup) << '\n';
      });
      std::cout << to_string(a.method) << " vs exact: median relative error " << format_double(c.fold_stats.median)
                << ", correlation " << format_double(c.fold_stats.correlation) << '\n';
    }
  }
  return 0;
}

int cmd_sweep(const Context& ctx) {
  if (ctx.config.exact_report.empty()) throw ArgumentError("sweep needs [sweep] exact_report from a previous cv run");
  CVReport exact = read_report(ctx.config.exact_report);
  if (exact.method != Method::Exact) throw ArgumentError("[sweep] exact_report is not an exact CV report");
  const auto obj = make_objective(ctx);
  const FoldPlan plan = make_plan(ctx.config, ctx.data);
  const FitResult full = full_fit(ctx, *obj);
  SweepOptions so = ctx.config.sweep;
  so.threads = ctx.config.threads;
  const InexactSweepRecord rec = inexact_sweep(*obj, plan, full, exact, so);
  const bool tail = tail_non_increasing(rec, so.fit_window, 0.1);
  emit(ctx, "sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, rec); });
  emit(ctx, "sweep.json", [&](std::ostream& o) { write_sweep_json(o, rec, tail, ctx.hash); });
  std::cout << "sweep: " << rec.points.size() << " iterates, C = " << format_double(rec.slope)
            << ", intercept = " << format_double(rec.intercept) << ", R^2 = " << format_double(rec.r_squared)
            << '\n';
  return 0;
}

int cmd_bench(Context& ctx) {
  std::ostringstream table;
  table << "method,size,folds_run,folds_total,seconds,extrapolated_seconds\n";
  for (Index size : ctx.config.bench_sizes) {
    RunConfig cfg = ctx.config;
    cfg.data.path.clear();
    if (cfg.target == WeightTarget::Structure) {
      cfg.data.simulation.num_structures = size;
    } else {
      cfg.data.simulation.length = size;
    }
    cfg.plan.n_folds = cfg.bench_folds;
    Context c{cfg, make_model(cfg.model), {}, ctx.hash, ctx.out};
    c.data = load_or_simulate(cfg, *c.model);
    const auto obj = make_objective(c);
    const FoldPlan plan = make_plan(cfg, c.data);
    const FitResult full = full_fit(c, *obj);
    for (Method m : cfg.methods) {
      FoldPlan run = plan;
      if (m == Method::Exact && cfg.bench_exact_folds < plan.size()) run.folds.resize(static_cast<std::size_t>(cfg.bench_exact_folds));
      const CVReport r = run_method(c, *obj, run, full.theta_hat, m);
      const double scale = run.size() > 0 ? static_cast<double>(plan.size()) / static_cast<double>(run.size()) : 0.0;
      table << to_string(m) << ',' << size << ',' << run.size() << ',' << plan.size() << ','
            << format_double(r.total_seconds) << ',' << format_double(r.total_seconds * scale) << '\n';
      std::cout << to_string(m) << " size " << size << ": " << format_double(r.total_seconds * scale) << " s\n";
    }
  }
  write_file((ctx.out / "bench.csv").string(), table.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and approximate cross-validation for structured models"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  int threads = default_threads();
  std::optional<std::uint64_t> seed;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI run configuration")->required();
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "overrides the data and fold seeds");
    sub->add_option("--out", out_dir, "output directory (overrides [output] dir)");
  };
  auto* fit_cmd = app.add_subcommand("fit", "fit parameters and record the trajectory");
  auto* cv_cmd = app.add_subcommand("cv", "exact and approximate CV reports");
  auto* sweep_cmd = app.add_subcommand("sweep", "approximation error along the optimizer trajectory");
  auto* bench_cmd = app.add_subcommand("bench", "timing table per method and size");
  for (auto* sub : {fit_cmd, cv_cmd, sweep_cmd, bench_cmd}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    Context ctx;
    ctx.config = load_config(config_path);
    if (seed) apply_seed(ctx.config, *seed);
    ctx.config.threads = threads;
    if (!out_dir.empty()) ctx.config.out_dir = out_dir;
    ctx.hash = ctx.config.hash();
    ctx.out = ctx.config.out_dir;
    std::filesystem::create_directories(ctx.out);
    ctx.model = make_model(ctx.config.model);
    if (bench_cmd->parsed()) return cmd_bench(ctx);
    ctx.data = load_or_simulate(ctx.config, *ctx.model);
    if (fit_cmd->parsed()) return cmd_fit(ctx);
    if (cv_cmd->parsed()) return cmd_cv(ctx);
    return cmd_sweep(ctx);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const OptimizationError& e) {
    std::cerr << "optimization failed: " << e.what() << '\n';
    return 3;
  } catch (const SingularHessianError& e) {
    std::cerr << "singular Hessian: " << e.what() << '\n';
    return 3;
  } catch (const CapacityError& e) {
    std::cerr << "capacity exceeded: " << e.what() << '\n';
    return 3;
  }
}
