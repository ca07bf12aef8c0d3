#include "proxskip/errors.hpp"
#include "proxskip/harness/config.hpp"
#include "proxskip/harness/csv.hpp"
#include "proxskip/harness/experiment.hpp"
#include "proxskip/harness/plot_data.hpp"
#include "proxskip/harness/verify.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>

namespace ph = proxskip::harness;

namespace {

int cmd_run(const std::string& config_path, const std::string& out, int jobs) {
  const ph::ExperimentConfig cfg = ph::load_config(config_path);
  const std::filesystem::path dir = out.empty() ? std::filesystem::path(cfg.output) : std::filesystem::path(out);
  const ph::ExperimentResult res = ph::run_experiment(cfg, dir, jobs);
  for (std::size_t k = 0; k < res.runs.size(); ++k) {
    const auto& run = res.runs[k];
    const auto& rec = res.records[k];
    std::printf("%-28s seed %-4llu gamma %-11.4g p %-10.4g T %-10lld", run.label.c_str(),
                static_cast<unsigned long long>(run.seed), run.gamma, run.p,
                static_cast<long long>(run.iterations));
    if (rec.rows.empty()) {
      std::printf(" failed\n");
    } else {
      std::printf(" comm %-9lld dist_sq %-11.4g%s\n", static_cast<long long>(rec.last().comm_rounds),
                  rec.last().dist_sq, rec.diverged ? " DIVERGED" : "");
    }
  }
  std::cout << "manifest: " << res.manifest.string() << "\n";
  return 0;
}

int cmd_tune(const std::string& config_path, std::int64_t budget) {
  const ph::ExperimentConfig cfg = ph::load_config(config_path);
  if (budget <= 0) budget = cfg.comm_budget;
  if (budget <= 0) {
    throw proxskip::ConfigError("comm_budget", "tuning needs --budget or a positive comm_budget");
  }
  const ph::ExperimentContext ctx = ph::build_context(cfg);
  const auto grid = ph::default_stepsize_grid(ctx.info.L);
  for (const ph::MethodSpec& base : cfg.methods) {
    const bool expands = ph::method_uses_p(base.name) && !base.p && !cfg.p_list.empty();
    const auto labels = ph::expanded_labels(base, cfg.p_list);
    for (std::size_t k = 0; k < labels.size(); ++k) {
      ph::MethodSpec m = base;
      m.label = labels[k];
      if (expands) m.p = cfg.p_list[k];
      std::cout << m.label << " (budget " << budget << " rounds)\n";
      const auto points = ph::evaluate_stepsize_grid(m, ctx, cfg, budget, grid);
      for (const auto& gp : points) {
        std::printf("  gamma*L = %-8g %s\n", gp.gamma * ctx.info.L,
                    gp.diverged ? "diverged" : ph::format_double(gp.error).c_str());
      }
      try {
        const double best = ph::tune_stepsize(m, ctx, cfg, budget, grid);
        std::cout << "  best gamma = " << ph::format_double(best) << "\n";
      } catch (const ph::TuningError& e) {
        std::cout << "  " << e.what() << "\n";
      }
    }
  }
  return 0;
}

int cmd_plotdata(const std::string& manifest, const std::string& axis, const std::string& out) {
  const ph::PlotAxis a = ph::parse_axis(axis);
  const std::string csv = ph::emit_plot_data(ph::load_manifest_records(manifest), a);
  if (out.empty()) {
    std::cout << csv;
  } else {
    ph::write_file(out, csv);
  }
  return 0;
}

int cmd_verify(const std::vector<int>& only) {
  const auto results = ph::run_verification(std::cout, only);
  int failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::cout << (results.size() - static_cast<std::size_t>(failed)) << "/" << results.size()
            << " checks passed\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ProxSkip experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "Run every (method, seed) pair of a config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out, "Output directory (default: the config's output field)");
  run->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  std::int64_t budget = 0;
  auto* tune = app.add_subcommand("tune", "Grid-search stepsizes at a communication budget");
  tune->add_option("config", config_path, "Experiment config (JSON)")->required();
  tune->add_option("--budget", budget, "Communication rounds (default: comm_budget)");

  std::string manifest;
  std::string axis = "comm";
  auto* plot = app.add_subcommand("plotdata", "Emit method,seed,x,y for plotting");
  plot->add_option("manifest", manifest, "manifest.json written by run")->required();
  plot->add_option("--axis", axis, "comm, grad or iter");
  plot->add_option("--out", out, "Output file (default: stdout)");

  std::vector<int> only;
  auto* verify = app.add_subcommand("verify", "Run the invariant suite on built-in problems");
  verify->add_option("--only", only, "Check ids to run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, out, jobs);
    if (*tune) return cmd_tune(config_path, budget);
    if (*plot) return cmd_plotdata(manifest, axis, out);
    return cmd_verify(only);
  } catch (const proxskip::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
