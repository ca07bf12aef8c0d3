#include "proxskip/harness/experiment.hpp"

#include "proxskip/errors.hpp"
#include "proxskip/harness/csv.hpp"
#include "proxskip/libsvm.hpp"
#include "proxskip/solvers.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace proxskip::harness {

using nlohmann::json;

namespace {

Problem build_problem(const ProblemSpec& s, Index clients) {
  if (s.kind == ProblemSpec::Kind::kSyntheticQuadratic) {
    if (s.curvature_spread) {
      return synthetic::heterogeneous_curvature_quadratic(clients, s.dim, s.kappa,
                                                          *s.curvature_spread, s.heterogeneity,
                                                          s.seed, s.L);
    }
    return synthetic::heterogeneous_quadratic(clients, s.dim, s.kappa, s.heterogeneity, s.seed,
                                              s.L);
  }
  Problem raw = [&] {
    if (s.kind == ProblemSpec::Kind::kSyntheticLogistic) {
      return synthetic::logistic(s.samples, s.dim, 0.0, s.seed, s.flip_fraction);
    }
    LibsvmData data;
    try {
      data = read_libsvm_file(s.path);
    } catch (const ParseError& e) {
      throw ConfigError("problem.path", e.what());
    } catch (const std::runtime_error& e) {
      throw ConfigError("problem.path", e.what());
    }
    data = truncate(data, s.max_samples, s.max_features);
    return Problem::logistic(std::move(data.features), std::move(data.labels), 0.0);
  }();
  const double lambda = s.lambda ? *s.lambda : s.lambda_factor * smoothness_constants(raw).L;
  return raw.with_lambda(lambda);
}

ProxOperator build_regularizer(const RegularizerSpec& s) {
  switch (s.kind) {
    case RegularizerSpec::Kind::kL1: return ProxOperator::l1(s.weight);
    case RegularizerSpec::Kind::kSquaredL2: return ProxOperator::squared_l2(s.weight);
    case RegularizerSpec::Kind::kNone: break;
  }
  return ProxOperator::none();
}

StochasticOracle build_oracle(const OracleSpec& s) {
  switch (s.kind) {
    case OracleSpec::Kind::kGaussian: return StochasticOracle::additive_gaussian(s.sigma);
    case OracleSpec::Kind::kMinibatch: return StochasticOracle::minibatch(s.batch);
    case OracleSpec::Kind::kExact: break;
  }
  return StochasticOracle::exact();
}

Topology build_topology(const TopologySpec& s) {
  if (s.kind == "ring") return Topology::ring(s.nodes);
  if (s.kind == "complete") return Topology::complete(s.nodes);
  if (s.kind == "star") return Topology::star(s.nodes);
  if (s.kind == "grid") return Topology::grid(s.rows, s.cols);
  return Topology::custom(s.nodes, s.edges);
}

bool is_local(const std::string& m) { return m == "localgd" || m == "scaffold"; }

std::int64_t ceil_count(double v) {
  if (!std::isfinite(v) || v > 1e15) throw ArgumentError("iteration count overflows");
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(v)));
}

/// Iterations after which a method has almost surely spent `budget` communications.
std::int64_t iterations_for_budget(const std::string& method, double p, std::int64_t budget) {
  if (method == "gd" || is_local(method)) return budget;
  const double b = static_cast<double>(budget);
  return ceil_count((b + 10.0 * std::sqrt(b) + 10.0) / p);
}

struct Hyper {
  double gamma = 0.0;
  double p = 1.0;
  double tau = 0.0;
};

/// (gamma, p, tau) for `m` at stepsize `gamma` (<= 0: theoretical).
Hyper hyperparameters(const MethodSpec& m, const ExperimentContext& ctx,
                      const ExperimentConfig& cfg, double gamma) {
  const double L = ctx.info.L;
  Hyper h;
  if (is_local(m.name)) {
    const std::int64_t steps = m.tau.value_or(default_local_steps(ctx));
    h.tau = static_cast<double>(steps);
    h.gamma = gamma > 0.0 ? gamma : theoretical::local_stepsize(L, steps);
    return h;
  }
  if (m.name == "sproxskip" && gamma <= 0.0) {
    const auto es =
        expected_smoothness_constants(ctx.oracle, ctx.problem, ctx.central_probe.x_star);
    const auto rule = sproxskip_parameter_rule(ctx.info, es, cfg.target, 1.0);
    h.gamma = rule.gamma;
  } else {
    h.gamma = gamma > 0.0 ? gamma : 1.0 / L;
  }
  if (method_uses_p(m.name)) h.p = m.p.value_or(default_probability(m.name, ctx, h.gamma));
  if (m.name == "decentralized-scaffnew") {
    h.tau = m.dual_tau.value_or(h.p / h.gamma);
    if (h.gamma * h.tau / h.p > 1.0 + 1e-12) {
      throw ConfigError("methods", m.label + ": gamma * dual_tau / p exceeds 1");
    }
  }
  return h;
}

std::int64_t iterations_from_target(const MethodSpec& m, const ExperimentContext& ctx,
                                    const ExperimentConfig& cfg, const Hyper& h) {
  const double mu = ctx.info.mu;
  const double log_eps = std::log(1.0 / cfg.target);
  if (m.name == "gd") return ceil_count(log_eps / std::min(1.0, h.gamma * mu));
  if (is_local(m.name)) return ceil_count(log_eps / std::min(1.0, h.tau * h.gamma * mu));
  if (m.name == "decentralized-scaffnew") {
    const double rate = std::min(h.gamma * mu, h.p * h.gamma * h.tau * ctx.mixing->delta);
    return ceil_count(log_eps / std::min(1.0, rate));
  }
  const std::int64_t base = proxskip_iterations_for(std::min(h.gamma, 1.0 / mu), h.p, mu, cfg.target);
  if (m.name != "sproxskip") return base;
  // Stochastic rule with psi0 evaluated at x0 = 0, h0 = 0 and the resolved (gamma, p).
  const auto es = expected_smoothness_constants(ctx.oracle, ctx.problem, ctx.central_probe.x_star);
  const double scale = h.gamma / h.p;
  const double psi0 = ctx.central_probe.x_star.squaredNorm() +
                      scale * scale * ctx.central_probe.h_star.squaredNorm();
  const auto rule = sproxskip_parameter_rule(ctx.info, es, cfg.target, std::max(psi0, 1e-300));
  return std::max(rule.iterations, base);
}

std::int64_t resolve_iterations(const MethodSpec& m, const ExperimentContext& ctx,
                                const ExperimentConfig& cfg, const Hyper& h) {
  if (cfg.iterations) {
    if (is_local(m.name)) return ceil_count(static_cast<double>(*cfg.iterations) / h.tau);
    return *cfg.iterations;
  }
  if (cfg.comm_budget > 0) return iterations_for_budget(m.name, h.p, cfg.comm_budget);
  return iterations_from_target(m, ctx, cfg, h);
}

RunOptions run_options(const ExperimentConfig& cfg) {
  RunOptions o;
  o.log_every = cfg.log_every;
  o.max_comm_rounds = cfg.comm_budget;
  return o;
}

RunRecord dispatch(const ResolvedRun& run, const ExperimentContext& ctx, const RunOptions& opts) {
  const Index d = ctx.problem.dim();
  const Vec x0 = Vec::Zero(d);
  const FederatedProbe fprobe{ctx.x_star};
  const ProxSkipConfig pcfg{run.gamma, run.p, run.iterations, run.seed};
  const auto local_steps = static_cast<std::int64_t>(run.tau);
  if (run.method == "gd") {
    return run_gd_baseline(ctx.problem, run.gamma, run.iterations, fprobe, opts,
                           ctx.clients.clients());
  }
  if (run.method == "proxskip") {
    return run_proxskip(ctx.problem, ctx.psi, pcfg, x0, Vec::Zero(d), ctx.central_probe, opts);
  }
  if (run.method == "sproxskip") {
    return run_sproxskip(ctx.problem, ctx.psi, ctx.oracle, pcfg, x0, Vec::Zero(d),
                         ctx.central_probe, opts);
  }
  if (run.method == "scaffnew") return run_scaffnew(ctx.clients, pcfg, ctx.oracle, fprobe, opts);
  if (run.method == "localgd") {
    return run_local_gd(ctx.clients, run.gamma, local_steps, run.iterations, ctx.oracle, run.seed,
                        fprobe, opts);
  }
  if (run.method == "scaffold") {
    return run_scaffold(ctx.clients, run.gamma, local_steps, run.iterations, ctx.oracle, run.seed,
                        fprobe, opts);
  }
  const DecentralizedConfig dcfg{run.gamma, run.tau, run.p, run.iterations, run.seed};
  return run_decentralized_scaffnew(ctx.clients, *ctx.mixing, dcfg, ctx.x_star, opts);
}

}  // namespace

ExperimentContext build_context(const ExperimentConfig& cfg) {
  const Index n = cfg.split.clients;
  Problem problem = build_problem(cfg.problem, n);
  if (n > problem.samples()) throw ConfigError("split.clients", "more clients than samples");
  ClientSplit split = heterogeneous_split(problem, n, cfg.split.mode);
  ClientProblems clients(problem, split);
  const SmoothnessInfo info = smoothness_constants(problem);
  if (!(info.mu > 0.0)) throw ConfigError("problem", "objective is not strongly convex");

  const StochasticOracle oracle = build_oracle(cfg.oracle);
  if (oracle.kind() == StochasticOracle::Kind::kMinibatch) {
    Index smallest = problem.samples();
    for (const auto& g : split.groups()) smallest = std::min<Index>(smallest, static_cast<Index>(g.size()));
    const bool federated = std::any_of(cfg.methods.begin(), cfg.methods.end(), [](const MethodSpec& m) {
      return m.name == "scaffnew" || is_local(m.name);
    });
    if (oracle.batch() > (federated ? smallest : problem.samples())) {
      throw ConfigError("oracle.batch", "exceeds the samples held by a client");
    }
  }

  const ProxOperator psi = build_regularizer(cfg.regularizer);
  Vec x_star = reference_minimizer(problem, ProxOperator::none());
  Probe central = psi.is_zero() ? Probe{x_star, problem.gradient(x_star)} : make_probe(problem, psi);

  std::optional<MixingMatrix> mixing;
  if (cfg.topology) {
    try {
      mixing = mixing_matrix(build_topology(*cfg.topology));
    } catch (const ArgumentError& e) {
      throw ConfigError("topology", e.what());
    }
  }
  return ExperimentContext{std::move(problem), info, std::move(split), std::move(clients),
                           psi, oracle, std::move(x_star), std::move(central), std::move(mixing)};
}

double default_probability(const std::string& method, const ExperimentContext& ctx, double gamma) {
  if (method == "sproxskip") return std::min(1.0, std::sqrt(gamma * ctx.info.mu));
  if (method == "decentralized-scaffnew") {
    if (!ctx.mixing) throw ConfigError("topology", "required by decentralized-scaffnew");
    return std::min(1.0, std::sqrt(1.0 / (ctx.mixing->delta * ctx.info.kappa())));
  }
  return optimal_probability(ctx.info);
}

std::int64_t default_local_steps(const ExperimentContext& ctx) {
  return std::max<std::int64_t>(1, std::llround(std::sqrt(ctx.info.kappa())));
}

std::vector<double> default_stepsize_grid(double L) {
  std::vector<double> grid;
  for (int k = -3; k <= 6; ++k) grid.push_back(std::ldexp(1.0, k) / L);
  return grid;
}

std::vector<GridPoint> evaluate_stepsize_grid(const MethodSpec& method,
                                              const ExperimentContext& ctx,
                                              const ExperimentConfig& cfg, std::int64_t budget,
                                              const std::vector<double>& grid) {
  if (grid.empty()) throw ArgumentError("stepsize grid is empty");
  if (budget <= 0) throw ArgumentError("tuning budget must be positive");
  RunOptions opts;
  opts.log_every = std::numeric_limits<std::int64_t>::max();
  opts.max_comm_rounds = budget;
  std::vector<GridPoint> out;
  for (double gamma : grid) {
    if (!(gamma > 0.0)) throw ArgumentError("stepsizes must be positive");
    GridPoint gp{gamma, std::numeric_limits<double>::infinity(), true};
    try {
      const Hyper h = hyperparameters(method, ctx, cfg, gamma);
      ResolvedRun run{method.name, method.label, cfg.seeds.front(), h.gamma, h.p, h.tau,
                      iterations_for_budget(method.name, h.p, budget)};
      const RunRecord rec = dispatch(run, ctx, opts);
      const double err = rec.last().dist_sq;
      if (!rec.diverged && std::isfinite(err)) {
        gp.error = err;
        gp.diverged = false;
      }
    } catch (const ConfigError&) {
      // Infeasible stepsize (e.g. gamma tau / p > 1): treated as divergent.
    }
    out.push_back(gp);
  }
  return out;
}

double tune_stepsize(const MethodSpec& method, const ExperimentContext& ctx,
                     const ExperimentConfig& cfg, std::int64_t budget,
                     const std::vector<double>& grid) {
  const auto points = evaluate_stepsize_grid(method, ctx, cfg, budget, grid);
  const GridPoint* best = nullptr;
  for (const auto& gp : points) {
    if (gp.diverged) continue;
    if (best == nullptr || gp.error < best->error ||
        (gp.error == best->error && gp.gamma < best->gamma)) {
      best = &gp;
    }
  }
  if (best == nullptr) throw TuningError(method.label + ": every stepsize in the grid diverged");
  return best->gamma;
}

std::vector<ResolvedRun> resolve_runs(const ExperimentConfig& cfg, const ExperimentContext& ctx) {
  std::vector<ResolvedRun> runs;
  for (const MethodSpec& base : cfg.methods) {
    std::vector<std::optional<double>> ps{base.p};
    const bool expands = method_uses_p(base.name) && !base.p && !cfg.p_list.empty();
    if (expands) ps.assign(cfg.p_list.begin(), cfg.p_list.end());
    const auto labels = expanded_labels(base, cfg.p_list);
    for (std::size_t k = 0; k < ps.size(); ++k) {
      MethodSpec m = base;
      m.p = ps[k];
      m.label = labels[k];
      double gamma = 0.0;
      if (m.stepsize == StepsizeMode::kFixed) gamma = m.gamma;
      if (m.stepsize == StepsizeMode::kTuned) {
        gamma = tune_stepsize(m, ctx, cfg, cfg.comm_budget, default_stepsize_grid(ctx.info.L));
      }
      const Hyper h = hyperparameters(m, ctx, cfg, gamma);
      const std::int64_t iterations = resolve_iterations(m, ctx, cfg, h);
      for (std::uint64_t seed : cfg.seeds) {
        runs.push_back(ResolvedRun{m.name, m.label, seed, h.gamma, h.p, h.tau, iterations});
      }
    }
  }
  return runs;
}

RunRecord execute_run(const ResolvedRun& run, const ExperimentContext& ctx,
                      const ExperimentConfig& cfg) {
  RunRecord rec = dispatch(run, ctx, run_options(cfg));
  rec.method = run.label;
  rec.seed = run.seed;
  rec.config_hash = cfg.hash;
  rec.params["gamma"] = run.gamma;
  rec.params["p"] = run.p;
  rec.params["tau"] = run.tau;
  rec.params["T"] = static_cast<double>(run.iterations);
  return rec;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                int jobs) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentContext ctx = build_context(cfg);
  ExperimentResult result;
  result.runs = resolve_runs(cfg, ctx);
  const std::size_t count = result.runs.size();
  result.records.resize(count);
  result.files.resize(count);
  std::vector<double> seconds(count, 0.0);
  std::vector<std::string> failures(count);

  std::filesystem::create_directories(out_dir);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < count; k = next.fetch_add(1)) {
      const ResolvedRun& run = result.runs[k];
      const auto t0 = std::chrono::steady_clock::now();
      const std::string file = run.label + "-seed" + std::to_string(run.seed) + ".csv";
      result.files[k] = out_dir / file;
      try {
        result.records[k] = execute_run(run, ctx, cfg);
      } catch (const std::exception& e) {
        RunRecord rec;
        rec.method = run.label;
        rec.seed = run.seed;
        rec.config_hash = cfg.hash;
        result.records[k] = std::move(rec);
        failures[k] = e.what();
      }
      write_file(result.files[k], run_record_csv(result.records[k]));
      seconds[k] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const int threads = std::clamp<int>(jobs, 1, static_cast<int>(std::max<std::size_t>(count, 1)));
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  json runs = json::array();
  for (std::size_t k = 0; k < count; ++k) {
    const ResolvedRun& run = result.runs[k];
    const RunRecord& rec = result.records[k];
    json r = {{"label", run.label},
              {"method", run.method},
              {"seed", run.seed},
              {"file", result.files[k].filename().string()},
              {"gamma", run.gamma},
              {"p", run.p},
              {"tau", run.tau},
              {"T", run.iterations},
              {"diverged", rec.diverged},
              {"failed", !failures[k].empty()},
              {"note", failures[k].empty() ? rec.note : failures[k]},
              {"rows", rec.rows.size()},
              {"wall_clock_s", seconds[k]}};
    if (!rec.rows.empty()) {
      r["final_comm_rounds"] = rec.last().comm_rounds;
      if (std::isfinite(rec.last().dist_sq)) r["final_dist_sq"] = rec.last().dist_sq;
    }
    runs.push_back(std::move(r));
  }
  json problem = {{"L", ctx.info.L},
                  {"mu", ctx.info.mu},
                  {"kappa", ctx.info.kappa()},
                  {"lambda", ctx.problem.lambda()},
                  {"samples", ctx.problem.samples()},
                  {"dim", ctx.problem.dim()},
                  {"clients", ctx.clients.clients()}};
  if (ctx.mixing) problem["delta"] = ctx.mixing->delta;
  const json manifest = {
      {"config_hash", cfg.hash},
      {"config", cfg.canonical},
      {"problem", problem},
      {"runs", runs},
      {"wall_clock_s",
       std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
  result.manifest = out_dir / "manifest.json";
  write_file(result.manifest, manifest.dump(2) + "\n");
  return result;
}

}  // namespace proxskip::harness
