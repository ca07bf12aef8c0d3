#pragma once

#include "proxskip/decentralized.hpp"
#include "proxskip/federated.hpp"
#include "proxskip/harness/config.hpp"
#include "proxskip/problems.hpp"
#include "proxskip/record.hpp"
#include "proxskip/stochastic.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace proxskip::harness {

/// Every grid point of a stepsize search diverged.
class TuningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problem, split and reference solutions shared read-only by every run.
struct ExperimentContext {
  Problem problem;
  SmoothnessInfo info;
  ClientSplit split;
  ClientProblems clients;
  ProxOperator psi;
  StochasticOracle oracle;
  /// Minimizer of f (federated and decentralized methods).
  Vec x_star;
  /// Minimizer and grad f at it for f + psi (central methods).
  Probe central_probe;
  std::optional<MixingMatrix> mixing;
};

ExperimentContext build_context(const ExperimentConfig& cfg);

/// Fully resolved hyperparameters of one (method, seed) run.
struct ResolvedRun {
  std::string method;
  std::string label;
  std::uint64_t seed = 0;
  double gamma = 0.0;
  double p = 1.0;
  double tau = 0.0;  // local steps (localgd, scaffold) or dual stepsize (decentralized)
  std::int64_t iterations = 0;  // iterations, or rounds for localgd / scaffold
};

/// Default prox probability: 1/sqrt(kappa) centrally and for Scaffnew,
/// sqrt(gamma mu) for the stochastic rule, min(1, 1/sqrt(delta kappa)) on a graph.
double default_probability(const std::string& method, const ExperimentContext& ctx, double gamma);
/// Default local steps for localgd and scaffold: max(1, round(sqrt(kappa))).
std::int64_t default_local_steps(const ExperimentContext& ctx);

/// Applies stepsize modes (tuning where requested), p lists and iteration rules.
std::vector<ResolvedRun> resolve_runs(const ExperimentConfig& cfg, const ExperimentContext& ctx);

RunRecord execute_run(const ResolvedRun& run, const ExperimentContext& ctx,
                      const ExperimentConfig& cfg);

/// 2^k / L for k = -3..6.
std::vector<double> default_stepsize_grid(double L);

struct GridPoint {
  double gamma = 0.0;
  double error = 0.0;  // final ||x_bar - x_star||^2; +inf when diverged
  bool diverged = false;
};

/// Runs `method` (p taken from method.p or its default) once per stepsize for
/// `budget` communication rounds on the first seed.
std::vector<GridPoint> evaluate_stepsize_grid(const MethodSpec& method,
                                              const ExperimentContext& ctx,
                                              const ExperimentConfig& cfg, std::int64_t budget,
                                              const std::vector<double>& grid);

/// Grid point with the smallest final ||x_bar - x_star||^2 after `budget`
/// communication rounds, evaluated on the first seed. Ties keep the smaller stepsize.
/// Throws TuningError when every point diverges.
double tune_stepsize(const MethodSpec& method, const ExperimentContext& ctx,
                     const ExperimentConfig& cfg, std::int64_t budget,
                     const std::vector<double>& grid);

struct ExperimentResult {
  std::vector<ResolvedRun> runs;
  std::vector<RunRecord> records;
  std::vector<std::filesystem::path> files;
  std::filesystem::path manifest;
};

/// Runs every (method, seed) pair on `jobs` threads, writes one CSV per run plus
/// manifest.json into `out_dir`. CSV bytes do not depend on `jobs`.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                int jobs = 1);

}  // namespace proxskip::harness
