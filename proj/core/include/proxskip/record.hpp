#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace proxskip {

inline constexpr double kNotApplicable = std::numeric_limits<double>::quiet_NaN();

/// One logged iteration.
struct RunRow {
  std::int64_t t = 0;
  std::int64_t comm_rounds = 0;
  std::int64_t grad_evals = 0;
  double dist_sq = kNotApplicable;     // ||x_bar - x_star||^2
  double lyapunov = kNotApplicable;    // Psi_t or Phi_t when defined
  double dispersion = kNotApplicable;  // (1/n) sum_i ||x_i - x_bar||^2
};

struct RunRecord {
  std::string method;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<RunRow> rows;
  bool diverged = false;
  std::string note;
  /// Resolved hyperparameters (gamma, p, tau, T, ...).
  std::map<std::string, double> params;

  const RunRow& last() const { return rows.back(); }
};

/// Per-run logging and stopping controls shared by every solver loop.
struct RunOptions {
  /// Log every k-th iteration (the initial point and the last iteration are always logged).
  std::int64_t log_every = 1;
  /// Abort and flag the run once ||x|| exceeds this or becomes non-finite.
  double divergence_threshold = 1e12;
  /// Stop once this many communication rounds have happened (<= 0: no limit).
  std::int64_t max_comm_rounds = 0;
  /// Stop once dist_sq <= ratio * dist_sq at t = 0 (<= 0: disabled; needs a probe).
  double stop_dist_ratio = 0.0;
  /// Stop once lyapunov <= ratio * lyapunov at t = 0 (<= 0: disabled; needs a probe).
  double stop_lyapunov_ratio = 0.0;
};

}  // namespace proxskip
