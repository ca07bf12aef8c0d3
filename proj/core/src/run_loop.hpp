#pragma once

#include "proxskip/numerics.hpp"
#include "proxskip/record.hpp"

#include <cmath>
#include <cstdint>
#include <string>

namespace proxskip::detail {

/// Shared logging, divergence and stopping logic of the solver loops.
class RunLogger {
 public:
  RunLogger(RunRecord& record, const RunOptions& options) : record_(record), options_(options) {
    if (options_.log_every < 1) options_.log_every = 1;
  }

  void initial(const RunRow& row) {
    dist0_ = row.dist_sq;
    lyap0_ = row.lyapunov;
    record_.rows.push_back(row);
  }

  /// Whether the next step() needs dist_sq and lyapunov filled in.
  bool needs_metrics(std::int64_t counter, bool last, std::int64_t comm_rounds) const {
    return last || counter % options_.log_every == 0 ||
           (options_.max_comm_rounds > 0 && comm_rounds >= options_.max_comm_rounds) ||
           options_.stop_dist_ratio > 0.0 ||
           options_.stop_lyapunov_ratio > 0.0;
  }

  /// Returns true when the loop must stop. `last` forces the row to be logged.
  bool step(const RunRow& row, double x_norm, bool last) { return step(row, x_norm, last, row.t); }

  /// Same, with `counter` (e.g. a round index) deciding the logging cadence.
  bool step(const RunRow& row, double x_norm, bool last, std::int64_t counter) {
    if (!std::isfinite(x_norm) || x_norm > options_.divergence_threshold) {
      record_.rows.push_back(row);
      record_.diverged = true;
      record_.note = "diverged at t=" + std::to_string(row.t);
      return true;
    }
    const bool stop =
        (options_.max_comm_rounds > 0 && row.comm_rounds >= options_.max_comm_rounds) ||
        (options_.stop_dist_ratio > 0.0 && row.dist_sq <= options_.stop_dist_ratio * dist0_) ||
        (options_.stop_lyapunov_ratio > 0.0 &&
         row.lyapunov <= options_.stop_lyapunov_ratio * lyap0_);
    if (stop || last || counter % options_.log_every == 0) record_.rows.push_back(row);
    return stop;
  }

 private:
  RunRecord& record_;
  RunOptions options_;
  double dist0_ = kNotApplicable;
  double lyap0_ = kNotApplicable;
};

}  // namespace proxskip::detail
