#pragma once

#include "proxskip/record.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace proxskip::harness {

enum class PlotAxis { kComm, kGrad, kIter };

/// "comm", "grad" or "iter"; anything else throws ArgumentError.
PlotAxis parse_axis(std::string_view name);

struct PlotPoint {
  std::string method;
  std::uint64_t seed = 0;
  double x = 0.0;
  double y = 0.0;
};

inline constexpr double kPlotFloor = 1e-30;

/// Long-format CSV "method,seed,x,y" with y = ||x_bar - x_star||^2 clamped below at
/// kPlotFloor. On the comm axis repeated x values collapse to the last row of that round.
/// Throws ArgumentError when a record carries no dist_sq.
std::string emit_plot_data(const std::vector<RunRecord>& records, PlotAxis axis);
std::vector<PlotPoint> parse_plot_data(std::string_view text);

/// Records listed in a manifest written by run_experiment (CSV paths are relative
/// to the manifest).
std::vector<RunRecord> load_manifest_records(const std::filesystem::path& manifest);

}  // namespace proxskip::harness
