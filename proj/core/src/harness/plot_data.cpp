#include "proxskip/harness/plot_data.hpp"

#include "proxskip/errors.hpp"
#include "proxskip/harness/csv.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>

namespace proxskip::harness {

PlotAxis parse_axis(std::string_view name) {
  if (name == "comm") return PlotAxis::kComm;
  if (name == "grad") return PlotAxis::kGrad;
  if (name == "iter") return PlotAxis::kIter;
  throw ArgumentError("unknown axis \"" + std::string(name) + "\" (expected comm, grad or iter)");
}

namespace {

double axis_value(const RunRow& r, PlotAxis axis) {
  switch (axis) {
    case PlotAxis::kComm: return static_cast<double>(r.comm_rounds);
    case PlotAxis::kGrad: return static_cast<double>(r.grad_evals);
    case PlotAxis::kIter: break;
  }
  return static_cast<double>(r.t);
}

}  // namespace

std::string emit_plot_data(const std::vector<RunRecord>& records, PlotAxis axis) {
  std::string out = "method,seed,x,y\n";
  for (const RunRecord& rec : records) {
    if (rec.method.find_first_of(",\n") != std::string::npos) {
      throw ArgumentError("method name \"" + rec.method + "\" cannot be written as a CSV field");
    }
    std::vector<std::pair<double, double>> series;
    for (const RunRow& r : rec.rows) {
      if (std::isnan(r.dist_sq)) {
        throw ArgumentError("record " + rec.method + " has no dist_sq column");
      }
      const double x = axis_value(r, axis);
      const double y = std::max(r.dist_sq, kPlotFloor);
      if (axis == PlotAxis::kComm && !series.empty() && series.back().first == x) {
        series.back().second = y;
      } else {
        series.emplace_back(x, y);
      }
    }
    const std::string prefix = rec.method + "," + std::to_string(rec.seed) + ",";
    for (const auto& [x, y] : series) {
      out += prefix;
      out += format_double(x);
      out += ',';
      out += format_double(y);
      out += '\n';
    }
  }
  return out;
}

std::vector<PlotPoint> parse_plot_data(std::string_view text) {
  std::vector<PlotPoint> points;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != "method,seed,x,y") throw ParseError(1, "unexpected header");
      continue;
    }
    if (line.empty()) continue;
    // The method name is everything before the last three fields.
    const auto c3 = line.rfind(',');
    const auto c2 = c3 == std::string_view::npos ? c3 : line.rfind(',', c3 - 1);
    const auto c1 = c2 == std::string_view::npos || c2 == 0 ? std::string_view::npos
                                                             : line.rfind(',', c2 - 1);
    if (c1 == std::string_view::npos) throw ParseError(line_no, "expected 4 fields");
    PlotPoint pt;
    pt.method = std::string(line.substr(0, c1));
    const std::string_view seed = line.substr(c1 + 1, c2 - c1 - 1);
    const auto res = std::from_chars(seed.data(), seed.data() + seed.size(), pt.seed);
    if (res.ec != std::errc() || res.ptr != seed.data() + seed.size() || seed.empty()) {
      throw ParseError(line_no, "invalid seed");
    }
    try {
      pt.x = parse_double_field(line.substr(c2 + 1, c3 - c2 - 1));
      pt.y = parse_double_field(line.substr(c3 + 1));
    } catch (const ParseError& e) {
      throw ParseError(line_no, e.what());
    }
    points.push_back(std::move(pt));
  }
  if (line_no == 0) throw ParseError(0, "empty plot data");
  return points;
}

std::vector<RunRecord> load_manifest_records(const std::filesystem::path& manifest) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(manifest));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, "malformed manifest " + manifest.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("runs") || !j["runs"].is_array()) {
    throw ParseError(0, "manifest " + manifest.string() + " has no runs array");
  }
  const std::string hash = j.value("config_hash", "");
  std::vector<RunRecord> records;
  for (const auto& r : j["runs"]) {
    RunRecord rec;
    rec.method = r.at("label").get<std::string>();
    rec.seed = r.at("seed").get<std::uint64_t>();
    rec.config_hash = hash;
    rec.diverged = r.value("diverged", false);
    rec.note = r.value("note", "");
    rec.rows = parse_run_csv(read_file(manifest.parent_path() / r.at("file").get<std::string>()));
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace proxskip::harness
