#include "proxskip/harness/csv.hpp"

#include "proxskip/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace proxskip::harness {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double_field(std::string_view text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
    throw ParseError(0, "invalid number '" + std::string(text) + "'");
  }
  return v;
}

namespace {

std::int64_t parse_int_field(std::string_view text, std::size_t line) {
  std::int64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
    throw ParseError(line, "invalid integer '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::string run_record_csv(const RunRecord& record) {
  std::string out(kRunCsvHeader);
  out += '\n';
  for (const RunRow& r : record.rows) {
    out += std::to_string(r.t);
    out += ',';
    out += std::to_string(r.comm_rounds);
    out += ',';
    out += std::to_string(r.grad_evals);
    out += ',';
    out += format_double(r.dist_sq);
    out += ',';
    out += format_double(r.lyapunov);
    out += ',';
    out += format_double(r.dispersion);
    out += '\n';
  }
  return out;
}

std::vector<RunRow> parse_run_csv(std::string_view text) {
  std::vector<RunRow> rows;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != kRunCsvHeader) throw ParseError(line_no, "unexpected header");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 6) throw ParseError(line_no, "expected 6 fields");
    RunRow r;
    r.t = parse_int_field(f[0], line_no);
    r.comm_rounds = parse_int_field(f[1], line_no);
    r.grad_evals = parse_int_field(f[2], line_no);
    try {
      r.dist_sq = parse_double_field(f[3]);
      r.lyapunov = parse_double_field(f[4]);
      r.dispersion = parse_double_field(f[5]);
    } catch (const ParseError& e) {
      throw ParseError(line_no, e.what());
    }
    rows.push_back(r);
  }
  if (!header_seen) throw ParseError(0, "empty CSV");
  return rows;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace proxskip::harness
