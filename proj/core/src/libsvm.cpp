#include "proxskip/libsvm.hpp"

#include "proxskip/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <tuple>
#include <vector>

namespace proxskip {

namespace {

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_index(std::string_view s, long long& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

}  // namespace

LibsvmData parse_libsvm(std::istream& in) {
  std::vector<std::tuple<Index, Index, double>> entries;
  std::vector<double> labels;
  Index max_col = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find('#') != std::string::npos) throw ParseError(line_no, "comments are not supported");
    std::vector<std::string_view> tokens;
    std::string_view rest(line);
    while (!rest.empty()) {
      std::size_t b = 0;
      while (b < rest.size() && is_space(rest[b])) ++b;
      std::size_t e = b;
      while (e < rest.size() && !is_space(rest[e])) ++e;
      if (e > b) tokens.push_back(rest.substr(b, e - b));
      rest.remove_prefix(e);
    }
    if (tokens.empty()) continue;

    double label = 0.0;
    if (!parse_double(tokens[0], label))
      throw ParseError(line_no, "malformed label '" + std::string(tokens[0]) + "'");
    if (label == 0.0) label = -1.0;
    if (label != 1.0 && label != -1.0)
      throw ParseError(line_no, "label must be -1, +1, 0 or 1");
    const Index row = static_cast<Index>(labels.size());
    labels.push_back(label);

    for (std::size_t k = 1; k < tokens.size(); ++k) {
      const std::string_view tok = tokens[k];
      const std::size_t colon = tok.find(':');
      long long idx = 0;
      double val = 0.0;
      if (colon == std::string_view::npos || !parse_index(tok.substr(0, colon), idx) ||
          !parse_double(tok.substr(colon + 1), val))
        throw ParseError(line_no, "malformed feature '" + std::string(tok) + "'");
      if (idx < 1) throw ParseError(line_no, "feature indices are 1-based");
      entries.emplace_back(row, static_cast<Index>(idx - 1), val);
      max_col = std::max(max_col, static_cast<Index>(idx));
    }
  }
  if (labels.empty()) throw ParseError(0, "no samples");
  if (max_col == 0) throw ParseError(0, "no features");

  LibsvmData out;
  out.features = DataMatrix::Zero(static_cast<Index>(labels.size()), max_col);
  out.labels = Eigen::Map<const Vec>(labels.data(), static_cast<Index>(labels.size()));
  for (const auto& [r, c, v] : entries) out.features(r, c) = v;
  return out;
}

LibsvmData parse_libsvm(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in);
}

LibsvmData read_libsvm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open '" + path + "'");
  return parse_libsvm(in);
}

std::string format_libsvm(const LibsvmData& data) {
  const Index n = data.features.rows();
  const Index d = data.features.cols();
  // The width is implied by the largest index, so keep the last column visible.
  const bool pad_last = d > 0 && data.features.col(d - 1).isZero(0.0);
  std::string out;
  for (Index j = 0; j < n; ++j) {
    out += data.labels[j] > 0.0 ? "+1" : "-1";
    for (Index k = 0; k < d; ++k) {
      const double v = data.features(j, k);
      if (v == 0.0 && !(pad_last && j == 0 && k == d - 1)) continue;
      out += ' ';
      out += std::to_string(k + 1);
      out += ':';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

LibsvmData truncate(const LibsvmData& data, Index max_samples, Index max_features) {
  if (max_samples < 0 || max_features < 0) throw ArgumentError("truncate: limits must be >= 0");
  const Index n = max_samples > 0 ? std::min(max_samples, data.features.rows()) : data.features.rows();
  const Index d = max_features > 0 ? std::min(max_features, data.features.cols()) : data.features.cols();
  LibsvmData out;
  out.features = data.features.topLeftCorner(n, d);
  out.labels = data.labels.head(n);
  return out;
}

}  // namespace proxskip
