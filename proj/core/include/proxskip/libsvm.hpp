#pragma once

#include "proxskip/problems.hpp"

#include <iosfwd>
#include <string>
#include <string_view>

namespace proxskip {

struct LibsvmData {
  DataMatrix features;  // N x d, d = largest feature index seen
  Vec labels;           // entries in {-1, +1}
};

/// Parses `label idx:val idx:val ...` lines with 1-based, whitespace-separated
/// features. Labels 0/1 map to -1/+1. Blank lines are skipped; '#' is rejected.
/// Throws ParseError (with the 1-based line number) on malformed input and on
/// input without samples.
LibsvmData parse_libsvm(std::istream& in);
LibsvmData parse_libsvm(std::string_view text);
LibsvmData read_libsvm_file(const std::string& path);

/// Inverse of parse_libsvm: labels as +1/-1, zero features omitted, values in
/// shortest round-trip form.
std::string format_libsvm(const LibsvmData& data);

/// Keeps the first `max_samples` rows and `max_features` columns (0 = no limit).
LibsvmData truncate(const LibsvmData& data, Index max_samples, Index max_features);

}  // namespace proxskip
