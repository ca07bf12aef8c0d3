#pragma once

#include "proxskip/record.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace proxskip::harness {

inline constexpr std::string_view kRunCsvHeader =
    "t,comm_rounds,grad_evals,dist_sq,lyapunov,dispersion";

/// Shortest decimal that parses back to the same double; "nan", "inf", "-inf" otherwise.
std::string format_double(double v);
/// Inverse of format_double. Throws ParseError on malformed text.
double parse_double_field(std::string_view text);

/// Header line plus one line per row, '\n' terminated.
std::string run_record_csv(const RunRecord& record);
/// Parses run_record_csv output. Throws ParseError with the 1-based line number.
std::vector<RunRow> parse_run_csv(std::string_view text);

/// Whole-file helpers; throw std::runtime_error on I/O failure.
void write_file(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace proxskip::harness
