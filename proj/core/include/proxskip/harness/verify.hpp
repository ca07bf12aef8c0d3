#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace proxskip::harness {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double time_limit = 0.0;
};

struct Check {
  int id;
  std::string name;
  double time_limit;  // seconds; exceeding it fails the check
  std::function<CheckResult()> run;
};

/// The verification suite on built-in problems, in order.
std::vector<Check> verification_checks();

/// Runs the checks (all when `only` is empty), printing one line per check to `out`.
std::vector<CheckResult> run_verification(std::ostream& out, const std::vector<int>& only = {});

/// "PASS  3  firm nonexpansiveness  (0.01 s / 2 s)  detail".
std::string format_result(const CheckResult& r);

}  // namespace proxskip::harness
