#pragma once

#include "proxskip/problems.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace proxskip::harness {

struct ProblemSpec {
  enum class Kind { kSyntheticQuadratic, kSyntheticLogistic, kLibsvm };
  Kind kind = Kind::kSyntheticQuadratic;
  // synthetic-quadratic
  double kappa = 100.0;
  double heterogeneity = 1.0;
  double L = 1.0;
  /// Set: client-specific stiff curvature in [spread * L, L].
  std::optional<double> curvature_spread;
  // synthetic-logistic
  Index samples = 1000;
  double flip_fraction = 0.05;
  // libsvm
  std::string path;
  Index max_samples = 0;
  Index max_features = 0;
  // shared
  Index dim = 10;
  std::uint64_t seed = 0;
  /// Explicit regularization; otherwise lambda = lambda_factor * L0 with L0 the
  /// smoothness constant at lambda = 0.
  std::optional<double> lambda;
  double lambda_factor = 1e-4;
};

struct SplitSpec {
  Index clients = 1;
  SplitMode mode = SplitMode::kShardByLabel;
};

struct RegularizerSpec {
  enum class Kind { kNone, kL1, kSquaredL2 };
  Kind kind = Kind::kNone;
  double weight = 0.0;
};

struct OracleSpec {
  enum class Kind { kExact, kGaussian, kMinibatch };
  Kind kind = Kind::kExact;
  double sigma = 0.0;
  Index batch = 1;
};

struct TopologySpec {
  std::string kind = "ring";
  Index nodes = 0;
  Index rows = 0;
  Index cols = 0;
  std::vector<std::pair<Index, Index>> edges;
};

enum class StepsizeMode { kTheoretical, kTuned, kFixed };

struct MethodSpec {
  /// gd, localgd, scaffold, scaffnew, proxskip, sproxskip, decentralized-scaffnew.
  std::string name;
  /// Output name; defaults to `name` (plus the p value when expanded over a p list).
  std::string label;
  StepsizeMode stepsize = StepsizeMode::kTheoretical;
  double gamma = 0.0;  // kFixed only
  std::optional<double> p;
  /// Local steps per round (localgd, scaffold).
  std::optional<std::int64_t> tau;
  /// Dual stepsize of decentralized-scaffnew; default p / gamma.
  std::optional<double> dual_tau;
};

struct ExperimentConfig {
  ProblemSpec problem;
  SplitSpec split;
  RegularizerSpec regularizer;
  std::vector<MethodSpec> methods;
  std::vector<double> p_list;
  std::optional<std::int64_t> iterations;
  double target = 1e-6;
  std::vector<std::uint64_t> seeds;
  OracleSpec oracle;
  std::optional<TopologySpec> topology;
  std::int64_t comm_budget = 0;
  std::int64_t log_every = 1;
  std::string output = "out";

  /// Normalized JSON with defaults applied; its dump is what config_hash hashes.
  nlohmann::json canonical;
  std::string hash;
};

inline constexpr int kDefaultSeedCount = 11;

/// Validates and applies defaults. Unknown keys and invalid values throw ConfigError
/// naming the field path (e.g. "methods[1].tau").
ExperimentConfig parse_config(const nlohmann::json& j);
/// Reads and parses a JSON file. Missing files and malformed JSON throw ConfigError.
ExperimentConfig load_config(const std::filesystem::path& path);

/// True for methods with a prox/communication probability p.
bool method_uses_p(const std::string& name);
/// Output labels of a method: one "<label>-p<p>" per entry of a nonempty p list when
/// the method takes a p and fixes none itself, otherwise just its label.
std::vector<std::string> expanded_labels(const MethodSpec& m, const std::vector<double>& p_list);

/// 16 hex digits of FNV-1a over the canonical dump.
std::string config_hash(const nlohmann::json& canonical);

}  // namespace proxskip::harness
