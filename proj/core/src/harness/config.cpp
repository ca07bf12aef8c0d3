#include "proxskip/harness/config.hpp"

#include "proxskip/errors.hpp"
#include "proxskip/harness/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace proxskip::harness {

using nlohmann::json;

namespace {

std::string child_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

std::string index_path(const std::string& parent, std::size_t i) {
  return parent + "[" + std::to_string(i) + "]";
}

/// Object view that records which keys were read; finish() rejects the rest.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string field(const std::string& key) const { return child_path(path_, key); }

  const json* get(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  const json& require(const std::string& key) {
    const json* v = get(key);
    if (v == nullptr) throw ConfigError(field(key), "required field is missing");
    return *v;
  }

  std::optional<double> number(const std::string& key) {
    const json* v = get(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_number()) throw ConfigError(field(key), "expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) throw ConfigError(field(key), "expected a finite number");
    return d;
  }

  std::optional<std::int64_t> integer(const std::string& key) {
    const json* v = get(key);
    if (v == nullptr) return std::nullopt;
    if (v->is_number_integer()) return v->get<std::int64_t>();
    if (v->is_number_float()) {
      const double d = v->get<double>();
      if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) {
        return static_cast<std::int64_t>(d);
      }
    }
    throw ConfigError(field(key), "expected an integer");
  }

  std::optional<std::string> string(const std::string& key) {
    const json* v = get(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_string()) throw ConfigError(field(key), "expected a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (used_.count(it.key()) == 0) {
        throw ConfigError(field(it.key()), "unknown key \"" + it.key() + "\"");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

double positive(const Reader& r, const std::string& key, double v) {
  if (!(v > 0.0)) throw ConfigError(r.field(key), "must be positive");
  return v;
}

std::int64_t at_least(const Reader& r, const std::string& key, std::int64_t v, std::int64_t lo) {
  if (v < lo) throw ConfigError(r.field(key), "must be at least " + std::to_string(lo));
  return v;
}

double probability(const std::string& field, double v) {
  if (!(v > 0.0 && v <= 1.0)) throw ConfigError(field, "must lie in (0, 1]");
  return v;
}

const std::set<std::string>& known_methods() {
  static const std::set<std::string> names = {
      "gd", "localgd", "scaffold", "scaffnew", "proxskip", "sproxskip", "decentralized-scaffnew"};
  return names;
}

bool uses_p(const std::string& m) {
  return m == "scaffnew" || m == "proxskip" || m == "sproxskip" || m == "decentralized-scaffnew";
}

ProblemSpec parse_problem(const json& j) {
  Reader r(j, "problem");
  ProblemSpec s;
  const auto kind = r.string("kind");
  if (!kind) throw ConfigError("problem.kind", "required field is missing");
  if (*kind == "synthetic-quadratic") {
    s.kind = ProblemSpec::Kind::kSyntheticQuadratic;
    s.kappa = r.number("kappa").value_or(s.kappa);
    if (!(s.kappa >= 1.0)) throw ConfigError("problem.kappa", "must be at least 1");
    s.heterogeneity = r.number("heterogeneity").value_or(s.heterogeneity);
    if (s.heterogeneity < 0.0) throw ConfigError("problem.heterogeneity", "must be nonnegative");
    s.L = positive(r, "L", r.number("L").value_or(s.L));
    if (auto v = r.number("curvature_spread")) {
      if (!(*v > 0.0 && *v <= 1.0)) {
        throw ConfigError("problem.curvature_spread", "must lie in (0, 1]");
      }
      s.curvature_spread = v;
    }
  } else if (*kind == "synthetic-logistic") {
    s.kind = ProblemSpec::Kind::kSyntheticLogistic;
    s.samples = at_least(r, "samples", r.integer("samples").value_or(s.samples), 1);
    s.flip_fraction = r.number("flip_fraction").value_or(s.flip_fraction);
    if (!(s.flip_fraction >= 0.0 && s.flip_fraction <= 1.0)) {
      throw ConfigError("problem.flip_fraction", "must lie in [0, 1]");
    }
  } else if (*kind == "libsvm") {
    s.kind = ProblemSpec::Kind::kLibsvm;
    const auto path = r.string("path");
    if (!path || path->empty()) throw ConfigError("problem.path", "required field is missing");
    s.path = *path;
    s.max_samples = at_least(r, "max_samples", r.integer("max_samples").value_or(0), 0);
    s.max_features = at_least(r, "max_features", r.integer("max_features").value_or(0), 0);
  } else {
    throw ConfigError("problem.kind", "unknown problem kind \"" + *kind + "\"");
  }
  if (s.kind != ProblemSpec::Kind::kLibsvm) {
    s.dim = at_least(r, "dim", r.integer("dim").value_or(s.dim), 1);
    const auto seed = r.integer("seed").value_or(0);
    s.seed = static_cast<std::uint64_t>(at_least(r, "seed", seed, 0));
  }
  if (s.kind != ProblemSpec::Kind::kSyntheticQuadratic) {
    const auto lambda = r.number("lambda");
    const auto factor = r.number("lambda_factor");
    if (lambda && factor) {
      throw ConfigError("problem.lambda", "lambda and lambda_factor are mutually exclusive");
    }
    if (lambda) {
      if (!(*lambda > 0.0)) throw ConfigError("problem.lambda", "must be positive");
      s.lambda = lambda;
    }
    if (factor) s.lambda_factor = positive(r, "lambda_factor", *factor);
  }
  r.finish();
  return s;
}

SplitSpec parse_split(const json& j) {
  Reader r(j, "split");
  SplitSpec s;
  s.clients = at_least(r, "clients", r.integer("clients").value_or(1), 1);
  const auto mode = r.string("mode").value_or("shard-by-label");
  if (mode == "shard-by-label") {
    s.mode = SplitMode::kShardByLabel;
  } else if (mode == "round-robin") {
    s.mode = SplitMode::kRoundRobin;
  } else {
    throw ConfigError("split.mode", "expected \"shard-by-label\" or \"round-robin\"");
  }
  r.finish();
  return s;
}

RegularizerSpec parse_regularizer(const json& j) {
  Reader r(j, "regularizer");
  RegularizerSpec s;
  const auto kind = r.string("kind").value_or("none");
  if (kind == "none") {
    s.kind = RegularizerSpec::Kind::kNone;
  } else if (kind == "l1") {
    s.kind = RegularizerSpec::Kind::kL1;
  } else if (kind == "squared-l2") {
    s.kind = RegularizerSpec::Kind::kSquaredL2;
  } else {
    throw ConfigError("regularizer.kind", "expected \"none\", \"l1\" or \"squared-l2\"");
  }
  s.weight = r.number("weight").value_or(0.0);
  if (s.weight < 0.0) throw ConfigError("regularizer.weight", "must be nonnegative");
  if (s.kind == RegularizerSpec::Kind::kNone) s.weight = 0.0;
  r.finish();
  return s;
}

OracleSpec parse_oracle(const json& j) {
  Reader r(j, "oracle");
  OracleSpec s;
  const auto kind = r.string("kind").value_or("exact");
  if (kind == "exact") {
    s.kind = OracleSpec::Kind::kExact;
  } else if (kind == "gaussian") {
    s.kind = OracleSpec::Kind::kGaussian;
    s.sigma = r.number("sigma").value_or(0.0);
    if (s.sigma < 0.0) throw ConfigError("oracle.sigma", "must be nonnegative");
  } else if (kind == "minibatch") {
    s.kind = OracleSpec::Kind::kMinibatch;
    s.batch = at_least(r, "batch", r.integer("batch").value_or(1), 1);
  } else {
    throw ConfigError("oracle.kind", "expected \"exact\", \"gaussian\" or \"minibatch\"");
  }
  r.finish();
  return s;
}

TopologySpec parse_topology(const json& j) {
  Reader r(j, "topology");
  TopologySpec s;
  const auto kind = r.string("kind");
  if (!kind) throw ConfigError("topology.kind", "required field is missing");
  s.kind = *kind;
  if (s.kind == "ring" || s.kind == "complete" || s.kind == "star") {
    s.nodes = at_least(r, "n", r.integer("n").value_or(0), 0);
  } else if (s.kind == "grid") {
    const auto rows = r.integer("rows");
    const auto cols = r.integer("cols");
    if (!rows) throw ConfigError("topology.rows", "required field is missing");
    if (!cols) throw ConfigError("topology.cols", "required field is missing");
    s.rows = at_least(r, "rows", *rows, 1);
    s.cols = at_least(r, "cols", *cols, 1);
    s.nodes = s.rows * s.cols;
  } else if (s.kind == "custom") {
    s.nodes = at_least(r, "n", r.integer("n").value_or(0), 0);
    const json& edges = r.require("edges");
    if (!edges.is_array()) throw ConfigError("topology.edges", "expected an array of pairs");
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const json& e = edges[k];
      const std::string f = index_path("topology.edges", k);
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
          !e[1].is_number_integer()) {
        throw ConfigError(f, "expected a pair of node indices");
      }
      s.edges.emplace_back(e[0].get<Index>(), e[1].get<Index>());
    }
  } else {
    throw ConfigError("topology.kind", "unknown topology \"" + s.kind + "\"");
  }
  r.finish();
  return s;
}

MethodSpec parse_method(const json& j, const std::string& path) {
  MethodSpec m;
  if (j.is_string()) {
    m.name = j.get<std::string>();
    if (known_methods().count(m.name) == 0) {
      throw ConfigError(path, "unknown method \"" + m.name + "\"");
    }
    m.label = m.name;
    return m;
  }
  Reader r(j, path);
  const auto name = r.string("name");
  if (!name) throw ConfigError(r.field("name"), "required field is missing");
  m.name = *name;
  if (known_methods().count(m.name) == 0) {
    throw ConfigError(r.field("name"), "unknown method \"" + m.name + "\"");
  }
  m.label = r.string("label").value_or(m.name);
  if (m.label.empty() || m.label.find_first_of("/\\,\n") != std::string::npos) {
    throw ConfigError(r.field("label"), "labels must be nonempty without '/', '\\' or ','");
  }
  if (const json* st = r.get("stepsize")) {
    if (st->is_string()) {
      const auto mode = st->get<std::string>();
      if (mode == "theoretical") {
        m.stepsize = StepsizeMode::kTheoretical;
      } else if (mode == "tuned") {
        m.stepsize = StepsizeMode::kTuned;
      } else {
        throw ConfigError(r.field("stepsize"), "expected \"theoretical\", \"tuned\" or a number");
      }
    } else if (st->is_number()) {
      m.stepsize = StepsizeMode::kFixed;
      m.gamma = st->get<double>();
      if (!(m.gamma > 0.0) || !std::isfinite(m.gamma)) {
        throw ConfigError(r.field("stepsize"), "must be positive");
      }
    } else {
      throw ConfigError(r.field("stepsize"), "expected \"theoretical\", \"tuned\" or a number");
    }
  }
  if (auto p = r.number("p")) {
    if (!uses_p(m.name)) throw ConfigError(r.field("p"), "not used by " + m.name);
    m.p = probability(r.field("p"), *p);
  }
  if (auto tau = r.integer("tau")) {
    if (m.name != "localgd" && m.name != "scaffold") {
      throw ConfigError(r.field("tau"), "local steps apply to localgd and scaffold only");
    }
    m.tau = at_least(r, "tau", *tau, 1);
  }
  if (auto dt = r.number("dual_tau")) {
    if (m.name != "decentralized-scaffnew") {
      throw ConfigError(r.field("dual_tau"), "applies to decentralized-scaffnew only");
    }
    m.dual_tau = positive(r, "dual_tau", *dt);
  }
  r.finish();
  return m;
}

json problem_json(const ProblemSpec& s) {
  json j;
  switch (s.kind) {
    case ProblemSpec::Kind::kSyntheticQuadratic:
      j["kind"] = "synthetic-quadratic";
      j["kappa"] = s.kappa;
      j["heterogeneity"] = s.heterogeneity;
      j["L"] = s.L;
      j["dim"] = s.dim;
      j["seed"] = s.seed;
      if (s.curvature_spread) j["curvature_spread"] = *s.curvature_spread;
      return j;
    case ProblemSpec::Kind::kSyntheticLogistic:
      j["kind"] = "synthetic-logistic";
      j["samples"] = s.samples;
      j["flip_fraction"] = s.flip_fraction;
      j["dim"] = s.dim;
      j["seed"] = s.seed;
      break;
    case ProblemSpec::Kind::kLibsvm:
      j["kind"] = "libsvm";
      j["path"] = s.path;
      j["max_samples"] = s.max_samples;
      j["max_features"] = s.max_features;
      break;
  }
  if (s.lambda) {
    j["lambda"] = *s.lambda;
  } else {
    j["lambda_factor"] = s.lambda_factor;
  }
  return j;
}

json method_json(const MethodSpec& m) {
  json j;
  j["name"] = m.name;
  j["label"] = m.label;
  switch (m.stepsize) {
    case StepsizeMode::kTheoretical: j["stepsize"] = "theoretical"; break;
    case StepsizeMode::kTuned: j["stepsize"] = "tuned"; break;
    case StepsizeMode::kFixed: j["stepsize"] = m.gamma; break;
  }
  if (m.p) j["p"] = *m.p;
  if (m.tau) j["tau"] = *m.tau;
  if (m.dual_tau) j["dual_tau"] = *m.dual_tau;
  return j;
}

json canonical_json(const ExperimentConfig& c) {
  json j;
  j["problem"] = problem_json(c.problem);
  j["split"] = {{"clients", c.split.clients},
                {"mode", c.split.mode == SplitMode::kShardByLabel ? "shard-by-label"
                                                                   : "round-robin"}};
  const char* reg = "none";
  if (c.regularizer.kind == RegularizerSpec::Kind::kL1) reg = "l1";
  if (c.regularizer.kind == RegularizerSpec::Kind::kSquaredL2) reg = "squared-l2";
  j["regularizer"] = {{"kind", reg}, {"weight", c.regularizer.weight}};
  j["methods"] = json::array();
  for (const auto& m : c.methods) j["methods"].push_back(method_json(m));
  j["p"] = c.p_list;
  if (c.iterations) j["iterations"] = *c.iterations;
  j["target"] = c.target;
  j["seeds"] = c.seeds;
  json oracle;
  switch (c.oracle.kind) {
    case OracleSpec::Kind::kExact: oracle = {{"kind", "exact"}}; break;
    case OracleSpec::Kind::kGaussian: oracle = {{"kind", "gaussian"}, {"sigma", c.oracle.sigma}}; break;
    case OracleSpec::Kind::kMinibatch: oracle = {{"kind", "minibatch"}, {"batch", c.oracle.batch}}; break;
  }
  j["oracle"] = oracle;
  if (c.topology) {
    const auto& t = *c.topology;
    json tj = {{"kind", t.kind}, {"n", t.nodes}};
    if (t.kind == "grid") {
      tj["rows"] = t.rows;
      tj["cols"] = t.cols;
    }
    if (t.kind == "custom") tj["edges"] = t.edges;
    j["topology"] = tj;
  }
  j["comm_budget"] = c.comm_budget;
  j["log_every"] = c.log_every;
  j["output"] = c.output;
  return j;
}

}  // namespace

std::vector<std::string> expanded_labels(const MethodSpec& m, const std::vector<double>& p_list) {
  if (p_list.empty() || m.p || !uses_p(m.name)) return {m.label};
  std::vector<std::string> out;
  for (double p : p_list) out.push_back(m.label + "-p" + format_double(p));
  return out;
}

bool method_uses_p(const std::string& name) { return uses_p(name); }

ExperimentConfig parse_config(const json& j) {
  Reader r(j, "");
  ExperimentConfig c;
  c.problem = parse_problem(r.require("problem"));
  if (const json* v = r.get("split")) c.split = parse_split(*v);
  if (c.problem.kind == ProblemSpec::Kind::kSyntheticLogistic &&
      c.split.clients > c.problem.samples) {
    throw ConfigError("split.clients", "more clients than samples");
  }
  if (const json* v = r.get("regularizer")) c.regularizer = parse_regularizer(*v);

  const json& methods = r.require("methods");
  if (!methods.is_array() || methods.empty()) {
    throw ConfigError("methods", "expected a nonempty array");
  }
  for (std::size_t k = 0; k < methods.size(); ++k) {
    c.methods.push_back(parse_method(methods[k], index_path("methods", k)));
  }

  if (const json* v = r.get("p")) {
    if (!v->is_array()) throw ConfigError("p", "expected an array of probabilities");
    for (std::size_t k = 0; k < v->size(); ++k) {
      const std::string f = index_path("p", k);
      if (!(*v)[k].is_number()) throw ConfigError(f, "expected a number");
      c.p_list.push_back(probability(f, (*v)[k].get<double>()));
    }
  }
  if (auto it = r.integer("iterations")) c.iterations = at_least(r, "iterations", *it, 1);
  c.target = r.number("target").value_or(c.target);
  if (!(c.target > 0.0 && c.target < 1.0)) throw ConfigError("target", "must lie in (0, 1)");

  if (const json* v = r.get("seeds")) {
    if (!v->is_array() || v->empty()) throw ConfigError("seeds", "expected a nonempty array");
    for (std::size_t k = 0; k < v->size(); ++k) {
      const json& s = (*v)[k];
      if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
        throw ConfigError(index_path("seeds", k), "expected a nonnegative integer");
      }
      c.seeds.push_back(s.get<std::uint64_t>());
    }
    std::vector<std::uint64_t> sorted = c.seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ConfigError("seeds", "duplicate seed");
    }
  } else {
    for (int s = 1; s <= kDefaultSeedCount; ++s) c.seeds.push_back(static_cast<std::uint64_t>(s));
  }

  if (const json* v = r.get("oracle")) c.oracle = parse_oracle(*v);
  if (const json* v = r.get("topology")) c.topology = parse_topology(*v);
  c.comm_budget = at_least(r, "comm_budget", r.integer("comm_budget").value_or(0), 0);
  c.log_every = at_least(r, "log_every", r.integer("log_every").value_or(1), 1);
  c.output = r.string("output").value_or(c.output);
  r.finish();

  // Cross-field checks.
  std::set<std::string> labels;
  for (std::size_t k = 0; k < c.methods.size(); ++k) {
    const MethodSpec& m = c.methods[k];
    const std::string f = index_path("methods", k);
    for (const std::string& label : expanded_labels(m, c.p_list)) {
      if (!labels.insert(label).second) {
        throw ConfigError(f, "duplicate label \"" + label + "\"");
      }
    }
    if (c.regularizer.kind != RegularizerSpec::Kind::kNone && m.name != "proxskip" &&
        m.name != "sproxskip") {
      throw ConfigError(f, "a regularizer is supported by proxskip and sproxskip only");
    }
    if (m.name == "decentralized-scaffnew") {
      if (!c.topology) throw ConfigError("topology", "required by decentralized-scaffnew");
      if (c.oracle.kind != OracleSpec::Kind::kExact) {
        throw ConfigError("oracle", "decentralized-scaffnew uses exact gradients");
      }
    }
    if (m.stepsize == StepsizeMode::kTuned && c.comm_budget <= 0) {
      throw ConfigError("comm_budget", "tuned stepsizes need a positive communication budget");
    }
  }
  if (c.topology) {
    if (c.topology->nodes == 0) c.topology->nodes = c.split.clients;
    if (c.topology->nodes != c.split.clients) {
      throw ConfigError("topology.n", "must equal split.clients");
    }
  }
  if (c.oracle.kind == OracleSpec::Kind::kMinibatch &&
      c.problem.kind == ProblemSpec::Kind::kSyntheticLogistic &&
      c.oracle.batch > c.problem.samples) {
    throw ConfigError("oracle.batch", "exceeds the number of samples");
  }

  c.canonical = canonical_json(c);
  c.hash = config_hash(c.canonical);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", "malformed JSON in " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  // Data paths are relative to the config file.
  if (j.contains("problem") && j["problem"].is_object() && j["problem"].contains("path") &&
      j["problem"]["path"].is_string()) {
    const std::filesystem::path data = j["problem"]["path"].get<std::string>();
    if (data.is_relative() && !data.empty()) {
      j["problem"]["path"] = (path.parent_path() / data).lexically_normal().string();
    }
  }
  return parse_config(j);
}

std::string config_hash(const json& canonical) {
  const std::string text = canonical.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace proxskip::harness
