#include "proxskip/harness/verify.hpp"

#include "proxskip/decentralized.hpp"
#include "proxskip/federated.hpp"
#include "proxskip/harness/config.hpp"
#include "proxskip/harness/csv.hpp"
#include "proxskip/harness/experiment.hpp"
#include "proxskip/problems.hpp"
#include "proxskip/prox.hpp"
#include "proxskip/rng.hpp"
#include "proxskip/solvers.hpp"
#include "proxskip/stochastic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <ostream>
#include <sstream>

namespace proxskip::harness {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Vec random_normal(Index d, const CounterRng& rng, std::uint64_t step, double scale) {
  Vec v(d);
  for (Index i = 0; i < d; ++i) v[i] = scale * rng.normal(step, static_cast<std::uint64_t>(i));
  return v;
}

CheckResult result(bool passed, std::string detail) {
  CheckResult r;
  r.passed = passed;
  r.detail = std::move(detail);
  return r;
}

// 1. E[Psi_{t+1}] <= (1 - min(gamma mu, p^2)) Psi_t along trajectories, coin enumerated.
CheckResult check_one_step_contraction() {
  const ProxOperator psi = ProxOperator::l1(0.1);
  double worst = -std::numeric_limits<double>::infinity();
  double oracle_gap = 0.0;
  int cases = 0;
  for (double kappa : {10.0, 100.0, 1e4}) {
    const Problem f = synthetic::heterogeneous_quadratic(1, 10, kappa, 1.0, 11);
    const SmoothnessInfo info = smoothness_constants(f);
    const Probe probe = make_probe(f, psi);
    for (double p : {1.0, 1.0 / std::sqrt(kappa), 0.01}) {
      const ProxSkipConfig cfg{1.0 / info.L, p, 500, 3};
      const double gamma = cfg.gamma;
      const double zeta = std::min(gamma * info.mu, p * p);
      const CounterRng rng(17, streams::kData);
      SolverState s = SolverState::initial(random_normal(10, rng, 0, 10.0),
                                           random_normal(10, rng, 1, 1.0));
      for (int k = 0; k < 500; ++k) {
        // Both coin outcomes evaluated directly.
        const Vec xhat = s.x - gamma * (f.gradient(s.x) - s.h);
        const Vec xp = prox(psi, gamma / p, xhat - (gamma / p) * s.h);
        const Vec hp = s.h + (p / gamma) * (xp - xhat);
        const double psi_now = lyapunov(s.x, s.h, probe.x_star, probe.h_star, gamma, p);
        const double expected =
            p * lyapunov(xp, hp, probe.x_star, probe.h_star, gamma, p) +
            (p < 1.0 ? (1.0 - p) * lyapunov(xhat, s.h, probe.x_star, probe.h_star, gamma, p) : 0.0);
        const double lib = one_step_expected_lyapunov(s, f, psi, cfg, probe.x_star, probe.h_star);
        oracle_gap = std::max(oracle_gap, std::abs(lib - expected) / std::max(1.0, expected));
        worst = std::max(worst, expected - (1.0 - zeta) * psi_now);
        s = proxskip_step(s, f, psi, cfg, coin_flip(cfg.seed, static_cast<std::uint64_t>(k), p));
        ++cases;
      }
    }
  }
  const bool ok = worst <= 1e-12 && oracle_gap <= 1e-12;
  return result(ok, std::to_string(cases) + " states, max E[Psi'] - (1-zeta) Psi = " + fmt(worst) +
                        ", library vs enumeration " + fmt(oracle_gap));
}

// 2. ||w - w_star||^2 <= (1 - gamma mu) ||x - x_star||^2 with w = x - gamma grad f(x).
CheckResult check_gradient_step_contraction() {
  const Problem quad = synthetic::heterogeneous_quadratic(1, 12, 100.0, 1.0, 5);
  const Problem raw = synthetic::logistic(200, 10, 0.0, 5);
  const Problem logi = raw.with_lambda(1e-2 * smoothness_constants(raw).L);
  int violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  int points = 0;
  for (const Problem* f : {&quad, &logi}) {
    const SmoothnessInfo info = smoothness_constants(*f);
    const double gamma = 1.0 / info.L;
    const Vec xs = reference_minimizer(*f, ProxOperator::none());
    const Vec ws = xs - gamma * f->gradient(xs);
    const CounterRng rng(23, streams::kData);
    for (int k = 0; k < 1000; ++k) {
      const double scale = std::pow(10.0, -3.0 + 4.0 * rng.uniform(static_cast<std::uint64_t>(k), 1u << 20));
      const Vec x = xs + random_normal(f->dim(), rng, static_cast<std::uint64_t>(k), scale);
      const double lhs = (x - gamma * f->gradient(x) - ws).squaredNorm();
      const double rhs = (1.0 - gamma * info.mu) * (x - xs).squaredNorm();
      const double excess = (lhs - rhs) / rhs;
      worst = std::max(worst, excess);
      if (excess > 1e-12) ++violations;
      ++points;
    }
  }
  return result(violations == 0, std::to_string(points) + " points, " + std::to_string(violations) +
                                      " violations, max relative excess " + fmt(worst));
}

// 3. Firm nonexpansiveness of prox operators.
CheckResult check_firm_nonexpansiveness() {
  struct Case {
    const char* name;
    ProxOperator op;
    Index dim;
  };
  const Case cases[] = {{"consensus", ProxOperator::consensus(4, 3), 12},
                        {"l1", ProxOperator::l1(0.7), 12},
                        {"squared-l2", ProxOperator::squared_l2(0.7), 12}};
  const CounterRng rng(31, streams::kData);
  double worst = -std::numeric_limits<double>::infinity();
  int violations = 0;
  std::uint64_t step = 0;
  for (const Case& c : cases) {
    for (int k = 0; k < 1000; ++k, step += 2) {
      const Vec x = random_normal(c.dim, rng, step, 3.0);
      const Vec y = random_normal(c.dim, rng, step + 1, 3.0);
      const double scale = std::pow(10.0, -2.0 + 4.0 * rng.uniform(step, 1u << 20));
      const Vec px = prox(c.op, scale, x);
      const Vec py = prox(c.op, scale, y);
      const double lhs = (px - py).squaredNorm() + ((x - px) - (y - py)).squaredNorm();
      const double excess = lhs - (x - y).squaredNorm();
      worst = std::max(worst, excess);
      if (excess > 1e-12) ++violations;
    }
  }
  return result(violations == 0, "3000 triples, max excess " + fmt(worst));
}

// 4. Scaffnew needs O(sqrt(kappa)) communications, GD O(kappa).
CheckResult check_communication_separation() {
  const Index n = 10;
  const Problem f = synthetic::heterogeneous_quadratic(n, 10, 1e4, 1.0, 7);
  const ClientProblems clients(f, heterogeneous_split(f, n, SplitMode::kShardByLabel));
  const SmoothnessInfo info = smoothness_constants(f);
  const FederatedProbe probe{reference_minimizer(f, ProxOperator::none())};

  RunOptions gd_opts;
  gd_opts.stop_lyapunov_ratio = 1e-6;
  gd_opts.log_every = std::numeric_limits<std::int64_t>::max();
  const RunRecord gd = run_gd_baseline(f, theoretical::gd_stepsize(info.L), 10'000'000, probe,
                                       gd_opts, n);
  const double gd_comm = static_cast<double>(gd.last().comm_rounds);

  std::vector<double> comms;
  bool reached = true;
  for (std::uint64_t seed = 1; seed <= 11; ++seed) {
    RunOptions opts = gd_opts;
    const ProxSkipConfig cfg{theoretical::scaffnew_stepsize(info.L), optimal_probability(info),
                             10'000'000, seed};
    const RunRecord r = run_scaffnew(clients, cfg, StochasticOracle::exact(), probe, opts);
    reached = reached && r.last().lyapunov <= 1e-6 * r.rows.front().lyapunov;
    comms.push_back(static_cast<double>(r.last().comm_rounds));
  }
  const double med = median(comms);
  const double predicted = std::sqrt(info.kappa()) * std::log(1e6);
  const bool ok = reached && med <= gd_comm / 10.0 && med >= predicted / 3.0 &&
                  med <= 3.0 * predicted;
  return result(ok, "median Scaffnew rounds " + fmt(med) + ", GD rounds " + fmt(gd_comm) +
                        ", sqrt(kappa) log(1e6) = " + fmt(predicted));
}

// 5. Scaffnew and ProxSkip on the stacked consensus problem agree bit for bit.
CheckResult check_scaffnew_stacked_identity() {
  struct Config {
    Index clients;
    Index dim;
    double kappa;
    double p;
    std::uint64_t seed;
    bool logistic;
  };
  const Config configs[] = {{4, 3, 10.0, 0.5, 1, false},
                            {10, 5, 100.0, 0.1, 2, false},
                            {3, 8, 1e4, 0.01, 3, false},
                            {5, 6, 0.0, 0.2, 4, true},
                            {2, 4, 1e3, 1.0, 5, false}};
  std::int64_t mismatches = 0;
  for (const Config& c : configs) {
    const Problem f = c.logistic
                          ? synthetic::logistic(60, c.dim, 1e-2, c.seed)
                          : synthetic::heterogeneous_quadratic(c.clients, c.dim, c.kappa, 1.0, c.seed);
    const ClientProblems clients(f, heterogeneous_split(f, c.clients, SplitMode::kShardByLabel));
    const double gamma = 1.0 / smoothness_constants(f).L;
    const StackedConsensusObjective stacked(clients);
    const ProxOperator consensus = ProxOperator::consensus(c.clients, c.dim);
    const ProxSkipConfig cfg{gamma, c.p, 200, c.seed};
    const CounterRng rng(c.seed, streams::kData);
    const Vec x0 = random_normal(c.dim, rng, 0, 1.0);
    FederatedState fed = FederatedState::initial(c.clients, x0);
    SolverState central = SolverState::initial(fed.x);
    for (std::uint64_t t = 0; t < 200; ++t) {
      const bool theta = coin_flip(c.seed, t, c.p);
      fed = scaffnew_round(fed, clients, gamma, c.p, theta);
      central = proxskip_step(central, stacked, consensus, cfg, theta);
      mismatches += (fed.x.array() != central.x.array()).count();
      mismatches += (fed.h.array() != central.h.array()).count();
    }
  }
  return result(mismatches == 0,
                "5 configs x 200 steps, " + std::to_string(mismatches) + " differing coordinates");
}

// 6. LocalGD stalls at a drift floor on label-sharded logistic regression; Scaffnew does not.
CheckResult check_local_gd_plateau() {
  const Index n = 10;
  const Problem raw = synthetic::logistic(1000, 20, 0.0, 3);
  const Problem f = raw.with_lambda(1e-4 * smoothness_constants(raw).L);
  const ClientProblems clients(f, heterogeneous_split(f, n, SplitMode::kShardByLabel));
  const SmoothnessInfo info = smoothness_constants(f);
  const FederatedProbe probe{reference_minimizer(f, ProxOperator::none())};
  const double gamma = 1.0 / info.L;
  const std::int64_t tau = std::max<std::int64_t>(1, std::llround(std::sqrt(info.kappa())));
  const std::int64_t rounds = 2000;

  RunOptions opts;
  opts.log_every = 1;
  const RunRecord lg = run_local_gd(clients, gamma, tau, rounds, StochasticOracle::exact(), 0,
                                    probe, opts);
  opts.max_comm_rounds = rounds;
  const ProxSkipConfig cfg{gamma, 1.0 / static_cast<double>(tau), 1'000'000'000, 1};
  const RunRecord sn = run_scaffnew(clients, cfg, StochasticOracle::exact(), probe, opts);

  double best = std::numeric_limits<double>::infinity();
  for (const RunRow& r : sn.rows) best = std::min(best, r.dist_sq);
  const double local_final = lg.last().dist_sq;
  // Psi_0: Scaffnew's stacked Lyapunov value at the common starting point.
  const double psi0 = sn.rows.front().lyapunov;
  const bool ok = local_final > 1e-4 * psi0 && best < 1e-8 * psi0 && !lg.diverged && !sn.diverged;
  return result(ok, "LocalGD final " + fmt(local_final / psi0) + " Psi_0, Scaffnew best " +
                        fmt(best / psi0) + " Psi_0 (tau = " + std::to_string(tau) + ")");
}

// 7. With sqrt(kappa) = 300 the best of 1/p in {100, 300, 1000} at a fixed budget is 300.
CheckResult check_optimal_probability() {
  const Index n = 4;
  // Client curvatures peak at 1 but the mean's L is smaller; rescale mu so that the
  // mean's condition number is exactly 300^2.
  const double mean_L =
      smoothness_constants(synthetic::heterogeneous_curvature_quadratic(n, 3, 9e4, 0.01, 1.0, 5)).L;
  const Problem f = synthetic::heterogeneous_curvature_quadratic(n, 3, 9e4 / mean_L, 0.01, 1.0, 5);
  const ClientProblems clients(f, heterogeneous_split(f, n, SplitMode::kShardByLabel));
  const SmoothnessInfo info = smoothness_constants(f);
  const FederatedProbe probe{reference_minimizer(f, ProxOperator::none())};
  const std::int64_t budget = 3000;
  std::vector<double> medians;
  std::string detail = "sqrt(kappa) = " + fmt(std::sqrt(info.kappa()));
  for (double inv : {100.0, 300.0, 1000.0}) {
    std::vector<double> errs;
    for (std::uint64_t seed = 1; seed <= 11; ++seed) {
      RunOptions opts;
      opts.max_comm_rounds = budget;
      opts.log_every = std::numeric_limits<std::int64_t>::max();
      const ProxSkipConfig cfg{1.0 / info.L, 1.0 / inv, 1'000'000'000, seed};
      const RunRecord r = run_scaffnew(clients, cfg, StochasticOracle::exact(), probe, opts);
      errs.push_back(r.last().dist_sq / r.rows.front().dist_sq);
    }
    medians.push_back(median(errs));
    detail += ", 1/p=" + fmt(inv) + ": " + fmt(medians.back());
  }
  const bool ok = medians[1] <= medians[0] && medians[1] <= medians[2];
  return result(ok, detail);
}

// 8. Stochastic neighborhood and the O(1/eps) iteration term.
CheckResult check_stochastic_neighborhood() {
  const Problem f = synthetic::heterogeneous_quadratic(1, 10, 10.0, 1.0, 9);
  const ProxOperator psi = ProxOperator::l1(0.05);
  const SmoothnessInfo info = smoothness_constants(f);
  const Probe probe = make_probe(f, psi);
  const StochasticOracle oracle = StochasticOracle::additive_gaussian(0.1);
  const ExpectedSmoothness es = expected_smoothness_constants(oracle, f);
  const Vec x0 = Vec::Zero(f.dim());

  auto params_for = [&](double eps) {
    const auto first = sproxskip_parameter_rule(info, es, eps, 1.0);
    const double psi0 = lyapunov(x0, Vec::Zero(f.dim()), probe.x_star, probe.h_star,
                                 first.gamma, first.p);
    return sproxskip_parameter_rule(info, es, eps, psi0);
  };
  const double eps = 1e-2;
  const SProxSkipParameters prm = params_for(eps);
  double sum = 0.0;
  RunOptions opts;
  opts.log_every = std::numeric_limits<std::int64_t>::max();
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const ProxSkipConfig cfg{prm.gamma, prm.p, prm.iterations, seed};
    sum += run_sproxskip(f, psi, oracle, cfg, x0, Vec::Zero(f.dim()), probe, opts).last().lyapunov;
  }
  const double mean = sum / 100.0;
  const SProxSkipParameters fine = params_for(eps / 10.0);
  const double growth = static_cast<double>(fine.iterations) / static_cast<double>(prm.iterations);
  const bool ok = mean <= 1.5 * eps && growth >= 5.0 && growth <= 20.0;
  return result(ok, "mean Psi_T " + fmt(mean) + " (T = " + std::to_string(prm.iterations) +
                        "), T(1e-3)/T(1e-2) = " + fmt(growth));
}

// 9. Decentralized Scaffnew and SplitSkip run in lockstep.
CheckResult check_decentralized_equivalence() {
  const Topology topologies[] = {Topology::ring(5), Topology::complete(4), Topology::star(6)};
  double worst = 0.0;
  std::string detail;
  std::uint64_t seed = 1;
  for (const Topology& g : topologies) {
    const Index n = g.nodes();
    const Problem f = synthetic::heterogeneous_quadratic(n, 3, 100.0, 1.0, seed);
    const ClientProblems clients(f, heterogeneous_split(f, n, SplitMode::kShardByLabel));
    const double L = smoothness_constants(f).L;
    const CounterRng rng(seed, streams::kData);
    const Vec x0 = random_normal(3, rng, 0, 1.0);
    double dev = 0.0;
    for (double p : {1.0, 0.3}) {
      const EquivalenceConfig cfg{1.0 / L, 0.0, p, 200, seed};
      dev = std::max(dev, equivalence_check(g, clients, cfg, &x0));
    }
    worst = std::max(worst, dev);
    detail += (detail.empty() ? "" : ", ") + g.name() + " " + fmt(dev);
    ++seed;
  }
  return result(worst <= 1e-9, "max deviation: " + detail);
}

double tail_slope(const std::vector<RunRow>& rows, double floor) {
  std::vector<std::pair<double, double>> pts;
  for (const RunRow& r : rows) {
    if (r.dist_sq > floor) pts.emplace_back(static_cast<double>(r.t), std::log(r.dist_sq));
  }
  const std::size_t start = pts.size() / 2;
  const double m = static_cast<double>(pts.size() - start);
  double sx = 0.0, sy = 0.0;
  for (std::size_t k = start; k < pts.size(); ++k) {
    sx += pts[k].first;
    sy += pts[k].second;
  }
  const double mx = sx / m, my = sy / m;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = start; k < pts.size(); ++k) {
    sxy += (pts[k].first - mx) * (pts[k].second - my);
    sxx += (pts[k].first - mx) * (pts[k].first - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

// 10. Linear decay of ||x_bar - x_star||^2 at (at least a third of) the predicted rate.
CheckResult check_decentralized_rate() {
  const Index n = 8;
  const Problem f = synthetic::heterogeneous_quadratic(n, 5, 100.0, 1.0, 3);
  const ClientProblems clients(f, heterogeneous_split(f, n, SplitMode::kShardByLabel));
  const SmoothnessInfo info = smoothness_constants(f);
  const MixingMatrix mixing = mixing_matrix(Topology::ring(n));
  const Vec x_star = reference_minimizer(f, ProxOperator::none());
  const double gamma = 1.0 / info.L;
  const double p = std::min(1.0, std::sqrt(1.0 / (mixing.delta * info.kappa())));
  const double tau = p / gamma;
  const double rate = std::min(gamma * info.mu, p * gamma * tau * mixing.delta);
  const double predicted = std::log(1.0 - rate);
  const auto iterations = static_cast<std::int64_t>(std::ceil(60.0 / rate));
  std::vector<double> slopes;
  for (std::uint64_t seed = 1; seed <= 11; ++seed) {
    const DecentralizedConfig cfg{gamma, tau, p, iterations, seed};
    const RunRecord r = run_decentralized_scaffnew(clients, mixing, cfg, x_star);
    slopes.push_back(tail_slope(r.rows, 1e-20 * r.rows.front().dist_sq));
  }
  const double med = median(slopes);
  return result(med <= predicted / 3.0, "median slope " + fmt(med) + " per step, predicted " +
                                            fmt(predicted) + " (delta = " + fmt(mixing.delta) + ")");
}

// 11. Control variates converge to the gradients at the optimum.
CheckResult check_control_variate_limits() {
  const Problem f1 = synthetic::heterogeneous_quadratic(1, 10, 100.0, 1.0, 21);
  const ProxOperator psi = ProxOperator::l1(0.1);
  const SmoothnessInfo i1 = smoothness_constants(f1);
  const Probe probe = make_probe(f1, psi);
  const ProxSkipConfig cfg{1.0 / i1.L, optimal_probability(i1), 20000, 4};
  SolverState s = SolverState::initial(Vec::Zero(10));
  for (std::int64_t t = 0; t < cfg.iterations; ++t) {
    s = proxskip_step(s, f1, psi, cfg, coin_flip(cfg.seed, static_cast<std::uint64_t>(t), cfg.p));
  }
  const double central = (s.h - probe.h_star).norm();

  const Index n = 10;
  const Problem f = synthetic::heterogeneous_quadratic(n, 10, 100.0, 1.0, 22);
  const ClientProblems clients(f, heterogeneous_split(f, n, SplitMode::kShardByLabel));
  const SmoothnessInfo info = smoothness_constants(f);
  const Vec x_star = reference_minimizer(f, ProxOperator::none());
  const double gamma = 1.0 / info.L;
  const double p = optimal_probability(info);
  FederatedState fs = FederatedState::initial(n, Vec::Zero(10));
  for (std::uint64_t t = 0; t < 20000; ++t) {
    fs = scaffnew_round(fs, clients, gamma, p, coin_flip(5, t, p));
  }
  double federated = 0.0;
  for (Index i = 0; i < n; ++i) {
    federated = std::max(federated, (Vec(fs.client_h(i)) - clients.client(i).gradient(x_star)).norm());
  }
  const bool nontrivial = probe.h_star.norm() > 1e-3;
  return result(central <= 1e-6 && federated <= 1e-6 && nontrivial,
                "central " + fmt(central) + " (|h*| = " + fmt(probe.h_star.norm()) +
                    "), federated max " + fmt(federated));
}

// 12. Identical CSV bytes across repeated runs and thread counts.
CheckResult check_determinism() {
  const nlohmann::json j = {
      {"problem", {{"kind", "synthetic-quadratic"}, {"kappa", 100}, {"dim", 5}, {"seed", 2}}},
      {"split", {{"clients", 4}}},
      {"methods", {"gd", "scaffnew", "localgd", "scaffold", "decentralized-scaffnew"}},
      {"topology", {{"kind", "ring"}}},
      {"iterations", 400},
      {"seeds", {1, 2, 3}},
      {"log_every", 7}};
  const ExperimentConfig cfg = parse_config(j);
  const nlohmann::json js = {
      {"problem", {{"kind", "synthetic-logistic"}, {"samples", 120}, {"dim", 6}, {"seed", 4}}},
      {"split", {{"clients", 3}}},
      {"methods", {"sproxskip", "scaffnew"}},
      {"oracle", {{"kind", "minibatch"}, {"batch", 8}}},
      {"iterations", 300},
      {"seeds", {1, 2}}};
  const ExperimentConfig scfg = parse_config(js);

  const auto base = std::filesystem::temp_directory_path() /
                    ("proxskip-verify-" + std::to_string(std::chrono::steady_clock::now()
                                                             .time_since_epoch()
                                                             .count()));
  std::size_t files = 0;
  std::size_t differing = 0;
  for (const ExperimentConfig* c : {&cfg, &scfg}) {
    const std::string tag = c == &cfg ? "a" : "b";
    const auto ref = run_experiment(*c, base / (tag + "1"), 1);
    const auto par = run_experiment(*c, base / (tag + "2"), 4);
    const auto again = run_experiment(*c, base / (tag + "3"), 4);
    for (std::size_t k = 0; k < ref.files.size(); ++k) {
      const std::string bytes = read_file(ref.files[k]);
      if (bytes != read_file(par.files[k]) || bytes != read_file(again.files[k])) ++differing;
      ++files;
    }
  }
  std::error_code ec;
  std::filesystem::remove_all(base, ec);
  return result(differing == 0 && files > 0, std::to_string(files) + " CSVs compared across jobs=1,4,4; " +
                                                 std::to_string(differing) + " differ");
}

}  // namespace

std::vector<Check> verification_checks() {
  return {
      {1, "one-step Lyapunov contraction", 5.0, check_one_step_contraction},
      {2, "gradient step contraction", 5.0, check_gradient_step_contraction},
      {3, "firm nonexpansiveness", 2.0, check_firm_nonexpansiveness},
      {4, "sqrt(kappa) vs kappa communication", 60.0, check_communication_separation},
      {5, "Scaffnew equals stacked ProxSkip", 10.0, check_scaffnew_stacked_identity},
      {6, "LocalGD plateau vs Scaffnew", 60.0, check_local_gd_plateau},
      {7, "optimal p sweep", 120.0, check_optimal_probability},
      {8, "stochastic neighborhood", 120.0, check_stochastic_neighborhood},
      {9, "decentralized equivalence", 10.0, check_decentralized_equivalence},
      {10, "decentralized rate", 60.0, check_decentralized_rate},
      {11, "control variate limits", 30.0, check_control_variate_limits},
      {12, "determinism", 30.0, check_determinism},
  };
}

std::string format_result(const CheckResult& r) {
  char head[160];
  std::snprintf(head, sizeof head, "%s %2d  %-36s (%.2f s / %g s)  ", r.passed ? "PASS" : "FAIL",
                r.id, r.name.c_str(), r.seconds, r.time_limit);
  return head + r.detail;
}

std::vector<CheckResult> run_verification(std::ostream& out, const std::vector<int>& only) {
  std::vector<CheckResult> results;
  for (const Check& c : verification_checks()) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = result(false, std::string("exception: ") + e.what());
    }
    r.id = c.id;
    r.name = c.name;
    r.time_limit = c.time_limit;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.seconds > c.time_limit) {
      r.passed = false;
      r.detail += "; exceeded time limit";
    }
    out << format_result(r) << std::endl;
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace proxskip::harness
