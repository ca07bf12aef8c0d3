#include "proxskip/solvers.hpp"

#include "proxskip/errors.hpp"
#include "proxskip/rng.hpp"
#include "run_loop.hpp"
#include "update.hpp"

#include <algorithm>
#include <cmath>

namespace proxskip {

void ProxSkipConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ArgumentError("gamma must be > 0");
  if (!(p > 0.0 && p <= 1.0)) throw ArgumentError("p must lie in (0, 1]");
  if (iterations < 0) throw ArgumentError("iterations must be >= 0");
}

SolverState SolverState::initial(Vec x0, Vec h0) {
  if (x0.size() != h0.size()) throw ArgumentError("initial state: x0 and h0 differ in dimension");
  SolverState s;
  s.x = std::move(x0);
  s.h = std::move(h0);
  return s;
}

SolverState SolverState::initial(Vec x0) {
  Vec h0 = Vec::Zero(x0.size());
  return initial(std::move(x0), std::move(h0));
}

Vec prox_gd_step(const Objective& f, const ProxOperator& psi, double gamma, const Vec& x) {
  if (!(gamma > 0.0)) throw ArgumentError("prox_gd_step: gamma must be > 0");
  const Vec g = f.gradient(x);
  const Vec forward = x - gamma * g;
  return prox(psi, gamma, forward);
}

SolverState proxskip_step(const SolverState& state, const Objective& f, const ProxOperator& psi,
                          const ProxSkipConfig& cfg, std::optional<bool> coin) {
  cfg.validate();
  if (state.x.size() != f.dim() || state.h.size() != f.dim())
    throw ArgumentError("proxskip_step: state dimension mismatch");
  const bool theta =
      coin ? *coin : coin_flip(cfg.seed, static_cast<std::uint64_t>(state.t), cfg.p);
  const Vec g = f.gradient(state.x);
  return detail::proxskip_update(state, g, psi, cfg.gamma, cfg.p, theta);
}

double lyapunov(const Vec& x, const Vec& h, const Vec& x_star, const Vec& h_star, double gamma,
                double p) {
  if (x.size() != x_star.size() || h.size() != h_star.size() || x.size() != h.size())
    throw ArgumentError("lyapunov: dimension mismatch");
  const double ratio = gamma / p;
  return (x - x_star).squaredNorm() + ratio * ratio * (h - h_star).squaredNorm();
}

RunRecord run_proxskip(const Objective& f, const ProxOperator& psi, const ProxSkipConfig& cfg,
                       const Vec& x0, const Vec& h0, const std::optional<Probe>& probe,
                       const RunOptions& options) {
  cfg.validate();
  RunRecord rec;
  rec.method = "proxskip";
  rec.seed = cfg.seed;
  rec.params = {{"gamma", cfg.gamma}, {"p", cfg.p}, {"T", static_cast<double>(cfg.iterations)}};
  detail::RunLogger logger(rec, options);
  SolverState s = SolverState::initial(x0, h0);
  logger.initial(detail::proxskip_row(s, probe, cfg.gamma, cfg.p));
  for (std::int64_t t = 0; t < cfg.iterations; ++t) {
    s = proxskip_step(s, f, psi, cfg);
    if (logger.step(detail::proxskip_row(s, probe, cfg.gamma, cfg.p), s.x.norm(), t + 1 == cfg.iterations))
      break;
  }
  return rec;
}

double one_step_expected_lyapunov(const SolverState& state, const Objective& f,
                                  const ProxOperator& psi, const ProxSkipConfig& cfg,
                                  const Vec& x_star, const Vec& h_star) {
  const SolverState with_prox = proxskip_step(state, f, psi, cfg, true);
  const double psi_prox = lyapunov(with_prox.x, with_prox.h, x_star, h_star, cfg.gamma, cfg.p);
  if (cfg.p == 1.0) return psi_prox;
  const SolverState skip = proxskip_step(state, f, psi, cfg, false);
  const double psi_skip = lyapunov(skip.x, skip.h, x_star, h_star, cfg.gamma, cfg.p);
  return cfg.p * psi_prox + (1.0 - cfg.p) * psi_skip;
}

double optimal_probability(const SmoothnessInfo& info) {
  if (!(info.mu > 0.0)) throw ArgumentError("optimal_probability: mu must be > 0");
  if (!(info.L > 0.0)) throw ArgumentError("optimal_probability: L must be > 0");
  return std::min(1.0, std::sqrt(info.mu / info.L));
}

std::int64_t proxskip_iterations_for(double gamma, double p, double mu, double epsilon) {
  if (!(gamma > 0.0) || !(p > 0.0 && p <= 1.0) || !(mu > 0.0))
    throw ArgumentError("proxskip_iterations_for: need gamma > 0, p in (0, 1], mu > 0");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ArgumentError("proxskip_iterations_for: epsilon must lie in (0, 1)");
  const double rate = std::max(1.0 / (gamma * mu), 1.0 / (p * p));
  return static_cast<std::int64_t>(std::ceil(rate * std::log(1.0 / epsilon)));
}

namespace {

Vec solve_quadratic(const Problem& problem) {
  const Index d = problem.dim();
  Matrix a = Matrix::Zero(d, d);
  Vec b = Vec::Zero(d);
  for (const auto& t : problem.terms()) {
    a += t.a.matrix();
    b += t.b;
  }
  a *= problem.sample_weight();
  b *= problem.sample_weight();
  a.diagonal().array() += problem.lambda();
  const Eigen::LDLT<Matrix> ldlt(a);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-15)
    throw ArgumentError("reference_minimizer: quadratic is singular");
  Vec x = ldlt.solve(b);
  // Iterative refinement against the same gradient code the solvers use.
  for (int it = 0; it < 3; ++it) {
    const Vec r = problem.gradient(x);
    x -= ldlt.solve(r);
  }
  return x;
}

Vec newton_logistic(const Problem& problem) {
  if (!(problem.lambda() > 0.0))
    throw ArgumentError("reference_minimizer: logistic problem needs lambda > 0");
  const Index d = problem.dim();
  const DataMatrix& data = problem.data();
  const Vec& labels = problem.labels();
  Vec x = Vec::Zero(d);
  for (int it = 0; it < 200; ++it) {
    const Vec g = problem.gradient(x);
    if (g.norm() <= 1e-12) break;
    Matrix h = Matrix::Zero(d, d);
    for (Index j = 0; j < data.rows(); ++j) {
      const double m = labels[j] * data.row(j).dot(x);
      const double s = 1.0 / (1.0 + std::exp(-m));
      h.noalias() += (s * (1.0 - s)) * data.row(j).transpose() * data.row(j);
    }
    h *= problem.sample_weight();
    h.diagonal().array() += problem.lambda();
    const Vec step = h.llt().solve(g);
    // Backtracking keeps far-from-optimum starts stable.
    const double f0 = problem.value(x);
    double t = 1.0;
    Vec trial = x - step;
    while (t > 1e-8 && problem.value(trial) > f0 - 1e-4 * t * g.dot(step)) {
      t *= 0.5;
      trial = x - t * step;
    }
    if (trial == x) break;
    x = trial;
  }
  return x;
}

Vec proxgd_reference(const Problem& problem, const ProxOperator& psi) {
  const double gamma = 1.0 / smoothness_constants(problem).L;
  Vec x = Vec::Zero(problem.dim());
  for (int it = 0; it < 1000000; ++it) {
    Vec next = prox_gd_step(problem, psi, gamma, x);
    const double residual = (next - x).norm() / gamma;
    x = std::move(next);
    if (residual <= 1e-12) break;
  }
  return x;
}

}  // namespace

Vec reference_minimizer(const Problem& problem, const ProxOperator& psi) {
  if (psi.kind() == ProxOperator::Kind::kConsensus)
    throw ArgumentError("reference_minimizer: consensus prox needs stacked variables");
  if (psi.is_zero()) {
    return problem.kind() == Problem::Kind::kQuadratic ? solve_quadratic(problem)
                                                       : newton_logistic(problem);
  }
  return proxgd_reference(problem, psi);
}

Probe make_probe(const Problem& problem, const ProxOperator& psi) {
  Probe probe;
  probe.x_star = reference_minimizer(problem, psi);
  probe.h_star = problem.gradient(probe.x_star);
  return probe;
}

}  // namespace proxskip
