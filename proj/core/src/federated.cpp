#include "proxskip/federated.hpp"

#include "proxskip/errors.hpp"
#include "proxskip/rng.hpp"
#include "run_loop.hpp"
#include "update.hpp"

#include <algorithm>
#include <cmath>

namespace proxskip {

namespace {

// Client i's gradient noise uses gradient-stream indices starting at i * 2^32.
constexpr std::uint64_t kClientStride = std::uint64_t{1} << 32;

Vec repeat_blocks(const Vec& v, Index clients) {
  const Index d = v.size();
  Vec out(clients * d);
  for (Index i = 0; i < clients; ++i) out.segment(i * d, d) = v;
  return out;
}

Vec stacked_h_star(const ClientProblems& clients, const Vec& x_star) {
  const Index n = clients.clients();
  const Index d = clients.dim();
  Vec out(n * d);
  for (Index i = 0; i < n; ++i) out.segment(i * d, d) = clients.client(i).gradient(x_star);
  return out;
}

void check_config(const ClientProblems& clients, const ProxSkipConfig& cfg, const Vec* x0) {
  cfg.validate();
  if (x0 && x0->size() != clients.dim()) throw ArgumentError("federated: x0 dimension mismatch");
}

Vec start_point(const ClientProblems& clients, const Vec* x0) {
  return x0 ? *x0 : Vec::Zero(clients.dim());
}

// Reference quantities for the per-row metrics of a stacked run.
struct StackedProbe {
  Vec x_star;
  Vec x_star_stacked;
  Vec h_star_stacked;
};

std::optional<StackedProbe> stacked_probe(const ClientProblems& clients,
                                          const std::optional<FederatedProbe>& probe) {
  if (!probe) return std::nullopt;
  if (probe->x_star.size() != clients.dim())
    throw ArgumentError("federated: probe dimension mismatch");
  return StackedProbe{probe->x_star, repeat_blocks(probe->x_star, clients.clients()),
                      stacked_h_star(clients, probe->x_star)};
}

RunRow stacked_row(std::int64_t t, std::int64_t comm, std::int64_t grads, const Vec& x,
                   const Vec& h, Index n, Index d, const std::optional<StackedProbe>& probe,
                   double gamma, double p) {
  RunRow row;
  row.t = t;
  row.comm_rounds = comm;
  row.grad_evals = grads;
  row.dispersion = consensus_dispersion(x, n, d);
  if (probe) {
    row.dist_sq = (block_mean(x, n, d) - probe->x_star).squaredNorm();
    if (h.size() > 0) {
      const double ratio = gamma / p;
      row.lyapunov = (x - probe->x_star_stacked).squaredNorm() +
                     ratio * ratio * (h - probe->h_star_stacked).squaredNorm();
    }
  }
  return row;
}

// Averaged-iterate row for methods without a stacked control variate.
RunRow mean_row(std::int64_t t, std::int64_t comm, std::int64_t grads, const Vec& x_bar,
                double dispersion, const std::optional<FederatedProbe>& probe) {
  RunRow row;
  row.t = t;
  row.comm_rounds = comm;
  row.grad_evals = grads;
  row.dispersion = dispersion;
  if (probe) row.dist_sq = (x_bar - probe->x_star).squaredNorm();
  return row;
}

}  // namespace

std::int64_t CoinSchedule::ones() const {
  return static_cast<std::int64_t>(std::count(theta.begin(), theta.end(), std::uint8_t{1}));
}

CoinSchedule make_coin_schedule(double p, std::int64_t iterations, std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) throw ArgumentError("make_coin_schedule: p must lie in (0, 1]");
  if (iterations < 0) throw ArgumentError("make_coin_schedule: iterations must be >= 0");
  CoinSchedule s;
  s.p = p;
  s.seed = seed;
  s.theta.resize(static_cast<std::size_t>(iterations));
  for (std::int64_t t = 0; t < iterations; ++t)
    s.theta[static_cast<std::size_t>(t)] = coin_flip(seed, static_cast<std::uint64_t>(t), p) ? 1 : 0;
  return s;
}

double StackedConsensusObjective::value(const Vec& x) const {
  const Index n = clients_.clients();
  const Index d = clients_.dim();
  if (x.size() != n * d) throw ArgumentError("stacked objective: dimension mismatch");
  double s = 0.0;
  Vec xi(d);
  for (Index i = 0; i < n; ++i) {
    xi = x.segment(i * d, d);
    s += clients_.client(i).value(xi);
  }
  return s;
}

void StackedConsensusObjective::gradient_into(const Vec& x, Vec& out) const {
  const Index n = clients_.clients();
  const Index d = clients_.dim();
  if (x.size() != n * d) throw ArgumentError("stacked objective: dimension mismatch");
  out.resize(n * d);
  Vec xi(d);
  Vec gi(d);
  for (Index i = 0; i < n; ++i) {
    xi = x.segment(i * d, d);
    clients_.client(i).gradient_into(xi, gi);
    out.segment(i * d, d) = gi;
  }
}

FederatedState FederatedState::initial(Index clients, const Vec& x0) {
  if (clients < 1) throw ArgumentError("FederatedState: need at least one client");
  FederatedState s;
  s.clients = clients;
  s.dim = x0.size();
  s.x = repeat_blocks(x0, clients);
  s.h = Vec::Zero(clients * x0.size());
  return s;
}

Vec FederatedState::mean_x() const { return block_mean(x, clients, dim); }

Vec block_mean(const Vec& stacked, Index clients, Index dim) {
  if (clients < 1 || stacked.size() != clients * dim)
    throw ArgumentError("block_mean: dimension mismatch");
  Vec sum = stacked.head(dim);
  for (Index i = 1; i < clients; ++i) sum += stacked.segment(i * dim, dim);
  return sum / static_cast<double>(clients);
}

double consensus_dispersion(const Vec& stacked, Index clients, Index dim) {
  const Vec mean = block_mean(stacked, clients, dim);
  double s = 0.0;
  for (Index i = 0; i < clients; ++i) s += (stacked.segment(i * dim, dim) - mean).squaredNorm();
  return s / static_cast<double>(clients);
}

namespace {

struct RoundBuffers {
  Vec g;
  Vec xi;
  Vec gi;
  Vec x_hat;
  Vec shifted;
  Vec x_next;
};

// In-place Scaffnew round. Elementwise it evaluates the same expressions as the
// central ProxSkip update on the stacked problem, so both agree bit for bit.
void scaffnew_round_inplace(FederatedState& s, const ClientProblems& clients, double gamma,
                            double p, bool theta, const StochasticOracle& oracle,
                            const CounterRng& noise, const ProxOperator& consensus,
                            RoundBuffers& b) {
  const Index n = s.clients;
  const Index d = s.dim;
  const Index nd = n * d;
  const auto step = static_cast<std::uint64_t>(s.t);
  b.g.resize(nd);
  b.xi.resize(d);
  for (Index i = 0; i < n; ++i) {
    b.xi = s.x.segment(i * d, d);
    stochastic_gradient_into(oracle, clients.client(i), b.xi, noise, step, b.gi,
                             static_cast<std::uint64_t>(i) * kClientStride);
    b.g.segment(i * d, d) = b.gi;
  }
  double* x = s.x.data();
  double* h = s.h.data();
  const double* g = b.g.data();
  if (theta) {
    const double scale = gamma / p;
    const double ratio = p / gamma;
    b.x_hat.resize(nd);
    b.shifted.resize(nd);
    for (Index k = 0; k < nd; ++k) {
      b.x_hat[k] = x[k] - gamma * (g[k] - h[k]);
      b.shifted[k] = b.x_hat[k] - scale * h[k];
    }
    prox_into(consensus, scale, b.shifted, b.x_next);
    for (Index k = 0; k < nd; ++k) h[k] = h[k] + ratio * (b.x_next[k] - b.x_hat[k]);
    s.x.swap(b.x_next);
    ++s.comm_rounds;
  } else {
    for (Index k = 0; k < nd; ++k) x[k] = x[k] - gamma * (g[k] - h[k]);
  }
  ++s.t;
  s.local_grad_steps += n;
}

void check_round(const FederatedState& state, const ClientProblems& clients, double gamma,
                 double p) {
  const Index n = clients.clients();
  const Index d = clients.dim();
  if (state.clients != n || state.dim != d || state.x.size() != n * d || state.h.size() != n * d)
    throw ArgumentError("scaffnew_round: state does not match the clients");
  if (!(gamma > 0.0) || !(p > 0.0 && p <= 1.0))
    throw ArgumentError("scaffnew_round: need gamma > 0 and p in (0, 1]");
}

}  // namespace

FederatedState scaffnew_round(const FederatedState& state, const ClientProblems& clients,
                              double gamma, double p, bool theta,
                              const StochasticOracle& oracle, std::uint64_t seed) {
  check_round(state, clients, gamma, p);
  FederatedState out = state;
  RoundBuffers buffers;
  scaffnew_round_inplace(out, clients, gamma, p, theta, oracle,
                         CounterRng(seed, streams::kGradient),
                         ProxOperator::consensus(clients.clients(), clients.dim()), buffers);
  return out;
}

double federated_lyapunov(const FederatedState& state, const ClientProblems& clients,
                          const Vec& x_star, double gamma, double p) {
  if (x_star.size() != clients.dim()) throw ArgumentError("federated_lyapunov: dimension mismatch");
  const Index n = clients.clients();
  const Vec hs = stacked_h_star(clients, x_star);
  const double ratio = gamma / p;
  return (state.x - repeat_blocks(x_star, n)).squaredNorm() +
         ratio * ratio * (state.h - hs).squaredNorm();
}

RunRecord run_scaffnew(const ClientProblems& clients, const ProxSkipConfig& cfg,
                       const StochasticOracle& oracle, const std::optional<FederatedProbe>& probe,
                       const RunOptions& options, const Vec* x0) {
  check_config(clients, cfg, x0);
  const Index n = clients.clients();
  const Index d = clients.dim();
  const auto sp = stacked_probe(clients, probe);

  RunRecord rec;
  rec.method = "scaffnew";
  rec.seed = cfg.seed;
  rec.params = {{"gamma", cfg.gamma},
                {"p", cfg.p},
                {"T", static_cast<double>(cfg.iterations)},
                {"clients", static_cast<double>(n)},
                {"expected_local_steps", 1.0 / cfg.p}};
  detail::RunLogger logger(rec, options);
  FederatedState s = FederatedState::initial(n, start_point(clients, x0));
  logger.initial(stacked_row(0, 0, 0, s.x, s.h, n, d, sp, cfg.gamma, cfg.p));
  const CounterRng noise(cfg.seed, streams::kGradient);
  const ProxOperator consensus = ProxOperator::consensus(n, d);
  RoundBuffers buffers;
  for (std::int64_t t = 0; t < cfg.iterations; ++t) {
    scaffnew_round_inplace(s, clients, cfg.gamma, cfg.p,
                           coin_flip(cfg.seed, static_cast<std::uint64_t>(t), cfg.p), oracle,
                           noise, consensus,
                           buffers);
    const bool last = t + 1 == cfg.iterations;
    RunRow row;
    if (logger.needs_metrics(s.t, last, s.comm_rounds)) {
      row = stacked_row(s.t, s.comm_rounds, s.local_grad_steps, s.x, s.h, n, d, sp, cfg.gamma,
                        cfg.p);
    } else {
      row.t = s.t;
      row.comm_rounds = s.comm_rounds;
      row.grad_evals = s.local_grad_steps;
    }
    if (logger.step(row, s.x.norm(), last)) break;
  }
  return rec;
}

RunRecord run_stacked_proxskip(const ClientProblems& clients, const ProxSkipConfig& cfg,
                               const std::optional<FederatedProbe>& probe,
                               const RunOptions& options, const Vec* x0) {
  check_config(clients, cfg, x0);
  const Index n = clients.clients();
  const Index d = clients.dim();
  const auto sp = stacked_probe(clients, probe);
  const StackedConsensusObjective f(clients);
  const ProxOperator psi = ProxOperator::consensus(n, d);

  RunRecord rec;
  rec.method = "stacked-proxskip";
  rec.seed = cfg.seed;
  rec.params = {{"gamma", cfg.gamma}, {"p", cfg.p}, {"T", static_cast<double>(cfg.iterations)}};
  detail::RunLogger logger(rec, options);
  SolverState s = SolverState::initial(repeat_blocks(start_point(clients, x0), n));
  logger.initial(stacked_row(0, 0, 0, s.x, s.h, n, d, sp, cfg.gamma, cfg.p));
  for (std::int64_t t = 0; t < cfg.iterations; ++t) {
    s = proxskip_step(s, f, psi, cfg);
    const RunRow row =
        stacked_row(s.t, s.prox_calls, s.grad_calls * n, s.x, s.h, n, d, sp, cfg.gamma, cfg.p);
    if (logger.step(row, s.x.norm(), t + 1 == cfg.iterations)) break;
  }
  return rec;
}

namespace {

void check_local(const ClientProblems& clients, double gamma, std::int64_t tau,
                 std::int64_t rounds, const Vec* x0) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ArgumentError("gamma must be > 0");
  if (tau < 1) throw ArgumentError("tau must be >= 1");
  if (rounds < 0) throw ArgumentError("rounds must be >= 0");
  if (x0 && x0->size() != clients.dim()) throw ArgumentError("federated: x0 dimension mismatch");
}

}  // namespace

RunRecord run_local_gd(const ClientProblems& clients, double gamma, std::int64_t tau,
                       std::int64_t rounds, const StochasticOracle& oracle, std::uint64_t seed,
                       const std::optional<FederatedProbe>& probe, const RunOptions& options,
                       const Vec* x0) {
  check_local(clients, gamma, tau, rounds, x0);
  const Index n = clients.clients();
  const Index d = clients.dim();
  RunRecord rec;
  rec.method = "localgd";
  rec.seed = seed;
  rec.params = {{"gamma", gamma}, {"tau", static_cast<double>(tau)},
                {"rounds", static_cast<double>(rounds)}, {"clients", static_cast<double>(n)}};
  detail::RunLogger logger(rec, options);
  const CounterRng noise(seed, streams::kGradient);
  Vec x = start_point(clients, x0);
  logger.initial(mean_row(0, 0, 0, x, 0.0, probe));
  Vec stacked(n * d);
  Vec y(d);
  Vec g(d);
  std::int64_t step = 0;
  for (std::int64_t r = 0; r < rounds; ++r) {
    for (Index i = 0; i < n; ++i) {
      y = x;
      for (std::int64_t k = 0; k < tau; ++k) {
        stochastic_gradient_into(oracle, clients.client(i), y, noise,
                                 static_cast<std::uint64_t>(step + k), g,
                                 static_cast<std::uint64_t>(i) * kClientStride);
        y -= gamma * g;
      }
      stacked.segment(i * d, d) = y;
    }
    step += tau;
    x = block_mean(stacked, n, d);
    const RunRow row = mean_row(step, r + 1, step * n, x, 0.0, probe);
    if (logger.step(row, x.norm(), r + 1 == rounds, r + 1)) break;
  }
  return rec;
}

RunRecord run_scaffold(const ClientProblems& clients, double gamma, std::int64_t tau,
                       std::int64_t rounds, const StochasticOracle& oracle, std::uint64_t seed,
                       const std::optional<FederatedProbe>& probe, const RunOptions& options,
                       const Vec* x0) {
  check_local(clients, gamma, tau, rounds, x0);
  const Index n = clients.clients();
  const Index d = clients.dim();
  RunRecord rec;
  rec.method = "scaffold";
  rec.seed = seed;
  rec.params = {{"gamma", gamma}, {"tau", static_cast<double>(tau)},
                {"rounds", static_cast<double>(rounds)}, {"clients", static_cast<double>(n)}};
  detail::RunLogger logger(rec, options);
  const CounterRng noise(seed, streams::kGradient);
  Vec x = start_point(clients, x0);
  Vec c = Vec::Zero(d);
  Vec ci = Vec::Zero(n * d);
  logger.initial(mean_row(0, 0, 0, x, 0.0, probe));
  Vec ys(n * d);
  Vec ci_next(n * d);
  Vec y(d);
  Vec g(d);
  const double inv = 1.0 / (static_cast<double>(tau) * gamma);
  std::int64_t step = 0;
  for (std::int64_t r = 0; r < rounds; ++r) {
    for (Index i = 0; i < n; ++i) {
      y = x;
      const Vec correction = c - ci.segment(i * d, d);
      for (std::int64_t k = 0; k < tau; ++k) {
        stochastic_gradient_into(oracle, clients.client(i), y, noise,
                                 static_cast<std::uint64_t>(step + k), g,
                                 static_cast<std::uint64_t>(i) * kClientStride);
        y -= gamma * (g + correction);
      }
      ys.segment(i * d, d) = y;
      ci_next.segment(i * d, d) = ci.segment(i * d, d) - c + inv * (x - y);
    }
    step += tau;
    ci = ci_next;
    x = block_mean(ys, n, d);
    c = block_mean(ci, n, d);
    const RunRow row = mean_row(step, r + 1, step * n, x, 0.0, probe);
    if (logger.step(row, x.norm(), r + 1 == rounds, r + 1)) break;
  }
  return rec;
}

RunRecord run_gd_baseline(const Problem& problem, double gamma, std::int64_t iterations,
                          const std::optional<FederatedProbe>& probe, const RunOptions& options,
                          Index clients, const Vec* x0) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ArgumentError("gamma must be > 0");
  if (iterations < 0) throw ArgumentError("iterations must be >= 0");
  if (clients < 1) throw ArgumentError("clients must be >= 1");
  if (x0 && x0->size() != problem.dim()) throw ArgumentError("gd: x0 dimension mismatch");
  if (probe && probe->x_star.size() != problem.dim())
    throw ArgumentError("gd: probe dimension mismatch");
  RunRecord rec;
  rec.method = "gd";
  rec.params = {{"gamma", gamma}, {"T", static_cast<double>(iterations)},
                {"clients", static_cast<double>(clients)}};
  detail::RunLogger logger(rec, options);
  Vec x = x0 ? *x0 : Vec::Zero(problem.dim());
  auto row_at = [&](std::int64_t t) {
    RunRow row = mean_row(t, t, t * clients, x, 0.0, probe);
    if (probe) row.lyapunov = row.dist_sq;
    return row;
  };
  logger.initial(row_at(0));
  Vec g;
  for (std::int64_t t = 0; t < iterations; ++t) {
    problem.gradient_into(x, g);
    x -= gamma * g;
    if (logger.step(row_at(t + 1), x.norm(), t + 1 == iterations)) break;
  }
  return rec;
}

}  // namespace proxskip
