#pragma once

#include "proxskip/numerics.hpp"
#include "proxskip/objective.hpp"
#include "proxskip/problems.hpp"
#include "proxskip/prox.hpp"
#include "proxskip/record.hpp"

#include <cstdint>
#include <optional>

namespace proxskip {

/// Stepsize gamma, prox probability p, iteration count T and coin seed.
struct ProxSkipConfig {
  double gamma = 0.0;
  double p = 1.0;
  std::int64_t iterations = 1;
  std::uint64_t seed = 0;

  /// Throws ArgumentError unless gamma > 0, 0 < p <= 1 and iterations >= 0.
  void validate() const;
};

/// Iterate x_t, control variate h_t and counters. The coin for step t is a pure
/// function of (seed, t), so (seed, t) is the whole generator state.
struct SolverState {
  Vec x;
  Vec h;
  std::int64_t t = 0;
  std::int64_t prox_calls = 0;
  std::int64_t grad_calls = 0;

  static SolverState initial(Vec x0, Vec h0);
  /// h_0 = 0.
  static SolverState initial(Vec x0);
};

/// Reference point for the Lyapunov function: x_star and h_star = grad f(x_star).
struct Probe {
  Vec x_star;
  Vec h_star;
};

/// x_{t+1} = prox_{gamma psi}(x_t - gamma grad f(x_t)).
Vec prox_gd_step(const Objective& f, const ProxOperator& psi, double gamma, const Vec& x);

/// One ProxSkip iteration:
///   x_hat = x - gamma (grad f(x) - h)
///   theta ~ Bernoulli(p) (or `coin` when given)
///   x'    = theta ? prox_{(gamma/p) psi}(x_hat - (gamma/p) h) : x_hat
///   h'    = h + (p/gamma)(x' - x_hat)
SolverState proxskip_step(const SolverState& state, const Objective& f, const ProxOperator& psi,
                          const ProxSkipConfig& cfg, std::optional<bool> coin = std::nullopt);

/// Runs cfg.iterations ProxSkip steps from (x0, h0). With a probe, rows carry
/// ||x_t - x_star||^2 and Psi_t. comm_rounds counts prox calls.
RunRecord run_proxskip(const Objective& f, const ProxOperator& psi, const ProxSkipConfig& cfg,
                       const Vec& x0, const Vec& h0, const std::optional<Probe>& probe = {},
                       const RunOptions& options = {});

/// Psi = ||x - x_star||^2 + (gamma/p)^2 ||h - h_star||^2.
double lyapunov(const Vec& x, const Vec& h, const Vec& x_star, const Vec& h_star, double gamma,
                double p);

/// E[Psi_{t+1} | state] with the expectation over the coin taken exactly:
/// p * Psi(prox branch) + (1 - p) * Psi(skip branch).
double one_step_expected_lyapunov(const SolverState& state, const Objective& f,
                                  const ProxOperator& psi, const ProxSkipConfig& cfg,
                                  const Vec& x_star, const Vec& h_star);

/// sqrt(mu / L), clamped to (0, 1]. Throws ArgumentError when mu <= 0.
double optimal_probability(const SmoothnessInfo& info);

/// Iteration count max{1/(gamma mu), 1/p^2} * log(1/epsilon), rounded up.
std::int64_t proxskip_iterations_for(double gamma, double p, double mu, double epsilon);

/// High-accuracy minimizer of f + psi. psi == 0: quadratics solve A x = b,
/// logistic problems run Newton to ||grad f|| <= 1e-12. Otherwise ProxGD with
/// gamma = 1/L until the prox-gradient residual is <= 1e-12 (cap 1e6 steps).
Vec reference_minimizer(const Problem& problem, const ProxOperator& psi);

/// Probe built from reference_minimizer.
Probe make_probe(const Problem& problem, const ProxOperator& psi);

}  // namespace proxskip
