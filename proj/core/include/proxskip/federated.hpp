#pragma once

#include "proxskip/problems.hpp"
#include "proxskip/prox.hpp"
#include "proxskip/record.hpp"
#include "proxskip/solvers.hpp"
#include "proxskip/stochastic.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace proxskip {

/// Server-side coin sequence theta_0..theta_{T-1}, shared by every client.
/// theta_t matches coin_flip(seed, t, p), i.e. the coins of a central run.
struct CoinSchedule {
  std::vector<std::uint8_t> theta;
  double p = 1.0;
  std::uint64_t seed = 0;

  std::int64_t ones() const;
};

CoinSchedule make_coin_schedule(double p, std::int64_t iterations, std::uint64_t seed);

/// F(x_1, ..., x_n) = sum_i f_i(x_i) over stacked client-major vectors. ProxSkip on
/// F + consensus indicator is Scaffnew.
class StackedConsensusObjective final : public Objective {
 public:
  explicit StackedConsensusObjective(const ClientProblems& clients) : clients_(clients) {}

  Index dim() const override { return clients_.clients() * clients_.dim(); }
  double value(const Vec& x) const override;
  void gradient_into(const Vec& x, Vec& out) const override;

 private:
  const ClientProblems& clients_;
};

/// Client iterates and control variates stored stacked (client i owns the
/// block [i d, (i + 1) d)).
struct FederatedState {
  Index clients = 0;
  Index dim = 0;
  Vec x;
  Vec h;
  std::int64_t t = 0;
  std::int64_t comm_rounds = 0;
  std::int64_t local_grad_steps = 0;

  /// Every client starts at x0 with h_i = 0.
  static FederatedState initial(Index clients, const Vec& x0);

  auto client_x(Index i) const { return x.segment(i * dim, dim); }
  auto client_h(Index i) const { return h.segment(i * dim, dim); }
  Vec mean_x() const;
};

/// Mean of the client blocks of a stacked vector, summed in ascending client order.
Vec block_mean(const Vec& stacked, Index clients, Index dim);
/// (1/n) sum_i ||x_i - x_bar||^2.
double consensus_dispersion(const Vec& stacked, Index clients, Index dim);

/// One Scaffnew iteration:
///   x_hat_i = x_i - gamma (g_i(x_i) - h_i)
///   theta = 1: x_i' = mean_j (x_hat_j - (gamma/p) h_j), comm_rounds + 1
///   theta = 0: x_i' = x_hat_i
///   h_i' = h_i + (p/gamma)(x_i' - x_hat_i)
/// Because sum_j h_j = 0 the average equals mean_j x_hat_j; it is taken over the
/// shifted points so that the iteration is ProxSkip on the stacked problem exactly.
/// Gradient noise for client i uses gradient-stream draws of (seed, t) offset by i.
FederatedState scaffnew_round(const FederatedState& state, const ClientProblems& clients,
                              double gamma, double p, bool theta,
                              const StochasticOracle& oracle = StochasticOracle::exact(),
                              std::uint64_t seed = 0);

/// x_star of the global problem; h_star_i = grad f_i(x_star) is derived from it.
struct FederatedProbe {
  Vec x_star;
};

/// Stacked Lyapunov sum_i ||x_i - x_star||^2 + (gamma/p)^2 sum_i ||h_i - grad f_i(x_star)||^2.
double federated_lyapunov(const FederatedState& state, const ClientProblems& clients,
                          const Vec& x_star, double gamma, double p);

/// Runs cfg.iterations Scaffnew rounds with the coins of make_coin_schedule(p, T, seed),
/// drawn on the fly.
RunRecord run_scaffnew(const ClientProblems& clients, const ProxSkipConfig& cfg,
                       const StochasticOracle& oracle = StochasticOracle::exact(),
                       const std::optional<FederatedProbe>& probe = {},
                       const RunOptions& options = {}, const Vec* x0 = nullptr);

/// ProxSkip on the stacked consensus problem with the same coins, for cross-checking.
RunRecord run_stacked_proxskip(const ClientProblems& clients, const ProxSkipConfig& cfg,
                               const std::optional<FederatedProbe>& probe = {},
                               const RunOptions& options = {}, const Vec* x0 = nullptr);

/// Local GD: each round takes tau steps x_i <- x_i - gamma g_i(x_i), then averages.
RunRecord run_local_gd(const ClientProblems& clients, double gamma, std::int64_t tau,
                       std::int64_t rounds,
                       const StochasticOracle& oracle = StochasticOracle::exact(),
                       std::uint64_t seed = 0, const std::optional<FederatedProbe>& probe = {},
                       const RunOptions& options = {}, const Vec* x0 = nullptr);

/// Scaffold, option II control variates, full participation, global stepsize 1:
///   y_i <- y_i - gamma (g_i(y_i) - c_i + c) for tau steps from y_i = x,
///   c_i <- c_i - c + (x - y_i) / (tau gamma), x <- mean y_i, c <- mean c_i.
RunRecord run_scaffold(const ClientProblems& clients, double gamma, std::int64_t tau,
                       std::int64_t rounds,
                       const StochasticOracle& oracle = StochasticOracle::exact(),
                       std::uint64_t seed = 0, const std::optional<FederatedProbe>& probe = {},
                       const RunOptions& options = {}, const Vec* x0 = nullptr);

/// Centralized gradient descent; every step is one communication round and costs
/// `clients` gradient evaluations.
RunRecord run_gd_baseline(const Problem& problem, double gamma, std::int64_t iterations,
                          const std::optional<FederatedProbe>& probe = {},
                          const RunOptions& options = {}, Index clients = 1,
                          const Vec* x0 = nullptr);

/// Stepsizes used in the convergence proofs: GD and Scaffnew 1/L, LocalGD and Scaffold 1/(tau L).
namespace theoretical {
inline double gd_stepsize(double L) { return 1.0 / L; }
inline double scaffnew_stepsize(double L) { return 1.0 / L; }
inline double local_stepsize(double L, std::int64_t tau) {
  return 1.0 / (static_cast<double>(tau) * L);
}
}  // namespace theoretical

}  // namespace proxskip
