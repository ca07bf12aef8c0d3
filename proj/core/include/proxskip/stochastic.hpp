#pragma once

#include "proxskip/problems.hpp"
#include "proxskip/rng.hpp"
#include "proxskip/solvers.hpp"

#include <optional>

namespace proxskip {

/// Gradient estimator g(x) with E[g(x)] = grad f(x).
class StochasticOracle {
 public:
  enum class Kind { kExact, kAdditiveGaussian, kMinibatch };

  static StochasticOracle exact() { return {Kind::kExact, 0.0, 0}; }
  /// grad f(x) + noise with E||noise||^2 = sigma^2.
  static StochasticOracle additive_gaussian(double sigma);
  /// Mean over `batch` samples drawn uniformly without replacement.
  static StochasticOracle minibatch(Index batch);

  Kind kind() const noexcept { return kind_; }
  double sigma() const noexcept { return sigma_; }
  Index batch() const noexcept { return batch_; }
  bool is_exact() const noexcept { return kind_ == Kind::kExact; }

 private:
  StochasticOracle(Kind kind, double sigma, Index batch)
      : kind_(kind), sigma_(sigma), batch_(batch) {}

  Kind kind_;
  double sigma_;
  Index batch_;
};

/// Draws g(x) using the generator's step `step`, starting at draw index `first_index`.
void stochastic_gradient_into(const StochasticOracle& oracle, const Problem& p, const Vec& x,
                              const CounterRng& rng, std::uint64_t step, Vec& out,
                              std::uint64_t first_index = 0);
Vec stochastic_gradient(const StochasticOracle& oracle, const Problem& p, const Vec& x,
                        const CounterRng& rng, std::uint64_t step);

/// Constants of E||g(x) - grad f(x_star)||^2 <= 2 A D_f(x, x_star) + C.
/// C is empty when it depends on an unknown x_star.
struct ExpectedSmoothness {
  double A = 0.0;
  std::optional<double> C;
};

/// Exact: (L, 0). AdditiveGaussian: (L, sigma^2). Minibatch of size b < N:
/// A = 2 L_b and C = 2 (N - b) / (b (N - 1)) * sigma_star^2 with
/// L_b = (N (b - 1) L + (N - b) L_max) / (b (N - 1)) and
/// sigma_star^2 = (1/N) sum_j ||grad f_j(x_star) - grad f(x_star)||^2.
/// Minibatch with b = N reduces to the exact oracle.
ExpectedSmoothness expected_smoothness_constants(const StochasticOracle& oracle, const Problem& p,
                                                 const std::optional<Vec>& x_star = {});

struct SProxSkipParameters {
  double gamma = 0.0;
  double p = 1.0;
  std::int64_t iterations = 0;
};

/// gamma = min{1/A, eps mu / (2C)}, p = sqrt(gamma mu),
/// T = ceil(max{A/mu, 2C/(eps mu^2)} log(2 psi0 / eps)).
/// C == 0 (or unknown) uses gamma = 1/A. Requires mu > 0 and 0 < eps < 1.
SProxSkipParameters sproxskip_parameter_rule(const SmoothnessInfo& info,
                                             const ExpectedSmoothness& es, double epsilon,
                                             double psi0);

/// ProxSkip with g_t(x_t) in place of grad f(x_t). Coins use the coin stream and
/// gradient noise the gradient stream of cfg.seed, so the exact oracle reproduces
/// run_proxskip bit for bit.
RunRecord run_sproxskip(const Problem& problem, const ProxOperator& psi,
                        const StochasticOracle& oracle, const ProxSkipConfig& cfg, const Vec& x0,
                        const Vec& h0, const std::optional<Probe>& probe = {},
                        const RunOptions& options = {});

}  // namespace proxskip
