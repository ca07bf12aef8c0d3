#include "proxskip/stochastic.hpp"

#include "proxskip/errors.hpp"
#include "run_loop.hpp"
#include "update.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace proxskip {

StochasticOracle StochasticOracle::additive_gaussian(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw ArgumentError("additive_gaussian: sigma must be finite and >= 0");
  return {Kind::kAdditiveGaussian, sigma, 0};
}

StochasticOracle StochasticOracle::minibatch(Index batch) {
  if (batch < 1) throw ArgumentError("minibatch: batch must be >= 1");
  return {Kind::kMinibatch, 0.0, batch};
}

void stochastic_gradient_into(const StochasticOracle& oracle, const Problem& p, const Vec& x,
                              const CounterRng& rng, std::uint64_t step, Vec& out,
                              std::uint64_t first_index) {
  switch (oracle.kind()) {
    case StochasticOracle::Kind::kExact:
      p.gradient_into(x, out);
      return;
    case StochasticOracle::Kind::kAdditiveGaussian: {
      p.gradient_into(x, out);
      if (oracle.sigma() == 0.0) return;
      // Per-coordinate scale sigma / sqrt(d) gives E||noise||^2 = sigma^2.
      const double scale = oracle.sigma() / std::sqrt(static_cast<double>(p.dim()));
      for (Index k = 0; k < p.dim(); ++k)
        out[k] += scale * rng.normal(step, first_index + static_cast<std::uint64_t>(k));
      return;
    }
    case StochasticOracle::Kind::kMinibatch: {
      const Index n = p.samples();
      const Index b = oracle.batch();
      if (b > n) throw ArgumentError("minibatch: batch exceeds the sample count");
      if (b == n) {
        p.gradient_into(x, out);
        return;
      }
      // Partial Fisher-Yates: the first b entries are a uniform b-subset.
      std::vector<Index> perm(static_cast<std::size_t>(n));
      std::iota(perm.begin(), perm.end(), Index{0});
      DrawSequence draws(rng, step, first_index);
      for (Index k = 0; k < b; ++k) {
        const auto r = static_cast<Index>(draws.below(static_cast<std::uint64_t>(n - k)));
        std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(k + r)]);
      }
      perm.resize(static_cast<std::size_t>(b));
      const double weight = p.sample_weight() * static_cast<double>(n) / static_cast<double>(b);
      p.partial_gradient_into(perm, weight, x, out);
      return;
    }
  }
}

Vec stochastic_gradient(const StochasticOracle& oracle, const Problem& p, const Vec& x,
                        const CounterRng& rng, std::uint64_t step) {
  Vec out;
  stochastic_gradient_into(oracle, p, x, rng, step, out);
  return out;
}

ExpectedSmoothness expected_smoothness_constants(const StochasticOracle& oracle, const Problem& p,
                                                 const std::optional<Vec>& x_star) {
  const double L = smoothness_constants(p).L;
  switch (oracle.kind()) {
    case StochasticOracle::Kind::kExact:
      return {L, 0.0};
    case StochasticOracle::Kind::kAdditiveGaussian:
      return {L, oracle.sigma() * oracle.sigma()};
    case StochasticOracle::Kind::kMinibatch:
      break;
  }
  const Index n = p.samples();
  const Index b = oracle.batch();
  if (b > n) throw ArgumentError("minibatch: batch exceeds the sample count");
  if (b == n) return {L, 0.0};

  // Per-sample functions f_j = (w N) l_j + (lambda/2)||x||^2 average to f.
  const double scale = p.sample_weight() * static_cast<double>(n);
  double l_max = 0.0;
  for (Index j = 0; j < n; ++j)
    l_max = std::max(l_max, scale * (p.sample_smoothness(j) - p.lambda()) + p.lambda());
  const double nd = static_cast<double>(n);
  const double bd = static_cast<double>(b);
  const double l_b = (nd * (bd - 1.0) * L + (nd - bd) * l_max) / (bd * (nd - 1.0));
  ExpectedSmoothness es{2.0 * l_b, std::nullopt};
  if (x_star) {
    const Vec g = p.gradient(*x_star);
    double sigma_sq = 0.0;
    for (Index j = 0; j < n; ++j) {
      const Vec gj = scale * (p.sample_gradient(j, *x_star) - p.lambda() * *x_star) +
                     p.lambda() * *x_star;
      sigma_sq += (gj - g).squaredNorm();
    }
    sigma_sq /= nd;
    es.C = 2.0 * (nd - bd) / (bd * (nd - 1.0)) * sigma_sq;
  }
  return es;
}

SProxSkipParameters sproxskip_parameter_rule(const SmoothnessInfo& info,
                                             const ExpectedSmoothness& es, double epsilon,
                                             double psi0) {
  if (!(info.mu > 0.0)) throw ArgumentError("sproxskip_parameter_rule: mu must be > 0");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ArgumentError("sproxskip_parameter_rule: epsilon must lie in (0, 1)");
  if (!(es.A > 0.0)) throw ArgumentError("sproxskip_parameter_rule: A must be > 0");
  if (!(psi0 >= 0.0)) throw ArgumentError("sproxskip_parameter_rule: psi0 must be >= 0");
  const double mu = info.mu;
  const double c = es.C.value_or(0.0);
  SProxSkipParameters out;
  out.gamma = 1.0 / es.A;
  if (c > 0.0) out.gamma = std::min(out.gamma, epsilon * mu / (2.0 * c));
  out.p = std::min(1.0, std::sqrt(out.gamma * mu));
  const double rate = std::max(es.A / mu, 2.0 * c / (epsilon * mu * mu));
  const double logs = std::log(2.0 * psi0 / epsilon);
  out.iterations = logs > 0.0 ? static_cast<std::int64_t>(std::ceil(rate * logs)) : 0;
  return out;
}

RunRecord run_sproxskip(const Problem& problem, const ProxOperator& psi,
                        const StochasticOracle& oracle, const ProxSkipConfig& cfg, const Vec& x0,
                        const Vec& h0, const std::optional<Probe>& probe,
                        const RunOptions& options) {
  cfg.validate();
  if (x0.size() != problem.dim()) throw ArgumentError("run_sproxskip: x0 dimension mismatch");
  RunRecord rec;
  rec.method = "sproxskip";
  rec.seed = cfg.seed;
  rec.params = {{"gamma", cfg.gamma}, {"p", cfg.p}, {"T", static_cast<double>(cfg.iterations)}};
  detail::RunLogger logger(rec, options);
  const CounterRng noise(cfg.seed, streams::kGradient);
  SolverState s = SolverState::initial(x0, h0);
  logger.initial(detail::proxskip_row(s, probe, cfg.gamma, cfg.p));
  Vec g;
  for (std::int64_t t = 0; t < cfg.iterations; ++t) {
    const auto step = static_cast<std::uint64_t>(s.t);
    const bool theta = coin_flip(cfg.seed, step, cfg.p);
    stochastic_gradient_into(oracle, problem, s.x, noise, step, g);
    s = detail::proxskip_update(s, g, psi, cfg.gamma, cfg.p, theta);
    if (logger.step(detail::proxskip_row(s, probe, cfg.gamma, cfg.p), s.x.norm(),
                    t + 1 == cfg.iterations))
      break;
  }
  return rec;
}

}  // namespace proxskip
