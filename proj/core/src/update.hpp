#pragma once

#include "proxskip/prox.hpp"
#include "proxskip/solvers.hpp"

#include <optional>

namespace proxskip::detail {

/// The ProxSkip update given the gradient estimate g at state.x. Every solver that
/// must agree bitwise with ProxSkip goes through these exact expressions.
inline SolverState proxskip_update(const SolverState& state, const Vec& g, const ProxOperator& psi,
                                   double gamma, double p, bool theta) {
  SolverState next;
  next.t = state.t + 1;
  next.grad_calls = state.grad_calls + 1;
  next.prox_calls = state.prox_calls;
  Vec x_hat = state.x - gamma * (g - state.h);
  if (theta) {
    const double scale = gamma / p;
    const Vec shifted = x_hat - scale * state.h;
    next.x = prox(psi, scale, shifted);
    next.h = state.h + (p / gamma) * (next.x - x_hat);
    ++next.prox_calls;
  } else {
    next.x = std::move(x_hat);
    next.h = state.h;
  }
  return next;
}

/// Log row of a central ProxSkip state.
inline RunRow proxskip_row(const SolverState& s, const std::optional<Probe>& probe, double gamma,
                           double p) {
  RunRow row;
  row.t = s.t;
  row.comm_rounds = s.prox_calls;
  row.grad_evals = s.grad_calls;
  if (probe) {
    row.dist_sq = (s.x - probe->x_star).squaredNorm();
    row.lyapunov = lyapunov(s.x, s.h, probe->x_star, probe->h_star, gamma, p);
  }
  return row;
}

}  // namespace proxskip::detail
