#pragma once

#include "proxskip/numerics.hpp"
#include "proxskip/objective.hpp"
#include "proxskip/problems.hpp"
#include "proxskip/prox.hpp"
#include "proxskip/record.hpp"
#include "proxskip/solvers.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace proxskip {

/// Undirected communication graph on n >= 2 nodes.
class Topology {
 public:
  enum class Kind { kRing, kComplete, kStar, kGrid, kCustom };

  static Topology ring(Index n);
  static Topology complete(Index n);
  /// Node 0 is the hub.
  static Topology star(Index n);
  /// 4-neighbour grid, node (r, c) = r * cols + c.
  static Topology grid(Index rows, Index cols);
  static Topology custom(Index n, std::vector<std::pair<Index, Index>> edges);

  Kind kind() const noexcept { return kind_; }
  Index nodes() const noexcept { return nodes_; }
  /// Edges (i, j) with i < j, no duplicates, no self-loops.
  const std::vector<std::pair<Index, Index>>& edges() const noexcept { return edges_; }
  std::vector<Index> degrees() const;
  bool connected() const;
  std::string name() const;

 private:
  Topology(Kind kind, Index nodes, std::vector<std::pair<Index, Index>> edges);

  Kind kind_;
  Index nodes_;
  std::vector<std::pair<Index, Index>> edges_;
};

/// Symmetric, doubly stochastic, PSD gossip matrix with its spectral data.
struct MixingMatrix {
  SymMatrix w;
  /// 1 - lambda_2(W).
  double delta = 0.0;
  /// Eigenvalues of W, descending.
  Vec eigenvalues;
  /// sqrt(I - W), applied blockwise to stacked vectors.
  SymMatrix sqrt_laplacian;
  /// Moore-Penrose pseudo-inverse of sqrt(I - W).
  Matrix sqrt_laplacian_pinv;
  /// Orthogonal projector onto range(sqrt(I - W)).
  Matrix range_projector;

  Index nodes() const noexcept { return w.size(); }
};

/// Lazy Metropolis weights: M_ij = 1 / (1 + max(deg_i, deg_j)) on edges, M_ii
/// fills each row to 1, W = (I + M) / 2. Throws ArgumentError when disconnected.
MixingMatrix mixing_matrix(const Topology& topology);

/// Validates an explicit W (symmetric, rows summing to 1 within 1e-12, PSD within
/// 1e-10, lambda_2 < 1) and computes its spectral data.
MixingMatrix mixing_matrix_from(SymMatrix w);

/// y = (K kron I_d) x for stacked client-major vectors.
void apply_blockwise(const Matrix& k, Index block_dim, const Vec& x, Vec& out);

/// Linear map used by SplitSkip.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual void apply(const Vec& x, Vec& out) const = 0;
  virtual void apply_transpose(const Vec& y, Vec& out) const = 0;
};

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(Matrix m) : m_(std::move(m)) {}
  Index rows() const override { return m_.rows(); }
  Index cols() const override { return m_.cols(); }
  void apply(const Vec& x, Vec& out) const override;
  void apply_transpose(const Vec& y, Vec& out) const override;

 private:
  Matrix m_;
};

/// K kron I_d for a symmetric K.
class BlockOperator final : public LinearOperator {
 public:
  BlockOperator(SymMatrix k, Index block_dim) : k_(std::move(k)), block_dim_(block_dim) {}
  Index rows() const override { return k_.size() * block_dim_; }
  Index cols() const override { return k_.size() * block_dim_; }
  void apply(const Vec& x, Vec& out) const override;
  void apply_transpose(const Vec& y, Vec& out) const override;

 private:
  SymMatrix k_;
  Index block_dim_;
};

/// Stacked per-node iterates and control variates for Decentralized Scaffnew.
struct DecentralizedState {
  Index nodes = 0;
  Index dim = 0;
  Vec x;
  Vec h;
  std::int64_t t = 0;
  std::int64_t comm_rounds = 0;
  std::int64_t grad_evals = 0;

  /// x_i = x0 and h_i = 0 for every node.
  static DecentralizedState initial(Index nodes, const Vec& x0);
  Vec mean_x() const;
};

/// One Decentralized Scaffnew iteration:
///   x_hat_i = x_i - gamma (grad f_i(x_i) - h_i)
///   theta = 1: x_i' = (1 - gamma tau/p) x_hat_i + (gamma tau/p) sum_j W_ij x_hat_j,
///              h_i' = h_i + (p/gamma)(x_i' - x_hat_i)
///   theta = 0: x_i' = x_hat_i, h_i' = h_i
/// Throws ArgumentError when gamma tau / p > 1.
DecentralizedState decentralized_scaffnew_round(const DecentralizedState& state,
                                                const ClientProblems& clients, const SymMatrix& w,
                                                double gamma, double tau, double p, bool theta);

struct DecentralizedConfig {
  double gamma = 0.0;
  /// Dual stepsize; <= 0 selects tau = p / gamma.
  double tau = 0.0;
  double p = 1.0;
  std::int64_t iterations = 1;
  std::uint64_t seed = 0;

  double resolved_tau() const { return tau > 0.0 ? tau : p / gamma; }
};

/// Rows carry ||x_bar - x_star||^2 and dispersion; with x_star they also carry the
/// per-node Lyapunov value Phi / n, where the dual gap is recovered from the control
/// variates as y - y_star = -pinv(L)(h - h_star) with h_star_i = grad f_i(x_star).
RunRecord run_decentralized_scaffnew(const ClientProblems& clients, const MixingMatrix& mixing,
                                     const DecentralizedConfig& cfg,
                                     const std::optional<Vec>& x_star = {},
                                     const RunOptions& options = {}, const Vec* x0 = nullptr);

/// Primal iterate and dual variable of SplitSkip.
struct DualState {
  Vec x;
  Vec y;
  std::int64_t t = 0;
  std::int64_t prox_calls = 0;

  /// y_0 = 0 of dimension `dual_dim`.
  static DualState initial(Vec x0, Index dual_dim);
};

/// One SplitSkip iteration for min f(x) + psi(L x):
///   x_hat = x - gamma (grad f(x) + L^T y)
///   theta = 1: y' = prox_{tau psi*}(y + tau L x_hat), x' = x_hat - (gamma/p) L^T (y' - y)
///   theta = 0: x' = x_hat, y' = y
DualState splitskip_step(const DualState& state, const Objective& f, const LinearOperator& lmat,
                         const ProxOperator& psi, double gamma, double tau, double p, bool theta);

/// Phi = ||x - x_star||^2 + (gamma / (p tau)) ||y - y_star||^2.
double decentralized_lyapunov(const DualState& state, const Vec& x_star, const Vec& y_star,
                              double gamma, double p, double tau);

/// ||x0 - x_star||^2 + gamma / (p tau delta n) sum_i ||grad f_i(x_star)||^2.
double decentralized_phi0_bound(const ClientProblems& clients, const Vec& x0, const Vec& x_star,
                                double gamma, double p, double tau, double delta);

/// y_star of the stacked problem with L = sqrt(I - W) blockwise and psi the
/// indicator of {0}, from a SplitSkip run with p = 1 until ||x - x_star|| <= 1e-12
/// (cap 1e6 steps).
Vec reference_dual_solution(const ClientProblems& clients, const MixingMatrix& mixing,
                            const Vec& x_star, double gamma, double tau);

struct EquivalenceConfig {
  double gamma = 0.0;
  double tau = 0.0;  // <= 0: p / gamma
  double p = 1.0;
  std::int64_t iterations = 200;
  std::uint64_t seed = 0;
};

/// Runs Decentralized Scaffnew and SplitSkip (L = sqrt(I - W), psi = indicator of {0})
/// in lockstep on shared coins; returns max over t and i of ||x_i^(3) - x_i^(4)||_inf.
double equivalence_check(const Topology& topology, const ClientProblems& clients,
                         const EquivalenceConfig& cfg, const Vec* x0 = nullptr);

}  // namespace proxskip
