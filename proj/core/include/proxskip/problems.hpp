#pragma once

#include "proxskip/numerics.hpp"
#include "proxskip/objective.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace proxskip {

using DataMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One quadratic sample: 1/2 x^T A x - b^T x.
struct QuadraticTerm {
  SymMatrix a;
  Vec b;
};

/// Smoothness L and strong convexity mu of an objective.
struct SmoothnessInfo {
  double L = 0.0;
  double mu = 0.0;

  /// L / mu, or +infinity when mu == 0.
  double kappa() const noexcept {
    return mu > 0.0 ? L / mu : std::numeric_limits<double>::infinity();
  }
};

/// Finite-sum objective
///   f(x) = w * sum_j l_j(x) + (lambda / 2) ||x||^2
/// with w = 1/N for a full problem. Samples are either quadratic terms or
/// logistic losses l_j(x) = log(1 + exp(-b_j a_j^T x)).
class Problem final : public Objective {
 public:
  enum class Kind { kQuadratic, kLogistic };

  /// Single-term quadratic 1/2 x^T A x - b^T x. A must be PSD.
  static Problem quadratic(SymMatrix a, Vec b);
  /// Mean of quadratic terms; each A_j must be PSD.
  static Problem quadratic(std::vector<QuadraticTerm> terms);
  /// Logistic regression. Labels must be exactly -1 or +1, lambda >= 0.
  static Problem logistic(DataMatrix data, Vec labels, double lambda);

  Kind kind() const noexcept { return kind_; }
  Index dim() const override { return dim_; }
  Index samples() const noexcept { return samples_; }
  double lambda() const noexcept { return lambda_; }
  /// Per-sample weight w.
  double sample_weight() const noexcept { return weight_; }

  double value(const Vec& x) const override;
  void gradient_into(const Vec& x, Vec& out) const override;

  /// weight * sum_{j in indices} grad l_j(x) + lambda x.
  void partial_gradient_into(std::span<const Index> indices, double weight, const Vec& x,
                             Vec& out) const;
  /// grad of the single-sample function l_j(x) + (lambda/2)||x||^2.
  Vec sample_gradient(Index j, const Vec& x) const;
  /// Smoothness constant of l_j + (lambda/2)||.||^2.
  double sample_smoothness(Index j) const;

  /// Sub-problem over `indices` (kept in the given order) with per-sample weight `weight`.
  Problem restrict(std::span<const Index> indices, double weight) const;

  /// Labels for logistic problems; empty for quadratics.
  const Vec& labels() const noexcept { return labels_; }
  const DataMatrix& data() const noexcept { return data_; }
  const std::vector<QuadraticTerm>& terms() const noexcept { return terms_; }

  /// Same samples, different regularization.
  Problem with_lambda(double lambda) const;

 private:
  Problem() = default;

  Kind kind_ = Kind::kQuadratic;
  Index dim_ = 0;
  Index samples_ = 0;
  double weight_ = 1.0;
  double lambda_ = 0.0;
  std::vector<QuadraticTerm> terms_;
  DataMatrix data_;
  Vec labels_;
};

/// Quadratic: L = lambda_max(A_bar), mu = lambda_min(A_bar).
/// Logistic: L = w * lambda_max(A^T A) / 4 + lambda (w = 1/N), mu = lambda.
SmoothnessInfo smoothness_constants(const Problem& p);

/// Largest eigenvalue of data^T data by power iteration.
double largest_gram_eigenvalue(const DataMatrix& data, int max_iterations = 1000,
                               double rel_tol = 1e-12);

/// Partition of sample indices into n disjoint, nonempty, covering groups.
/// Indices inside a group are ascending.
class ClientSplit {
 public:
  ClientSplit(std::vector<std::vector<Index>> groups, Index samples);

  Index clients() const noexcept { return static_cast<Index>(groups_.size()); }
  Index samples() const noexcept { return samples_; }
  const std::vector<Index>& group(Index i) const { return groups_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::vector<Index>>& groups() const noexcept { return groups_; }

  /// All samples on one client.
  static ClientSplit single(Index samples);

 private:
  std::vector<std::vector<Index>> groups_;
  Index samples_;
};

enum class SplitMode {
  kShardByLabel,  // stable sort by label (+1 first), then contiguous blocks
  kRoundRobin,    // sample j goes to client j mod n
};

/// Deterministic partition of N samples. Shard-by-label without labels
/// (an empty span) cuts contiguous blocks in index order.
ClientSplit heterogeneous_split(Index samples, Index clients, SplitMode mode,
                                std::span<const double> labels = {});
ClientSplit heterogeneous_split(const Problem& p, Index clients, SplitMode mode);

/// Client i owns f_i = (n/N) sum_{j in S_i} l_j + (lambda/2)||x||^2, so that
/// (1/n) sum_i f_i = f for any split.
class ClientProblems {
 public:
  ClientProblems(const Problem& global, const ClientSplit& split);

  Index clients() const noexcept { return static_cast<Index>(clients_.size()); }
  Index dim() const noexcept { return global_.dim(); }
  const Problem& global() const noexcept { return global_; }
  const Problem& client(Index i) const { return clients_.at(static_cast<std::size_t>(i)); }
  const ClientSplit& split() const noexcept { return split_; }

 private:
  Problem global_;
  ClientSplit split_;
  std::vector<Problem> clients_;
};

/// grad f_i(x) for client i of `split`.
Vec client_gradient(const Problem& p, const ClientSplit& split, Index i, const Vec& x);

/// Generators for desk-scale experiments.
namespace synthetic {

/// n clients, each one quadratic term with diagonal spectrum in [mu, L],
/// lambda_max = L and lambda_min = mu shared by every client (so the mean has
/// condition number exactly L/mu), a random orthogonal basis, and client-specific
/// linear terms of scale `heterogeneity`.
Problem heterogeneous_quadratic(Index clients, Index dim, double kappa, double heterogeneity,
                                std::uint64_t seed, double L = 1.0);

/// n clients sharing one soft direction of curvature mu = L / kappa. In the other
/// directions each client has its own curvature in [spread * L, L] (log-uniform),
/// and client i attains L in direction i mod (dim - 1). Every client is L-smooth
/// and mu-strongly convex while stiff curvature differs across clients.
Problem heterogeneous_curvature_quadratic(Index clients, Index dim, double kappa, double spread,
                                          double heterogeneity, std::uint64_t seed,
                                          double L = 1.0);

/// Gaussian features, labels from a planted separator with `flip_fraction` label noise.
Problem logistic(Index samples, Index dim, double lambda, std::uint64_t seed,
                 double flip_fraction = 0.05);

}  // namespace synthetic

}  // namespace proxskip
