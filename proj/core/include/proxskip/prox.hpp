#pragma once

#include "proxskip/numerics.hpp"

namespace proxskip {

/// A proper closed convex regularizer psi together with its proximity map
///   prox_{s psi}(x) = argmin_y 1/2 ||y - x||^2 + s psi(y).
class ProxOperator {
 public:
  enum class Kind {
    kL1,             // psi(y) = w ||y||_1
    kSquaredL2,      // psi(y) = w ||y||^2
    kConsensus,      // indicator of {x_1 = ... = x_n}, stacked client-major
    kIndicatorZero,  // indicator of {0}
  };

  static ProxOperator l1(double weight);
  static ProxOperator squared_l2(double weight);
  static ProxOperator consensus(Index clients, Index block_dim);
  static ProxOperator indicator_zero();
  /// psi == 0, expressed as a zero-weight L1 term.
  static ProxOperator none() { return l1(0.0); }

  Kind kind() const noexcept { return kind_; }
  double weight() const noexcept { return weight_; }
  Index clients() const noexcept { return clients_; }
  Index block_dim() const noexcept { return block_dim_; }

  /// True when psi vanishes identically (zero-weight L1 or squared-L2).
  bool is_zero() const noexcept;

  /// psi(x); +infinity outside an indicator's set.
  double value(const Vec& x) const;

 private:
  ProxOperator(Kind kind, double weight, Index clients, Index block_dim)
      : kind_(kind), weight_(weight), clients_(clients), block_dim_(block_dim) {}

  Kind kind_;
  double weight_;
  Index clients_;
  Index block_dim_;
};

/// prox_{scale psi}(x). Throws ArgumentError for scale <= 0 or a dimension mismatch.
Vec prox(const ProxOperator& op, double scale, const Vec& x);
/// Same as prox(); `out` may not alias `x`.
void prox_into(const ProxOperator& op, double scale, const Vec& x, Vec& out);

/// prox_{scale psi*}(y) for the Fenchel conjugate psi*.
/// Defined for IndicatorZero (identity) and L1 (clip to [-w, w]); other kinds
/// throw UnsupportedOperation.
Vec prox_conjugate(const ProxOperator& op, double scale, const Vec& y);

}  // namespace proxskip
