#include "proxskip/prox.hpp"

#include "proxskip/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace proxskip {

namespace {

void check_weight(double w) {
  if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("prox: weight must be finite and >= 0");
}

void check_dim(const ProxOperator& op, const Vec& x) {
  if (op.kind() == ProxOperator::Kind::kConsensus && x.size() != op.clients() * op.block_dim())
    throw ArgumentError("prox: consensus expects dimension " +
                        std::to_string(op.clients() * op.block_dim()) + ", got " +
                        std::to_string(x.size()));
}

}  // namespace

ProxOperator ProxOperator::l1(double weight) {
  check_weight(weight);
  return {Kind::kL1, weight, 0, 0};
}

ProxOperator ProxOperator::squared_l2(double weight) {
  check_weight(weight);
  return {Kind::kSquaredL2, weight, 0, 0};
}

ProxOperator ProxOperator::consensus(Index clients, Index block_dim) {
  if (clients < 1 || block_dim < 1)
    throw ArgumentError("prox: consensus needs clients >= 1 and block_dim >= 1");
  return {Kind::kConsensus, 0.0, clients, block_dim};
}

ProxOperator ProxOperator::indicator_zero() { return {Kind::kIndicatorZero, 0.0, 0, 0}; }

bool ProxOperator::is_zero() const noexcept {
  return (kind_ == Kind::kL1 || kind_ == Kind::kSquaredL2) && weight_ == 0.0;
}

double ProxOperator::value(const Vec& x) const {
  check_dim(*this, x);
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (kind_) {
    case Kind::kL1:
      return weight_ * x.lpNorm<1>();
    case Kind::kSquaredL2:
      return weight_ * x.squaredNorm();
    case Kind::kConsensus:
      for (Index i = 1; i < clients_; ++i)
        if (x.segment(i * block_dim_, block_dim_) != x.head(block_dim_)) return inf;
      return 0.0;
    case Kind::kIndicatorZero:
      return x.isZero(0.0) ? 0.0 : inf;
  }
  return inf;
}

void prox_into(const ProxOperator& op, double scale, const Vec& x, Vec& out) {
  if (!(scale > 0.0)) throw ArgumentError("prox: scale must be > 0");
  check_dim(op, x);
  out.resize(x.size());
  switch (op.kind()) {
    case ProxOperator::Kind::kL1: {
      const double thr = scale * op.weight();
      if (thr == 0.0) {
        out = x;
        return;
      }
      for (Index k = 0; k < x.size(); ++k) {
        const double v = x[k];
        out[k] = v > thr ? v - thr : (v < -thr ? v + thr : 0.0);
      }
      return;
    }
    case ProxOperator::Kind::kSquaredL2: {
      if (op.weight() == 0.0) {
        out = x;
        return;
      }
      const double denom = 1.0 + 2.0 * scale * op.weight();
      for (Index k = 0; k < x.size(); ++k) out[k] = x[k] / denom;
      return;
    }
    case ProxOperator::Kind::kConsensus: {
      const Index n = op.clients();
      const Index d = op.block_dim();
      const double count = static_cast<double>(n);
      for (Index k = 0; k < d; ++k) {
        const double first = x[k];
        bool equal = true;
        double sum = 0.0;
        for (Index i = 0; i < n; ++i) {
          const double v = x[i * d + k];
          equal = equal && v == first;
          sum += v;
        }
        // Points already in the consensus set are fixed exactly.
        const double avg = equal ? first : sum / count;
        for (Index i = 0; i < n; ++i) out[i * d + k] = avg;
      }
      return;
    }
    case ProxOperator::Kind::kIndicatorZero:
      out.setZero();
      return;
  }
}

Vec prox(const ProxOperator& op, double scale, const Vec& x) {
  Vec out;
  prox_into(op, scale, x, out);
  return out;
}

Vec prox_conjugate(const ProxOperator& op, double scale, const Vec& y) {
  if (!(scale > 0.0)) throw ArgumentError("prox_conjugate: scale must be > 0");
  switch (op.kind()) {
    case ProxOperator::Kind::kIndicatorZero:
      return y;
    case ProxOperator::Kind::kL1:
      // psi* is the indicator of the l_inf ball of radius w.
      return y.cwiseMax(-op.weight()).cwiseMin(op.weight());
    default:
      throw UnsupportedOperation("prox_conjugate: no conjugate prox for this operator");
  }
}

}  // namespace proxskip
