#pragma once

#include "proxskip/numerics.hpp"

namespace proxskip {

/// A differentiable function R^d -> R.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Index dim() const = 0;
  virtual double value(const Vec& x) const = 0;
  /// Writes grad f(x) into `out`, resizing it if needed.
  virtual void gradient_into(const Vec& x, Vec& out) const = 0;

  Vec gradient(const Vec& x) const {
    Vec g;
    gradient_into(x, g);
    return g;
  }
};

}  // namespace proxskip
