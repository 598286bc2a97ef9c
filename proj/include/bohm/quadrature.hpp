#pragma once

#include <vector>

namespace bohm {

/// Gauss-Hermite rule for the weight exp(-x^2). Weights are kept as logs so
/// that large orders do not underflow when paired with exp(+x^2) factors.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> log_weights;

  std::size_t order() const { return nodes.size(); }
};

/// Nodes by Newton iteration on the orthonormal Hermite recurrence.
GaussHermiteRule gauss_hermite(int order);

}  // namespace bohm
