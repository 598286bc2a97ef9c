#include "bohm/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bohm {

GaussHermiteRule gauss_hermite(int order) {
  if (order < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
  const int n = order;
  const int half = (n + 1) / 2;
  const double pim4 = std::pow(std::numbers::pi, -0.25);

  GaussHermiteRule rule;
  rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
  rule.log_weights.assign(static_cast<std::size_t>(n), 0.0);

  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    // Initial guesses for the largest roots first, each seeded from the
    // previously converged ones.
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.nodes[1];
    } else {
      z = 2.0 * z - rule.nodes[static_cast<std::size_t>(i - 2)];
    }

    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    const double log_w = std::log(2.0) - 2.0 * std::log(std::abs(pp));
    rule.nodes[static_cast<std::size_t>(i)] = z;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = -z;
    rule.log_weights[static_cast<std::size_t>(i)] = log_w;
    rule.log_weights[static_cast<std::size_t>(n - 1 - i)] = log_w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(half - 1)] = 0.0;
  return rule;
}

}  // namespace bohm
