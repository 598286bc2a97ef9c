#include "bohm/hermite.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace bohm {

namespace {

// Rescale threshold for the running row; well inside double range so the
// two-term update cannot overflow between checks.
constexpr double kRescaleAbove = 1e150;

}  // namespace

bool scaled_eigenfunction_row(double x, double omega, std::span<double> out) {
  if (out.empty()) return true;
  const double xi = std::sqrt(omega) * x;
  out[0] = std::pow(omega / std::numbers::pi, 0.25);
  if (out.size() == 1) return true;
  out[1] = std::numbers::sqrt2 * xi * out[0];
  for (std::size_t n = 1; n + 1 < out.size(); ++n) {
    const double dn = static_cast<double>(n);
    out[n + 1] = std::sqrt(2.0 / (dn + 1.0)) * xi * out[n] - std::sqrt(dn / (dn + 1.0)) * out[n - 1];
    if (!std::isfinite(out[n + 1])) return false;
  }
  return true;
}

std::vector<double> eigenfunction_row(double x, double omega, int n_max) {
  const auto count = static_cast<std::size_t>(n_max < 0 ? 0 : n_max + 1);
  std::vector<double> row(count, 0.0);
  if (count == 0) return row;

  const double xi = std::sqrt(omega) * x;
  const double norm = std::pow(omega / std::numbers::pi, 0.25);

  // Run the recurrence on mantissas m_n with psi_n = m_n * exp(log_scale_n).
  // Rescaling keeps a single running exponent; each entry remembers the
  // exponent in force when it was produced.
  std::vector<double> log_scale(count, 0.0);
  double current_log = -0.5 * xi * xi;
  double prev = 0.0;
  double cur = norm;
  row[0] = cur;
  log_scale[0] = current_log;
  for (std::size_t n = 0; n + 1 < count; ++n) {
    const double dn = static_cast<double>(n);
    const double next = std::sqrt(2.0 / (dn + 1.0)) * xi * cur - std::sqrt(dn / (dn + 1.0)) * prev;
    prev = cur;
    cur = next;
    if (std::abs(cur) > kRescaleAbove) {
      const double shift = std::log(std::abs(cur));
      const double f = std::exp(-shift);
      cur *= f;
      prev *= f;
      current_log += shift;
    }
    row[n + 1] = cur;
    log_scale[n + 1] = current_log;
  }
  for (std::size_t n = 0; n < count; ++n) {
    if (row[n] == 0.0) continue;
    const double mag = std::log(std::abs(row[n])) + log_scale[n];
    row[n] = std::copysign(std::exp(mag), row[n]);
  }
  return row;
}

}  // namespace bohm
