/**
 * Two-mode entangled coherent states of the harmonic oscillator.
 *
 *   Psi(x,y,t) = c1 Y_R(x,t) Y_L(y,t) + c2 Y_L(x,t) Y_R(y,t)
 *
 * where Y_R / Y_L are (possibly band-limited) coherent states with initial
 * phase 0 / pi, amplitude a0 on the x factors and b0 on the y factors.
 * Units: m = hbar = 1.
 */
#pragma once

#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>

namespace bohm {

using cplx = std::complex<double>;

/// Physical parameters of the two-mode state.
struct SystemSpec {
  double a0 = 2.5;
  double b0 = 2.5;
  double omega_x = 1.0;
  double omega_y = std::numbers::sqrt3;
  double c1 = std::numbers::sqrt2 / 2.0;
  double c2 = std::numbers::sqrt2 / 2.0;
  int n_in = 0;
  /// Highest included level; empty means the converged full state.
  std::optional<int> n_f;
  bool renormalize = false;

  /// Throws SpecError naming the first violated constraint.
  void validate() const;

  bool unbounded() const { return !n_f.has_value(); }
  /// Full coherent state (no truncation from either side).
  bool full_band() const { return n_in == 0 && unbounded(); }

  /// Concrete upper level: n_f, or the smallest N whose Poisson tail mass
  /// beyond N is < 1e-12 for max(a0^2, b0^2).
  int resolved_cutoff() const;

  /// Same physics, entanglement set by c2 with c1 = sqrt(1 - c2^2).
  SystemSpec with_c2(double c2_value) const;
  SystemSpec with_band(int n_in_value, std::optional<int> n_f_value) const;

  /// Stable 64-bit fingerprint of every field (bit patterns, not text).
  std::uint64_t fingerprint() const;

  friend bool operator==(const SystemSpec&, const SystemSpec&) = default;
};

/// Smallest N with sum_{n > N} Poisson(n; mean) < tail.
int poisson_cutoff(double mean, double tail = 1e-12);

/// Psi and its spatial gradient.
struct ComplexField2D {
  cplx value;
  cplx grad_x;
  cplx grad_y;
};

/// One-mode value Y and derivative dY/dx.
struct Coherent1D {
  cplx value;
  cplx deriv;
};

/// Y = exp(log_scale) * value and dY/dx = exp(log_scale) * deriv. Lets the
/// dynamics work far outside the support where Y itself underflows.
struct ScaledMode {
  cplx value;
  cplx deriv;
  double log_scale = 0.0;
};

/// Psi = exp(log_scale) * value, likewise for the gradient. term_magnitude
/// is |c1 Y_R Y_L| + |c2 Y_L Y_R| on the same scale, the reference for
/// deciding that Psi has cancelled to a node.
struct ScaledField2D {
  cplx value;
  cplx grad_x;
  cplx grad_y;
  double log_scale = 0.0;
  double term_magnitude = 0.0;

  double log_density() const;  // log |Psi|^2
  ComplexField2D unscaled() const;
};

struct ModeParams {
  double amplitude = 1.0;
  double phase = 0.0;
  double omega = 1.0;
  int n_in = 0;
  std::optional<int> n_f;
};

/**
 * Band-limited coherent state Y(x,t) and its x-derivative. Finite bands sum
 * the Fock expansion with derivatives from the ladder identity
 * psi_n' = sqrt(w/2) (sqrt(n) psi_{n-1} - sqrt(n+1) psi_{n+1}); the
 * unbounded band with n_in = 0 uses the generating-function closed form,
 * which is the exact limit of that sum and stays accurate far from the blob.
 * Throws OverflowError naming the level if a term is not representable.
 */
ScaledMode coherent_1d_scaled(double x, double t, const ModeParams& mode);
Coherent1D coherent_1d(double x, double t, const ModeParams& mode);

/// Immutable evaluator bound to one SystemSpec. Safe to share across threads.
class Wavefunction {
 public:
  explicit Wavefunction(SystemSpec spec);

  const SystemSpec& spec() const { return spec_; }
  /// Global factor the raw Psi is divided by (1 unless renormalize is set).
  double normalization() const { return normalization_; }

  ComplexField2D psi(double x, double y, double t) const;
  ScaledField2D psi_scaled(double x, double y, double t) const;
  double density(double x, double y, double t) const;

  ModeParams mode_x(double phase) const;
  ModeParams mode_y(double phase) const;

 private:
  SystemSpec spec_;
  double normalization_ = 1.0;
};

/// Convenience wrapper: builds a Wavefunction for a single evaluation.
ComplexField2D psi(const SystemSpec& spec, double x, double y, double t);

/**
 * sqrt of the integral of |Psi|^2 over the plane, by a tensor Gauss-Hermite
 * rule of order >= 2*n_f + 8 in the scaled coordinates, doubled until two
 * successive orders agree within 1e-10 (QuadratureError otherwise).
 * Always the raw, un-renormalized state.
 */
double norm_psi(const SystemSpec& spec);

/// t = 0 overlap integral of Y_L(x) Y_R(x) over the line for the given band.
double overlap_1d(double amplitude, double omega, int n_in, std::optional<int> n_f);

/// Poisson mass of levels n_in .. n_f with mean amplitude^2.
double poisson_coverage(double amplitude, int n_in, std::optional<int> n_f);

/// Poisson probability of level n for the given mean occupation.
double poisson_probability(double mean, int n);

struct BlobCenters {
  double x_c = 0.0;
  double y_c = 0.0;
  /// Largest distance of a blob from the origin (common-amplitude formula).
  double d_max = 0.0;
};

/// Centers of the right-displaced factors: x_c = sqrt(2/w_x) a0 cos(w_x t),
/// y_c = sqrt(2/w_y) b0 cos(w_y t). The left-displaced factors sit at -x_c,
/// -y_c, so the blobs of Psi are at (x_c, -y_c) and (-x_c, y_c).
BlobCenters blob_centers(const SystemSpec& spec, double t);

}  // namespace bohm
