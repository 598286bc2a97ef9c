#include "bohm/wavefunction.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "bohm/errors.hpp"
#include "bohm/hermite.hpp"
#include "bohm/quadrature.hpp"

namespace bohm {

namespace {

constexpr double kNormTolerance = 1e-12;
constexpr double kQuadratureAgreement = 1e-10;
constexpr int kMaxQuadratureOrder = 1024;

cplx unit_phasor(double phase) {
  if (phase == 0.0) return {1.0, 0.0};
  if (phase == std::numbers::pi) return {-1.0, 0.0};
  return std::polar(1.0, phase);
}

int effective_cutoff(double amplitude, int n_in, std::optional<int> n_f) {
  if (n_f) return *n_f;
  return std::max(n_in, poisson_cutoff(amplitude * amplitude));
}

// Scratch row for psi_n * exp(xi^2/2). Small bands stay on the stack.
class ScaledRow {
 public:
  explicit ScaledRow(std::size_t n) : heap_(n > kInline ? n : 0), size_(n) {}
  std::span<double> span() {
    return size_ > kInline ? std::span<double>(heap_) : std::span<double>(inline_.data(), size_);
  }

 private:
  static constexpr std::size_t kInline = 64;
  std::array<double, kInline> inline_{};
  std::vector<double> heap_;
  std::size_t size_;
};

/// Right (phase 0) and left (phase pi) factors of one coordinate. They share
/// the eigenfunction row; the left coefficients differ by (-1)^n exactly.
struct ModePair {
  ScaledMode right;
  ScaledMode left;
};

ModePair closed_form_pair(double x, double t, double amplitude, double omega) {
  // Generating function: sum_n z^n/sqrt(n!) psi_n(x)
  //   = (w/pi)^(1/4) exp(-xi^2/2 + sqrt(2) z xi - z^2/2).
  const double xi = std::sqrt(omega) * x;
  const cplx z = amplitude * std::polar(1.0, -omega * t);
  const double log_norm = 0.25 * std::log(omega / std::numbers::pi) - 0.5 * amplitude * amplitude;
  const cplx common = cplx(-0.5 * xi * xi + log_norm, -0.5 * omega * t) - 0.5 * z * z;
  const cplx shift = std::numbers::sqrt2 * z * xi;

  auto build = [&](cplx exponent, cplx zz) {
    ScaledMode m;
    m.log_scale = exponent.real();
    m.value = std::polar(1.0, exponent.imag());
    m.deriv = m.value * (std::sqrt(omega) * (std::numbers::sqrt2 * zz - xi));
    return m;
  };
  return {build(common + shift, z), build(common - shift, -z)};
}

ModePair fock_pair(double x, double t, double amplitude, double omega, int n_in, int n_f) {
  const double xi = std::sqrt(omega) * x;
  ScaledRow storage(static_cast<std::size_t>(n_f) + 2);
  auto row = storage.span();
  if (!scaled_eigenfunction_row(x, omega, row)) {
    int bad = 0;
    while (bad < static_cast<int>(row.size()) && std::isfinite(row[static_cast<std::size_t>(bad)])) ++bad;
    throw OverflowError(bad, "eigenfunction recurrence overflow at x=" + std::to_string(x));
  }

  const cplx step = amplitude * std::polar(1.0, -omega * t);
  const double half_omega = std::sqrt(0.5 * omega);
  cplx coeff = std::polar(std::exp(-0.5 * amplitude * amplitude), -0.5 * omega * t);
  cplx right_v{}, right_d{}, left_v{}, left_d{};
  for (int n = 0; n <= n_f; ++n) {
    if (n > 0) coeff *= step / std::sqrt(static_cast<double>(n));
    if (n < n_in) continue;
    const auto un = static_cast<std::size_t>(n);
    const double below = n > 0 ? std::sqrt(static_cast<double>(n)) * row[un - 1] : 0.0;
    const double dpsi = half_omega * (below - std::sqrt(n + 1.0) * row[un + 1]);
    const cplx tv = coeff * row[un];
    const cplx td = coeff * dpsi;
    if (!std::isfinite(tv.real()) || !std::isfinite(tv.imag()) || !std::isfinite(td.real()) ||
        !std::isfinite(td.imag())) {
      throw OverflowError(n, "coherent-state term not representable");
    }
    right_v += tv;
    right_d += td;
    if (n % 2 == 0) {
      left_v += tv;
      left_d += td;
    } else {
      left_v -= tv;
      left_d -= td;
    }
  }
  const double log_scale = -0.5 * xi * xi;
  return {{right_v, right_d, log_scale}, {left_v, left_d, log_scale}};
}

ModePair mode_pair(double x, double t, double amplitude, double omega, int n_in, std::optional<int> n_f) {
  if (n_in == 0 && !n_f) return closed_form_pair(x, t, amplitude, omega);
  return fock_pair(x, t, amplitude, omega, n_in, effective_cutoff(amplitude, n_in, n_f));
}

ScaledField2D combine(const SystemSpec& s, const ModePair& px, const ModePair& py) {
  // term 1: c1 Y_R(x) Y_L(y); term 2: c2 Y_L(x) Y_R(y)
  const double s1 = px.right.log_scale + py.left.log_scale;
  const double s2 = px.left.log_scale + py.right.log_scale;
  double top;
  if (s.c1 == 0.0) {
    top = s2;
  } else if (s.c2 == 0.0) {
    top = s1;
  } else {
    top = std::max(s1, s2);
  }
  const double f1 = s.c1 == 0.0 ? 0.0 : s.c1 * std::exp(s1 - top);
  const double f2 = s.c2 == 0.0 ? 0.0 : s.c2 * std::exp(s2 - top);

  const cplx t1 = px.right.value * py.left.value;
  const cplx t2 = px.left.value * py.right.value;
  ScaledField2D out;
  out.log_scale = top;
  out.value = f1 * t1 + f2 * t2;
  out.grad_x = f1 * px.right.deriv * py.left.value + f2 * px.left.deriv * py.right.value;
  out.grad_y = f1 * px.right.value * py.left.deriv + f2 * px.left.value * py.right.deriv;
  out.term_magnitude = std::abs(f1) * std::abs(t1) + std::abs(f2) * std::abs(t2);
  return out;
}

double norm_squared_at_order(const SystemSpec& s, int order) {
  const auto rule = gauss_hermite(order);
  const auto n = rule.order();
  std::vector<ModePair> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = rule.nodes[i];
    xs[i] = mode_pair(xi / std::sqrt(s.omega_x), 0.0, s.a0, s.omega_x, s.n_in, s.n_f);
    ys[i] = mode_pair(xi / std::sqrt(s.omega_y), 0.0, s.b0, s.omega_y, s.n_in, s.n_f);
  }
  // Kahan-compensated sum of w_i w_j exp(xi^2 + eta^2) |Psi|^2.
  double sum = 0.0;
  double comp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wx = rule.log_weights[i] + rule.nodes[i] * rule.nodes[i];
    for (std::size_t j = 0; j < n; ++j) {
      const auto f = combine(s, xs[i], ys[j]);
      const double mag2 = std::norm(f.value);
      if (mag2 == 0.0) continue;
      const double wy = rule.log_weights[j] + rule.nodes[j] * rule.nodes[j];
      const double term = std::exp(wx + wy + 2.0 * f.log_scale + std::log(mag2));
      const double y = term - comp;
      const double t = sum + y;
      comp = (t - sum) - y;
      sum = t;
    }
  }
  return sum / std::sqrt(s.omega_x * s.omega_y);
}

double overlap_at_order(double amplitude, double omega, int n_in, std::optional<int> n_f, int order) {
  const auto rule = gauss_hermite(order);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.order(); ++i) {
    const double xi = rule.nodes[i];
    const auto p = mode_pair(xi / std::sqrt(omega), 0.0, amplitude, omega, n_in, n_f);
    const cplx prod = p.left.value * p.right.value;
    if (prod == cplx{}) continue;
    const double lg = rule.log_weights[i] + xi * xi + p.left.log_scale + p.right.log_scale;
    sum += std::exp(lg) * prod.real();
  }
  return sum / std::sqrt(omega);
}

template <typename F>
double converge_order(int start, F&& evaluate, const char* what) {
  int order = std::max(start, 8);
  double prev = evaluate(order);
  while (order * 2 <= kMaxQuadratureOrder) {
    order *= 2;
    const double next = evaluate(order);
    if (std::abs(next - prev) <= kQuadratureAgreement) return next;
    prev = next;
  }
  throw QuadratureError(std::string(what) + ": successive Gauss-Hermite orders disagree above 1e-10");
}

}  // namespace

void SystemSpec::validate() const {
  auto fail = [](const std::string& msg) { throw SpecError("SystemSpec: " + msg); };
  if (!(a0 > 0.0) || !std::isfinite(a0)) fail("a0 must be positive");
  if (!(b0 > 0.0) || !std::isfinite(b0)) fail("b0 must be positive");
  if (!(omega_x > 0.0) || !std::isfinite(omega_x)) fail("omega_x must be positive");
  if (!(omega_y > 0.0) || !std::isfinite(omega_y)) fail("omega_y must be positive");
  if (!std::isfinite(c1) || !std::isfinite(c2)) fail("c1, c2 must be finite");
  if (std::abs(c1 * c1 + c2 * c2 - 1.0) > kNormTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "c1^2 + c2^2 must equal 1 (got " << c1 * c1 + c2 * c2 << ")";
    fail(os.str());
  }
  if (n_in < 0) fail("n_in must be >= 0");
  if (n_f && *n_f < n_in) fail("n_f must be >= n_in");
  if (!n_f && n_in > resolved_cutoff()) fail("n_in lies above the converged cutoff");
}

int SystemSpec::resolved_cutoff() const {
  if (n_f) return *n_f;
  return poisson_cutoff(std::max(a0 * a0, b0 * b0));
}

SystemSpec SystemSpec::with_c2(double c2_value) const {
  SystemSpec s = *this;
  s.c2 = c2_value;
  s.c1 = std::sqrt(std::max(0.0, 1.0 - c2_value * c2_value));
  return s;
}

SystemSpec SystemSpec::with_band(int n_in_value, std::optional<int> n_f_value) const {
  SystemSpec s = *this;
  s.n_in = n_in_value;
  s.n_f = n_f_value;
  return s;
}

std::uint64_t SystemSpec::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  for (double d : {a0, b0, omega_x, omega_y, c1, c2}) mix(std::bit_cast<std::uint64_t>(d));
  mix(static_cast<std::uint64_t>(n_in));
  mix(n_f ? static_cast<std::uint64_t>(*n_f) : ~0ull);
  mix(renormalize ? 1u : 0u);
  return h;
}

int poisson_cutoff(double mean, double tail) {
  if (mean <= 0.0) return 0;
  // Sum the tail from far above the mode downwards.
  const int top = static_cast<int>(mean + 40.0 * std::sqrt(mean) + 60.0);
  std::vector<double> tails(static_cast<std::size_t>(top) + 2, 0.0);
  double acc = 0.0;
  for (int n = top; n >= 0; --n) {
    tails[static_cast<std::size_t>(n)] = acc;  // mass strictly above n
    acc += poisson_probability(mean, n);
  }
  for (int n = 0; n <= top; ++n) {
    if (tails[static_cast<std::size_t>(n)] < tail) return n;
  }
  return top;
}

double poisson_probability(double mean, int n) {
  if (n < 0) return 0.0;
  if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(-mean + n * std::log(mean) - std::lgamma(n + 1.0));
}

double poisson_coverage(double amplitude, int n_in, std::optional<int> n_f) {
  const double mean = amplitude * amplitude;
  const int last = n_f ? *n_f : poisson_cutoff(mean, 1e-18);
  double sum = 0.0;
  for (int n = std::max(0, n_in); n <= last; ++n) sum += poisson_probability(mean, n);
  return std::min(1.0, sum);
}

double ScaledField2D::log_density() const {
  const double m = std::norm(value);
  if (m == 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(m) + 2.0 * log_scale;
}

ComplexField2D ScaledField2D::unscaled() const {
  const double f = std::exp(log_scale);
  return {value * f, grad_x * f, grad_y * f};
}

ScaledMode coherent_1d_scaled(double x, double t, const ModeParams& mode) {
  if (mode.n_f && *mode.n_f < mode.n_in) throw SpecError("coherent_1d: n_f must be >= n_in");
  const cplx phasor = unit_phasor(mode.phase);
  if (mode.n_in == 0 && !mode.n_f) {
    // Closed form with z = a e^{i(sigma - w t)}.
    const double xi = std::sqrt(mode.omega) * x;
    const cplx z = mode.amplitude * phasor * std::polar(1.0, -mode.omega * t);
    const cplx e = cplx(-0.5 * xi * xi + 0.25 * std::log(mode.omega / std::numbers::pi) -
                            0.5 * mode.amplitude * mode.amplitude,
                        -0.5 * mode.omega * t) +
                   std::numbers::sqrt2 * z * xi - 0.5 * z * z;
    ScaledMode m;
    m.log_scale = e.real();
    m.value = std::polar(1.0, e.imag());
    m.deriv = m.value * (std::sqrt(mode.omega) * (std::numbers::sqrt2 * z - xi));
    return m;
  }
  if (phasor == cplx{1.0, 0.0} || phasor == cplx{-1.0, 0.0}) {
    const auto pair =
        fock_pair(x, t, mode.amplitude, mode.omega, mode.n_in, effective_cutoff(mode.amplitude, mode.n_in, mode.n_f));
    return phasor.real() > 0.0 ? pair.right : pair.left;
  }
  // General phase: fold the phase into the time argument of the coefficients.
  // z^n = (a e^{i sigma} e^{-i w t})^n; the global e^{-i w t/2} is unaffected.
  const double t_shift = -mode.phase / mode.omega;
  auto pair = fock_pair(x, t + t_shift, mode.amplitude, mode.omega, mode.n_in,
                        effective_cutoff(mode.amplitude, mode.n_in, mode.n_f));
  const cplx undo = std::polar(1.0, 0.5 * mode.omega * t_shift);
  pair.right.value *= undo;
  pair.right.deriv *= undo;
  return pair.right;
}

Coherent1D coherent_1d(double x, double t, const ModeParams& mode) {
  const auto m = coherent_1d_scaled(x, t, mode);
  const double f = std::exp(m.log_scale);
  return {m.value * f, m.deriv * f};
}

Wavefunction::Wavefunction(SystemSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.renormalize) normalization_ = norm_psi(spec_);
}

ModeParams Wavefunction::mode_x(double phase) const {
  return {spec_.a0, phase, spec_.omega_x, spec_.n_in, spec_.n_f};
}

ModeParams Wavefunction::mode_y(double phase) const {
  return {spec_.b0, phase, spec_.omega_y, spec_.n_in, spec_.n_f};
}

ScaledField2D Wavefunction::psi_scaled(double x, double y, double t) const {
  const auto px = mode_pair(x, t, spec_.a0, spec_.omega_x, spec_.n_in, spec_.n_f);
  const auto py = mode_pair(y, t, spec_.b0, spec_.omega_y, spec_.n_in, spec_.n_f);
  auto f = combine(spec_, px, py);
  if (normalization_ != 1.0) f.log_scale -= std::log(normalization_);
  return f;
}

ComplexField2D Wavefunction::psi(double x, double y, double t) const { return psi_scaled(x, y, t).unscaled(); }

double Wavefunction::density(double x, double y, double t) const {
  const double ld = psi_scaled(x, y, t).log_density();
  return std::exp(ld);
}

ComplexField2D psi(const SystemSpec& spec, double x, double y, double t) { return Wavefunction(spec).psi(x, y, t); }

double norm_psi(const SystemSpec& spec) {
  spec.validate();
  const int start = 2 * spec.resolved_cutoff() + 8;
  const double n2 = converge_order(start, [&](int order) { return norm_squared_at_order(spec, order); }, "norm_psi");
  return std::sqrt(n2);
}

double overlap_1d(double amplitude, double omega, int n_in, std::optional<int> n_f) {
  if (!(amplitude > 0.0) || !(omega > 0.0)) throw SpecError("overlap_1d: amplitude and omega must be positive");
  if (n_in < 0 || (n_f && *n_f < n_in)) throw SpecError("overlap_1d: invalid band");
  const int start = 2 * effective_cutoff(amplitude, n_in, n_f) + 8;
  return converge_order(
      start, [&](int order) { return overlap_at_order(amplitude, omega, n_in, n_f, order); }, "overlap_1d");
}

BlobCenters blob_centers(const SystemSpec& spec, double t) {
  BlobCenters c;
  c.x_c = std::sqrt(2.0 / spec.omega_x) * spec.a0 * std::cos(spec.omega_x * t);
  c.y_c = std::sqrt(2.0 / spec.omega_y) * spec.b0 * std::cos(spec.omega_y * t);
  // For a0 = b0 this is sqrt(2(w_x + w_y)) a0 / sqrt(w_x w_y).
  c.d_max = std::sqrt(2.0 * spec.a0 * spec.a0 / spec.omega_x + 2.0 * spec.b0 * spec.b0 / spec.omega_y);
  return c;
}

}  // namespace bohm
