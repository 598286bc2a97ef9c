/**
 * Dormand-Prince 5(4) stepper with PI step-size control, FSAL and the
 * fourth-order continuous extension for dense output.
 *
 * The state is a list of N/2 planar points. Besides the usual error control
 * the controller refines steps where the flow speed exceeds a cap: near a
 * node the speed grows like 1/r, so a step whose stage speed s exceeds the
 * cap is only accepted when it moves less than a tenth of the implied node
 * distance 1/s.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>

namespace bohm {

namespace dp5 {

inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                        a65 = -5103.0 / 18656.0;
inline constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                        a76 = 11.0 / 84.0;
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                        e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

}  // namespace dp5

struct StepControl {
  double rel_tol = 1e-9;
  double abs_tol = 1e-9;
  double dt_init = 1e-3;
  double dt_min = 1e-12;
  double dt_max = 1.0;
  double v_cap = 100.0;
};

enum class StepOutcome { ok, step_underflow, field_failure };

template <std::size_t N>
class Dopri5 {
  static_assert(N % 2 == 0, "state is a list of planar points");

 public:
  using State = std::array<double, N>;
  /// Returns false when the field is undefined at (t, y) (e.g. at a node).
  using Field = std::function<bool(double, const State&, State&)>;

  /// Everything needed to continue a run bit-exactly.
  struct Snapshot {
    double t = 0.0;
    State y{};
    double h = 0.0;
    double facold = 1e-4;
    bool last_rejected = false;
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
  };

  Dopri5(Field field, StepControl control) : field_(std::move(field)), ctl_(control) {}

  void reset(double t, const State& y) {
    snap_ = Snapshot{};
    snap_.t = t;
    snap_.y = y;
    snap_.h = ctl_.dt_init;
    have_k1_ = false;
  }

  /// Replace the state (e.g. after a renormalization) keeping step history.
  void set_state(double t, const State& y) {
    snap_.t = t;
    snap_.y = y;
    have_k1_ = false;
  }

  void restore(const Snapshot& s) {
    snap_ = s;
    have_k1_ = false;
  }

  const Snapshot& snapshot() const { return snap_; }
  double t() const { return snap_.t; }
  const State& y() const { return snap_.y; }
  double max_stage_speed() const { return last_speed_; }

  /// Take one accepted step, never past t_limit. On success the dense
  /// interpolant over [t_prev, t] is available through interpolate().
  StepOutcome step(double t_limit) {
    if (!have_k1_) {
      if (!field_(snap_.t, snap_.y, k1_)) return StepOutcome::field_failure;
      have_k1_ = true;
    }
    double h = std::min(snap_.h, ctl_.dt_max);
    for (;;) {
      bool clipped = false;
      if (snap_.t + h >= t_limit) {
        h = t_limit - snap_.t;
        clipped = true;
      }
      if (h < ctl_.dt_min && !clipped) return StepOutcome::step_underflow;

      State y_new;
      double err = 0.0;
      double speed = 0.0;
      const bool ok = attempt(h, y_new, err, speed);
      const bool too_fast = ok && speed > ctl_.v_cap && h * speed * speed > kNodeStepFraction;
      if (!ok || too_fast) {
        if (clipped && h < ctl_.dt_min) return StepOutcome::step_underflow;
        h *= 0.5;
        snap_.last_rejected = true;
        ++snap_.rejected;
        if (h < ctl_.dt_min) return ok ? StepOutcome::step_underflow : StepOutcome::field_failure;
        continue;
      }

      const double fac11 = std::pow(err, kExpo1);
      if (err <= 1.0) {
        double fac = fac11 / std::pow(snap_.facold, kBeta);
        fac = std::clamp(fac / kSafe, 1.0 / kFacMax, 1.0 / kFacMin);
        double h_new = h / fac;
        if (snap_.last_rejected) h_new = std::min(h_new, h);
        snap_.facold = std::max(err, 1e-4);
        snap_.last_rejected = false;
        ++snap_.accepted;

        // Dense output coefficients.
        for (std::size_t i = 0; i < N; ++i) {
          const double dy = y_new[i] - snap_.y[i];
          const double bspl = h * k1_[i] - dy;
          r1_[i] = snap_.y[i];
          r2_[i] = dy;
          r3_[i] = bspl;
          r4_[i] = dy - h * k7_[i] - bspl;
          r5_[i] = h * (dp5::d1 * k1_[i] + dp5::d3 * k3_[i] + dp5::d4 * k4_[i] + dp5::d5 * k5_[i] +
                        dp5::d6 * k6_[i] + dp5::d7 * k7_[i]);
        }
        t_prev_ = snap_.t;
        h_prev_ = h;
        snap_.t = clipped ? t_limit : snap_.t + h;
        snap_.y = y_new;
        k1_ = k7_;
        // A clipped final step keeps the controller's proposal for later.
        if (!clipped) snap_.h = h_new;
        last_speed_ = speed;
        return StepOutcome::ok;
      }
      h = h / std::min(1.0 / kFacMin, fac11 / kSafe);
      snap_.last_rejected = true;
      ++snap_.rejected;
      if (h < ctl_.dt_min) return StepOutcome::step_underflow;
    }
  }

  /// Dense output inside the last accepted step.
  State interpolate(double t) const {
    const double theta = (t - t_prev_) / h_prev_;
    const double theta1 = 1.0 - theta;
    State out;
    for (std::size_t i = 0; i < N; ++i) {
      out[i] = r1_[i] + theta * (r2_[i] + theta1 * (r3_[i] + theta * (r4_[i] + theta1 * r5_[i])));
    }
    return out;
  }

  double last_step_start() const { return t_prev_; }

 private:
  static constexpr double kSafe = 0.9;
  static constexpr double kFacMin = 0.2;
  static constexpr double kFacMax = 10.0;
  static constexpr double kBeta = 0.04;
  static constexpr double kExpo1 = 0.2 - kBeta * 0.75;
  static constexpr double kNodeStepFraction = 0.1;

  static double planar_speed(const State& k) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; i += 2) s = std::max(s, std::hypot(k[i], k[i + 1]));
    return s;
  }

  bool attempt(double h, State& y_new, double& err, double& speed) {
    using namespace dp5;
    const State& y = snap_.y;
    const double t = snap_.t;
    State tmp;
    auto stage = [&](auto&& combine) {
      for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * combine(i);
    };
    stage([&](std::size_t i) { return a21 * k1_[i]; });
    if (!field_(t + c2 * h, tmp, k2_)) return false;
    stage([&](std::size_t i) { return a31 * k1_[i] + a32 * k2_[i]; });
    if (!field_(t + c3 * h, tmp, k3_)) return false;
    stage([&](std::size_t i) { return a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]; });
    if (!field_(t + c4 * h, tmp, k4_)) return false;
    stage([&](std::size_t i) { return a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]; });
    if (!field_(t + c5 * h, tmp, k5_)) return false;
    stage([&](std::size_t i) { return a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]; });
    if (!field_(t + h, tmp, k6_)) return false;
    for (std::size_t i = 0; i < N; ++i) {
      y_new[i] = y[i] + h * (a71 * k1_[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] + a76 * k6_[i]);
    }
    if (!field_(t + h, y_new, k7_)) return false;

    double sq = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e =
          h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7_[i]);
      const double sk = ctl_.abs_tol + ctl_.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      sq += (e / sk) * (e / sk);
    }
    err = std::sqrt(sq / static_cast<double>(N));
    if (!std::isfinite(err)) return false;
    speed = std::max({planar_speed(k1_), planar_speed(k2_), planar_speed(k3_), planar_speed(k4_),
                      planar_speed(k5_), planar_speed(k6_), planar_speed(k7_)});
    return true;
  }

  Field field_;
  StepControl ctl_;
  Snapshot snap_;
  bool have_k1_ = false;
  State k1_{}, k2_{}, k3_{}, k4_{}, k5_{}, k6_{}, k7_{};
  State r1_{}, r2_{}, r3_{}, r4_{}, r5_{};
  double t_prev_ = 0.0;
  double h_prev_ = 1.0;
  double last_speed_ = 0.0;
};

}  // namespace bohm
