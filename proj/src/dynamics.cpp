#include "bohm/dynamics.hpp"

#include <cmath>
#include <limits>

#include "bohm/errors.hpp"

namespace bohm {

namespace {

// |Psi|^2 below this fraction of the squared term magnitude counts as a node.
constexpr double kNodeCancellation = 1e-300;

}  // namespace

void IntegratorSettings::validate() const {
  auto fail = [](const std::string& m) { throw SpecError("IntegratorSettings: " + m); };
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) fail("tolerances must be positive");
  if (!(dt_min > 0.0) || !(dt_min < dt_init)) fail("need 0 < dt_min < dt_init");
  if (!(sample_dt > 0.0)) fail("sample_dt must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) fail("t_end must be finite and >= 0");
  if (!(v_cap > 0.0)) fail("v_cap must be positive");
  if (!safety_box.valid()) fail("safety box is empty");
}

StepControl IntegratorSettings::step_control() const {
  StepControl c;
  c.rel_tol = rel_tol;
  c.abs_tol = abs_tol;
  c.dt_init = dt_init;
  c.dt_min = dt_min;
  c.dt_max = std::max(sample_dt, dt_init);
  c.v_cap = v_cap;
  return c;
}

std::uint64_t IntegratorSettings::sample_count() const {
  return static_cast<std::uint64_t>(std::floor(t_end / sample_dt + 1e-9)) + 1;
}

bool try_velocity(const Wavefunction& wf, double x, double y, double t, Velocity& out) {
  const auto f = wf.psi_scaled(x, y, t);
  const double mag2 = std::norm(f.value);
  const double ref2 = f.term_magnitude * f.term_magnitude;
  if (!(mag2 > kNodeCancellation * ref2) || !(ref2 > 0.0)) return false;
  out.vx = (f.grad_x / f.value).imag();
  out.vy = (f.grad_y / f.value).imag();
  return std::isfinite(out.vx) && std::isfinite(out.vy);
}

Velocity velocity(const Wavefunction& wf, double x, double y, double t) {
  Velocity v;
  if (!try_velocity(wf, x, y, t, v)) {
    throw NodeSingularity("velocity undefined at a node of Psi: x=" + std::to_string(x) + " y=" + std::to_string(y) +
                          " t=" + std::to_string(t));
  }
  return v;
}

Velocity velocity(const SystemSpec& spec, double x, double y, double t) { return velocity(Wavefunction(spec), x, y, t); }

std::string to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::completed:
      return "completed";
    case TrajectoryStatus::aborted_at_node:
      return "aborted_at_node";
    case TrajectoryStatus::out_of_box:
      return "out_of_box";
  }
  return "unknown";
}

PlanarField bohmian_field(const Wavefunction& wf) {
  return [&wf](double t, double x, double y, Velocity& v) { return try_velocity(wf, x, y, t, v); };
}

namespace {

Dopri5<2>::Field adapt(const PlanarField& field) {
  return [&field](double t, const std::array<double, 2>& s, std::array<double, 2>& d) {
    Velocity v;
    if (!field(t, s[0], s[1], v)) return false;
    d = {v.vx, v.vy};
    return true;
  };
}

TrajectoryDiagnostics fresh_diagnostics() {
  TrajectoryDiagnostics d;
  d.min_log_density = std::numeric_limits<double>::infinity();
  d.closest_node_approach = std::numeric_limits<double>::infinity();
  return d;
}

}  // namespace

TrajectoryRunner::TrajectoryRunner(const Wavefunction& wf, double x0, double y0, const IntegratorSettings& settings)
    : TrajectoryRunner(bohmian_field(wf), x0, y0, settings) {
  wf_ = &wf;
}

TrajectoryRunner::TrajectoryRunner(PlanarField field, double x0, double y0, const IntegratorSettings& settings)
    : field_(std::move(field)), settings_(settings), stepper_(adapt(field_), settings.step_control()) {
  settings_.validate();
  if (!settings_.safety_box.contains(x0, y0)) throw SpecError("initial point lies outside the safety box");
  stepper_.reset(0.0, {x0, y0});
  cp_.diagnostics = fresh_diagnostics();
  total_samples_ = settings_.sample_count();
}

void TrajectoryRunner::observe_step_end() {
  auto& d = cp_.diagnostics;
  const auto& snap = stepper_.snapshot();
  d.accepted_steps = snap.accepted;
  d.rejected_steps = snap.rejected;
  d.max_speed = std::max(d.max_speed, stepper_.max_stage_speed());
  if (wf_ == nullptr) return;
  const auto f = wf_->psi_scaled(snap.y[0], snap.y[1], snap.t);
  d.min_log_density = std::min(d.min_log_density, f.log_density());
  const double grad = std::hypot(std::abs(f.grad_x), std::abs(f.grad_y));
  if (grad > 0.0) d.closest_node_approach = std::min(d.closest_node_approach, std::abs(f.value) / grad);
}

void TrajectoryRunner::advance_to(double t_stop, const Sink& sink) {
  const double t_end = settings_.t_end;
  const double dt = settings_.sample_dt;
  if (cp_.finished) return;
  if (t_end == 0.0) {
    sink({0.0, stepper_.y()[0], stepper_.y()[1]});
    cp_.next_sample = 1;
    cp_.finished = true;
    return;
  }
  while (stepper_.t() < t_stop && !cp_.finished) {
    const auto outcome = stepper_.step(t_end);
    if (outcome != StepOutcome::ok) {
      cp_.status = TrajectoryStatus::aborted_at_node;
      cp_.finished = true;
      auto& d = cp_.diagnostics;
      d.accepted_steps = stepper_.snapshot().accepted;
      d.rejected_steps = stepper_.snapshot().rejected;
      break;
    }
    observe_step_end();
    const bool at_end = stepper_.t() >= t_end;
    while (cp_.next_sample < total_samples_) {
      const double ts = static_cast<double>(cp_.next_sample) * dt;
      if (ts > stepper_.t() && !at_end) break;
      const auto p = stepper_.interpolate(ts);
      sink({ts, p[0], p[1]});
      ++cp_.next_sample;
    }
    const auto& y = stepper_.y();
    if (!settings_.safety_box.contains(y[0], y[1])) {
      cp_.status = TrajectoryStatus::out_of_box;
      cp_.finished = true;
    } else if (at_end) {
      cp_.finished = true;
    }
  }
}

TrajectoryRunner::Checkpoint TrajectoryRunner::checkpoint() const {
  Checkpoint c = cp_;
  c.stepper = stepper_.snapshot();
  return c;
}

void TrajectoryRunner::restore(const Checkpoint& cp) {
  cp_ = cp;
  stepper_.restore(cp.stepper);
}

TrajectoryRecord integrate_field(const PlanarField& field, double x0, double y0, const IntegratorSettings& settings) {
  TrajectoryRunner runner(field, x0, y0, settings);
  TrajectoryRecord rec;
  rec.sample_dt = settings.sample_dt;
  rec.samples.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(settings.sample_count(), 1u << 24)));
  runner.run([&rec](const Sample& s) { rec.samples.push_back(s); });
  rec.diagnostics = runner.diagnostics();
  rec.status = runner.status();
  return rec;
}

TrajectoryRecord integrate(const Wavefunction& wf, double x0, double y0, const IntegratorSettings& settings) {
  TrajectoryRunner runner(wf, x0, y0, settings);
  TrajectoryRecord rec;
  rec.sample_dt = settings.sample_dt;
  rec.spec_id = wf.spec().fingerprint();
  rec.samples.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(settings.sample_count(), 1u << 24)));
  runner.run([&rec](const Sample& s) { rec.samples.push_back(s); });
  rec.diagnostics = runner.diagnostics();
  rec.status = runner.status();
  return rec;
}

LyapunovEstimate lyapunov(const Wavefunction& wf, double x0, double y0, const IntegratorSettings& settings,
                          double renorm_interval) {
  settings.validate();
  if (!(renorm_interval > 0.0)) throw SpecError("lyapunov: renorm_interval must be positive");

  using Stepper = Dopri5<4>;
  Stepper stepper(
      [&wf](double t, const Stepper::State& s, Stepper::State& d) {
        Velocity a, b;
        if (!try_velocity(wf, s[0], s[1], t, a) || !try_velocity(wf, s[2], s[3], t, b)) return false;
        d = {a.vx, a.vy, b.vx, b.vy};
        return true;
      },
      settings.step_control());

  const double d0 = kLyapunovOffset;
  double ux = std::numbers::sqrt2 / 2.0;
  double uy = std::numbers::sqrt2 / 2.0;
  stepper.reset(0.0, {x0, y0, x0 + d0 * ux, y0 + d0 * uy});

  LyapunovEstimate est;
  est.renorm_interval = renorm_interval;
  double log_sum = 0.0;
  const auto intervals = static_cast<std::uint64_t>(std::floor(settings.t_end / renorm_interval + 1e-9));
  est.lcn_series.reserve(static_cast<std::size_t>(intervals));
  for (std::uint64_t j = 1; j <= intervals; ++j) {
    const double target = static_cast<double>(j) * renorm_interval;
    while (stepper.t() < target) {
      if (stepper.step(target) != StepOutcome::ok) {
        est.status = TrajectoryStatus::aborted_at_node;
        return est;
      }
    }
    auto s = stepper.y();
    if (!settings.safety_box.contains(s[0], s[1])) {
      est.status = TrajectoryStatus::out_of_box;
      return est;
    }
    const double dx = s[2] - s[0];
    const double dy = s[3] - s[1];
    const double dist = std::hypot(dx, dy);
    if (dist > 0.0) {
      log_sum += std::log(dist / d0);
      ux = dx / dist;
      uy = dy / dist;
    }
    est.final_lcn = log_sum / target;
    est.lcn_series.emplace_back(target, est.final_lcn);
    s[2] = s[0] + d0 * ux;
    s[3] = s[1] + d0 * uy;
    stepper.set_state(target, s);
  }
  return est;
}

bool is_ordered(const LyapunovEstimate& est, double t_end) { return est.final_lcn < 5.0 / t_end; }

TrajectoryRecord integrate_isolated(const Wavefunction& wf, Point2 start, const IntegratorSettings& settings) {
  if (!settings.safety_box.contains(start.x, start.y)) {
    TrajectoryRecord rec;
    rec.sample_dt = settings.sample_dt;
    rec.spec_id = wf.spec().fingerprint();
    rec.status = TrajectoryStatus::out_of_box;
    return rec;
  }
  return integrate(wf, start.x, start.y, settings);
}

namespace serial {

std::vector<TrajectoryRecord> integrate_ensemble(const Wavefunction& wf, std::span<const Point2> initial_points,
                                                 const IntegratorSettings& settings) {
  settings.validate();
  std::vector<TrajectoryRecord> out;
  out.reserve(initial_points.size());
  for (const auto& p : initial_points) out.push_back(integrate_isolated(wf, p, settings));
  return out;
}

}  // namespace serial

}  // namespace bohm
