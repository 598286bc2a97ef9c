/**
 * Bohmian guidance dynamics: v = Im(grad Psi / Psi) with m = hbar = 1.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bohm/dopri5.hpp"
#include "bohm/geometry.hpp"
#include "bohm/wavefunction.hpp"

namespace bohm {

struct IntegratorSettings {
  double rel_tol = 1e-9;
  double abs_tol = 1e-9;
  double dt_init = 1e-3;
  /// Steps below this length mean the trajectory ran into a node.
  double dt_min = 1e-12;
  /// Speed above which steps are refined against the implied node distance.
  double v_cap = 100.0;
  double t_end = 100.0;
  double sample_dt = 0.05;
  /// Trajectories leaving this box are flagged and stopped.
  Rect safety_box = Rect::square(50.0);

  void validate() const;
  StepControl step_control() const;
  /// Number of samples k * sample_dt with k * sample_dt <= t_end.
  std::uint64_t sample_count() const;
};

struct Velocity {
  double vx = 0.0;
  double vy = 0.0;
};

/// Throws NodeSingularity when |Psi|^2 has cancelled below 1e-300 relative to
/// the magnitude of its two product terms.
Velocity velocity(const Wavefunction& wf, double x, double y, double t);
Velocity velocity(const SystemSpec& spec, double x, double y, double t);

/// Non-throwing form used inside integrators; false at a node.
bool try_velocity(const Wavefunction& wf, double x, double y, double t, Velocity& out);

enum class TrajectoryStatus { completed, aborted_at_node, out_of_box };

std::string to_string(TrajectoryStatus s);

struct TrajectoryDiagnostics {
  std::uint64_t accepted_steps = 0;
  std::uint64_t rejected_steps = 0;
  /// Smallest log|Psi|^2 seen at accepted step ends.
  double min_log_density = 0.0;
  /// Smallest first-order node distance estimate |Psi| / |grad Psi|.
  double closest_node_approach = 0.0;
  double max_speed = 0.0;
};

struct TrajectoryRecord {
  std::vector<Sample> samples;
  double sample_dt = 0.05;
  std::uint64_t spec_id = 0;
  TrajectoryDiagnostics diagnostics;
  TrajectoryStatus status = TrajectoryStatus::completed;

  /// Time represented by the samples: count * sample_dt.
  double duration() const { return static_cast<double>(samples.size()) * sample_dt; }
};

/// A planar velocity field v(t, x, y); false where it is undefined.
using PlanarField = std::function<bool(double t, double x, double y, Velocity& v)>;

PlanarField bohmian_field(const Wavefunction& wf);

/**
 * Stepwise trajectory driver. Samples are emitted at exact multiples of
 * sample_dt via dense output. Chunking a run with advance_to() never alters
 * the step sequence (only t_end clips a step), so a run resumed from a
 * snapshot reproduces an uninterrupted run bit for bit.
 */
class TrajectoryRunner {
 public:
  using Sink = std::function<void(const Sample&)>;

  struct Checkpoint {
    Dopri5<2>::Snapshot stepper;
    std::uint64_t next_sample = 0;
    TrajectoryDiagnostics diagnostics;
    TrajectoryStatus status = TrajectoryStatus::completed;
    bool finished = false;
  };

  TrajectoryRunner(const Wavefunction& wf, double x0, double y0, const IntegratorSettings& settings);
  TrajectoryRunner(PlanarField field, double x0, double y0, const IntegratorSettings& settings);
  TrajectoryRunner(const TrajectoryRunner&) = delete;
  TrajectoryRunner& operator=(const TrajectoryRunner&) = delete;

  /// Integrate until t >= t_stop (or t_end, or failure), feeding samples.
  void advance_to(double t_stop, const Sink& sink);
  void run(const Sink& sink) { advance_to(settings_.t_end, sink); }

  bool finished() const { return cp_.finished; }
  double t() const { return stepper_.t(); }
  TrajectoryStatus status() const { return cp_.status; }
  const TrajectoryDiagnostics& diagnostics() const { return cp_.diagnostics; }

  Checkpoint checkpoint() const;
  void restore(const Checkpoint& cp);

 private:
  void observe_step_end();

  PlanarField field_;
  const Wavefunction* wf_ = nullptr;
  IntegratorSettings settings_;
  Dopri5<2> stepper_;
  Checkpoint cp_;
  std::uint64_t total_samples_ = 0;
};

TrajectoryRecord integrate(const Wavefunction& wf, double x0, double y0, const IntegratorSettings& settings);
TrajectoryRecord integrate_field(const PlanarField& field, double x0, double y0, const IntegratorSettings& settings);

struct LyapunovEstimate {
  /// (t, finite-time LCN) at every renormalization.
  std::vector<std::pair<double, double>> lcn_series;
  double renorm_interval = 1.0;
  double final_lcn = 0.0;
  TrajectoryStatus status = TrajectoryStatus::completed;
};

inline constexpr double kLyapunovOffset = 1e-8;

/// Two-trajectory deviation method: the shadow starts kLyapunovOffset away
/// and is pulled back to that distance along the current deviation every
/// renorm_interval. LCN(t) = (1/t) sum ln(d_i / d0).
LyapunovEstimate lyapunov(const Wavefunction& wf, double x0, double y0, const IntegratorSettings& settings,
                          double renorm_interval = 1.0);

/// Ordered when final_lcn < 5 / t_end (meaningful for t_end >= 1e4).
bool is_ordered(const LyapunovEstimate& est, double t_end);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Data-parallel over trajectories (OpenMP). Output order follows input
/// order; each record equals a sequential integrate() call bit for bit.
std::vector<TrajectoryRecord> integrate_ensemble(const Wavefunction& wf, std::span<const Point2> initial_points,
                                                 const IntegratorSettings& settings);

/// integrate() with failures folded into the record: an initial point
/// outside the safety box yields an empty out_of_box record.
TrajectoryRecord integrate_isolated(const Wavefunction& wf, Point2 start, const IntegratorSettings& settings);

namespace serial {
/// Reference implementation of integrate_ensemble, one trajectory at a time.
std::vector<TrajectoryRecord> integrate_ensemble(const Wavefunction& wf, std::span<const Point2> initial_points,
                                                 const IntegratorSettings& settings);
}  // namespace serial

}  // namespace bohm
