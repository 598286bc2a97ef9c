/**
 * Zeros of Psi: the closed-form line families of the full state, Newton
 * refinement for band-limited states, velocity-contour depiction and
 * time continuation into nodal traces.
 */
#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "bohm/geometry.hpp"
#include "bohm/wavefunction.hpp"

namespace bohm {

struct NodalPoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  /// Family index of the closed-form solution; empty for numeric roots.
  std::optional<int> k;
  /// |Psi(x, y, t)| at the reported point.
  double residual = 0.0;
};

struct NodalTrace {
  std::vector<NodalPoint> points;
  /// Intervals during which the node was outside the search box.
  std::vector<std::pair<double, double>> gaps;
};

/// |Psi| at (x, y) divided by max |Psi| over the unit box centered there.
double relative_residual(const Wavefunction& wf, double x, double y, double t);

/// True when the point satisfies the residual invariant (< 1e-8 relative).
bool residual_ok(const Wavefunction& wf, const NodalPoint& p);

/**
 * Closed-form nodes of the full state with a0 = b0, for |k| <= k_max:
 *
 *   x_k = sqrt(2) (k pi cos(w_y t) + sin(w_y t) ln|c1/c2|) / (4 sqrt(w_x) a0 sin((w_x - w_y) t))
 *   y_k = sqrt(2) (k pi cos(w_x t) + sin(w_x t) ln|c1/c2|) / (4 sqrt(w_y) a0 sin((w_x - w_y) t))
 *
 * with k odd when c1 c2 > 0 and even when c1 c2 < 0. A product state has no
 * nodes. Throws NodesAtInfinity when |sin((w_x - w_y) t)| < 1e-12 and
 * SpecError outside the formula's regime.
 */
std::vector<NodalPoint> nodes_analytic(const Wavefunction& wf, double t, int k_max);

/// Closed-form nodes restricted to a box (every family index that lands inside).
std::vector<NodalPoint> nodes_analytic_in_box(const Wavefunction& wf, double t, const Rect& box);

/// Distance of the |k| = 1 nodes from the origin for c1 = c2.
double min_node_distance(const SystemSpec& spec, double t);

struct NodeSearch {
  std::vector<NodalPoint> nodes;
  int seeds = 0;
  int non_converged = 0;
};

/**
 * Numeric node finder on a seed_grid^2 lattice of cell centers. Seeds are
 * interior local minima of log|Psi|^2 more than ln(1e4) below the lattice
 * maximum, plus local minima (edge cells included) where |Psi| has dropped
 * below half the summed size of its two product terms; the second rule
 * catches nodes next to bright blobs and far out in the tails. Each seed
 * starts a damped Newton iteration on (Re Psi, Im Psi) with the analytic
 * Jacobian. Roots are deduplicated within 1e-6 and must pass the residual
 * invariant; failures are only counted.
 */
NodeSearch nodes_numeric(const Wavefunction& wf, double t, const Rect& box, int seed_grid = 256);

/// Which locator feeds trace_nodes.
enum class NodeLocator { automatic, analytic, numeric };

struct TraceOptions {
  NodeLocator locator = NodeLocator::automatic;
  int seed_grid = 256;
  /// Largest jump between consecutive points of one trace.
  double continuation_threshold = 1.0;
};

/**
 * Continues node sets over t0, t0 + dt, ... <= t1. The closed-form path
 * follows each family index and records gaps while it is outside the box.
 * The numeric path matches nearest neighbours; a node that vanishes near the
 * box edge leaves its trace dormant and the next node entering near the edge
 * revives it, closing the gap.
 */
std::vector<NodalTrace> trace_nodes(const Wavefunction& wf, double t0, double t1, double dt, const Rect& box,
                                    const TraceOptions& options = {});

/// All trace points as one (t, x, y) cloud.
std::vector<Sample> union_cloud(const std::vector<NodalTrace>& traces);

/// Radius of the largest origin-centred disk that contains no cloud point.
double empty_disk_radius(const std::vector<Sample>& cloud);

/**
 * Velocity-contour depiction of the nodes. For each t = t0 + i dt <= t1 a
 * grid^2 lattice of cells covers the box; a cell is marked when the
 * |v| = speed_level contour passes through it, i.e. when its center already
 * moves at least that fast or the phase of Psi winds around its corners (a
 * node inside, where the speed is unbounded). Emits marked cell centers.
 */
std::vector<Sample> velocity_contour_nodes(const Wavefunction& wf, double t0, double t1, double dt,
                                           double speed_level, const Rect& box, int grid);

namespace serial {
std::vector<Sample> velocity_contour_nodes(const Wavefunction& wf, double t0, double t1, double dt,
                                           double speed_level, const Rect& box, int grid);
}  // namespace serial

/// Marked cells of one time, grouped into 8-connected clusters.
std::vector<std::vector<Sample>> contour_clusters(const std::vector<Sample>& cells_at_one_time, double cell_size);

}  // namespace bohm
