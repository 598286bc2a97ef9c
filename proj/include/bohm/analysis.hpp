/**
 * Observables built from trajectories: occupancy grids and their Frobenius
 * distances, truncation sweeps, Born sampling and density snapshots.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bohm/dynamics.hpp"
#include "bohm/geometry.hpp"
#include "bohm/wavefunction.hpp"

namespace bohm {

/// Lattice over a rectangle; shared by grids and snapshots.
struct GridSpec {
  Rect bounds{};
  int resolution = 360;

  void validate() const;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/**
 * Visit counts of a trajectory on a resolution^2 lattice. Cells are
 * half-open [x_i, x_{i+1}) except the last, which is closed, so samples on
 * the outer boundary land in the edge cell. Storage is row-major in y:
 * index = iy * resolution + ix.
 */
class OccupancyGrid {
 public:
  OccupancyGrid() : OccupancyGrid(GridSpec{}, 0.05) {}
  OccupancyGrid(const GridSpec& grid, double stride);

  const GridSpec& grid() const { return grid_; }
  const Rect& bounds() const { return grid_.bounds; }
  int resolution() const { return grid_.resolution; }
  double stride() const { return stride_; }
  double total_time() const { return total_time_; }
  std::uint64_t sample_count() const { return sample_count_; }
  std::uint64_t out_of_bounds() const { return out_of_bounds_; }
  const std::vector<double>& counts() const { return counts_; }

  double at(int ix, int iy) const { return counts_[index(ix, iy)]; }

  /// Cell containing (x, y), or empty outside the bounds.
  std::optional<std::pair<int, int>> cell_of(double x, double y) const;

  /// Bin one sample; the represented time grows by one stride.
  void add_sample(double x, double y);
  /// Bin every sample of a record. Throws StrideMismatch unless the record
  /// was sampled at this grid's stride.
  void add(const TrajectoryRecord& record);
  /// Sum of two grids with identical shape and stride (ShapeMismatch /
  /// StrideMismatch otherwise).
  void merge(const OccupancyGrid& other);

  /// counts / total_time (all zero for an empty grid).
  std::vector<double> normalized() const;

  /// Rebuild from serialized parts; validates every field.
  static OccupancyGrid from_parts(const GridSpec& grid, double stride, double total_time, std::uint64_t sample_count,
                                  std::uint64_t out_of_bounds, std::vector<double> counts);

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid_.resolution) + static_cast<std::size_t>(ix);
  }

  GridSpec grid_;
  double stride_ = 0.05;
  std::vector<double> counts_;
  double total_time_ = 0.0;
  std::uint64_t sample_count_ = 0;
  std::uint64_t out_of_bounds_ = 0;
};

/// grid + record, leaving the argument untouched.
OccupancyGrid accumulate(OccupancyGrid grid, const TrajectoryRecord& record);

/// Frobenius norm of the difference of the time-normalized count matrices.
double frobenius_distance(const OccupancyGrid& a, const OccupancyGrid& b);

struct GridRun {
  OccupancyGrid grid;
  TrajectoryStatus status = TrajectoryStatus::completed;
  TrajectoryDiagnostics diagnostics;
};

/// Integrate one trajectory streaming its samples straight into a grid
/// (no sample buffer, so arbitrarily long runs fit in memory).
GridRun grid_run(const Wavefunction& wf, Point2 start, const IntegratorSettings& settings, const GridSpec& grid);

/// Worker-private grids merged in input order; equals the serial reference.
OccupancyGrid accumulate_ensemble(const Wavefunction& wf, std::span<const Point2> starts,
                                  const IntegratorSettings& settings, const GridSpec& grid);

struct SweepEntry {
  int n_in = 0;
  std::optional<int> n_f;
  double c2 = 0.0;
  /// Empty when either run failed; see message.
  std::optional<double> distance;
  TrajectoryStatus status = TrajectoryStatus::completed;
  std::string message;
};

struct SweepRequest {
  SystemSpec base;
  std::vector<std::optional<int>> n_f_list;
  std::vector<double> c2_list;
  int n_in = 0;
  Point2 start{0.1, 0.4};
  IntegratorSettings settings;
  GridSpec grid;
};

/**
 * For each (n_f, c2) the distance between the grid of the truncated state
 * (levels n_in .. n_f) and that of the full state with the same c2, both
 * started at the same point. Entries are ordered c2-major, then n_f.
 */
std::vector<SweepEntry> truncation_sweep(const SweepRequest& request);

namespace serial {
std::vector<SweepEntry> truncation_sweep(const SweepRequest& request);
OccupancyGrid accumulate_ensemble(const Wavefunction& wf, std::span<const Point2> starts,
                                  const IntegratorSettings& settings, const GridSpec& grid);
}  // namespace serial

/**
 * Samples of |Psi(., ., t)|^2 by rejection against a uniform envelope over
 * the box at 1.1x the lattice maximum. Needs a renormalized spec; throws
 * EnvelopeViolation if a proposal exceeds the envelope. Deterministic per
 * seed (mt19937_64).
 */
std::vector<Point2> born_sample(const SystemSpec& spec, double t, std::size_t count, std::uint64_t seed,
                                const GridSpec& envelope_grid = {});

inline constexpr double kSupportFloor = 1e-5;

struct DensitySnapshot {
  GridSpec grid;
  double t = 0.0;
  double floor = kSupportFloor;
  /// |Psi|^2 at cell centers, row-major in y.
  std::vector<double> values;

  double at(int ix, int iy) const {
    return values[static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid.resolution) +
                  static_cast<std::size_t>(ix)];
  }
  std::vector<bool> support_mask() const;
  /// Area of the cells with values >= floor.
  double support_area() const;
  /// Cell-sum times cell area.
  double integral() const;
  /// Center of the cell holding the global maximum.
  Point2 argmax() const;
};

DensitySnapshot density_snapshot(const SystemSpec& spec, double t, const GridSpec& grid = {},
                                 double floor = kSupportFloor);

/**
 * Frobenius distance between the running grids of two trajectories at each
 * checkpoint (strictly increasing, <= settings.t_end).
 */
std::vector<std::pair<double, double>> convergence_series(const Wavefunction& wf, Point2 a, Point2 b,
                                                          const IntegratorSettings& settings, const GridSpec& grid,
                                                          std::span<const double> checkpoints);

}  // namespace bohm
