/**
 * File formats. Binary files are little-endian with an 8-byte magic, a
 * u32 version and the u64 hash of the producing configuration.
 *
 *   trajectory (BOHMTRJ1): hash, u64 count, f64 stride, count x (t, x, y) f64
 *   grid       (BOHMGRD1): hash, f64 x_min x_max y_min y_max, u32 resolution,
 *                          f64 total_time, f64 stride, u64 samples,
 *                          u64 out_of_bounds, resolution^2 f64 counts
 *                          (row-major in y)
 *   checkpoint (BOHMCKP1): hash, integrator state, then an embedded grid
 *
 * Images are binary PPM (P6) rendered with the fixed colormap below.
 */
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "bohm/analysis.hpp"
#include "bohm/dynamics.hpp"
#include "bohm/nodal.hpp"

namespace bohm::io {

inline constexpr std::uint32_t kFormatVersion = 1;

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& record);
void write_trajectory_binary(std::ostream& os, const TrajectoryRecord& record, std::uint64_t config_hash);
/// Returns the record and the stored configuration hash. Throws FormatError.
std::pair<TrajectoryRecord, std::uint64_t> read_trajectory_binary(std::istream& is);

void write_grid_binary(std::ostream& os, const OccupancyGrid& grid, std::uint64_t config_hash);
std::pair<OccupancyGrid, std::uint64_t> read_grid_binary(std::istream& is);
/// Long format: ix, iy, x, y (cell centers), count, normalized.
void write_grid_csv(std::ostream& os, const OccupancyGrid& grid);

void write_density_csv(std::ostream& os, const DensitySnapshot& snap);
/// Columns t, x, y, k, residual; k is empty for numeric roots.
void write_nodes_csv(std::ostream& os, const std::vector<NodalPoint>& nodes);
void write_points_csv(std::ostream& os, const std::vector<Sample>& points);
/// Columns n_in, n_f, c2, D; n_f "unbounded" for the full state, D empty
/// when the entry failed.
void write_sweep_csv(std::ostream& os, const std::vector<SweepEntry>& entries);
void write_lcn_csv(std::ostream& os, const LyapunovEstimate& est);

/// Resumable state of a grid-accumulating trajectory run.
struct RunCheckpoint {
  TrajectoryRunner::Checkpoint runner;
  OccupancyGrid grid;
};

void write_checkpoint(std::ostream& os, const RunCheckpoint& cp, std::uint64_t config_hash);
std::pair<RunCheckpoint, std::uint64_t> read_checkpoint(std::istream& is);

// ---- images -------------------------------------------------------------

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/**
 * Colormap for s in [0, 1], piecewise linear through
 *   0: white (255,255,255)   0.25: blue (40,60,200)   0.5: cyan (0,190,220)
 *   0.75: yellow (250,220,0)   1: red (200,0,0)
 * Values outside [0, 1] are clamped. White marks empty cells.
 */
Rgb colormap(double s);

struct Image {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;  // row-major, top row first

  Image(int w, int h, Rgb fill = {255, 255, 255});
  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)]; }
};

void write_ppm(std::ostream& os, const Image& image);

/// Lattice values (row-major in y, y increasing upward) to an image with one
/// pixel per cell: log10(1 + v) scaled to the maximum. Zero cells are white.
Image render_counts(const std::vector<double>& values, int resolution);
/// Density on a log scale between the floor and the maximum; cells below the
/// floor are white.
Image render_density(const DensitySnapshot& snap);
/// Points drawn as dark pixels on a white size x size canvas over bounds.
Image render_points(const std::vector<Sample>& points, const Rect& bounds, int size = 720);

void save(const std::filesystem::path& path, const Image& image);

}  // namespace bohm::io
