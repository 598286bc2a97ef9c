#include "bohm/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "bohm/errors.hpp"

namespace bohm::io {

namespace {

constexpr char kTrajectoryMagic[8] = {'B', 'O', 'H', 'M', 'T', 'R', 'J', '1'};
constexpr char kGridMagic[8] = {'B', 'O', 'H', 'M', 'G', 'R', 'D', '1'};
constexpr char kCheckpointMagic[8] = {'B', 'O', 'H', 'M', 'C', 'K', 'P', '1'};

// Shortest text that round-trips the double.
std::string num(double v) {
  char buf[32];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void put_bytes(std::ostream& os, std::uint64_t v, int n) {
  char b[8];
  for (int i = 0; i < n; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(b, n);
}
void put_u32(std::ostream& os, std::uint32_t v) { put_bytes(os, v, 4); }
void put_u64(std::ostream& os, std::uint64_t v) { put_bytes(os, v, 8); }
void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_bytes(std::istream& is, int n) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), n)) throw FormatError("unexpected end of file");
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}
std::uint32_t get_u32(std::istream& is) { return static_cast<std::uint32_t>(get_bytes(is, 4)); }
std::uint64_t get_u64(std::istream& is) { return get_bytes(is, 8); }
double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

void put_header(std::ostream& os, const char (&magic)[8], std::uint64_t hash) {
  os.write(magic, 8);
  put_u32(os, kFormatVersion);
  put_u64(os, hash);
}

std::uint64_t get_header(std::istream& is, const char (&magic)[8], const char* what) {
  char m[8];
  if (!is.read(m, 8) || std::memcmp(m, magic, 8) != 0) throw FormatError(std::string("not a ") + what + " file");
  const auto version = get_u32(is);
  if (version != kFormatVersion) {
    throw FormatError(std::string(what) + " file version " + std::to_string(version) + " is not supported");
  }
  return get_u64(is);
}

void check_stream(const std::ostream& os) {
  if (!os) throw Error("write failed");
}

double cell_center(double lo, double hi, int n, int i) {
  return lo + (static_cast<double>(i) + 0.5) * (hi - lo) / static_cast<double>(n);
}

void put_grid_body(std::ostream& os, const OccupancyGrid& g) {
  const auto& b = g.bounds();
  put_f64(os, b.x_min);
  put_f64(os, b.x_max);
  put_f64(os, b.y_min);
  put_f64(os, b.y_max);
  put_u32(os, static_cast<std::uint32_t>(g.resolution()));
  put_f64(os, g.total_time());
  put_f64(os, g.stride());
  put_u64(os, g.sample_count());
  put_u64(os, g.out_of_bounds());
  for (double c : g.counts()) put_f64(os, c);
}

OccupancyGrid get_grid_body(std::istream& is) {
  GridSpec spec;
  spec.bounds.x_min = get_f64(is);
  spec.bounds.x_max = get_f64(is);
  spec.bounds.y_min = get_f64(is);
  spec.bounds.y_max = get_f64(is);
  const auto res = get_u32(is);
  if (res < 1 || res > 100000) throw FormatError("grid resolution out of range");
  spec.resolution = static_cast<int>(res);
  if (!spec.bounds.valid()) throw FormatError("grid bounds are empty");
  const double total_time = get_f64(is);
  const double stride = get_f64(is);
  if (!(stride > 0.0)) throw FormatError("grid stride must be positive");
  const auto samples = get_u64(is);
  const auto oob = get_u64(is);
  std::vector<double> counts(static_cast<std::size_t>(res) * res);
  for (auto& c : counts) c = get_f64(is);
  return OccupancyGrid::from_parts(spec, stride, total_time, samples, oob, std::move(counts));
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& record) {
  os << "t,x,y\n";
  for (const auto& s : record.samples) os << num(s.t) << ',' << num(s.x) << ',' << num(s.y) << '\n';
  check_stream(os);
}

void write_trajectory_binary(std::ostream& os, const TrajectoryRecord& record, std::uint64_t config_hash) {
  put_header(os, kTrajectoryMagic, config_hash);
  put_u64(os, record.samples.size());
  put_f64(os, record.sample_dt);
  for (const auto& s : record.samples) {
    put_f64(os, s.t);
    put_f64(os, s.x);
    put_f64(os, s.y);
  }
  check_stream(os);
}

std::pair<TrajectoryRecord, std::uint64_t> read_trajectory_binary(std::istream& is) {
  const auto hash = get_header(is, kTrajectoryMagic, "trajectory");
  const auto count = get_u64(is);
  TrajectoryRecord rec;
  rec.sample_dt = get_f64(is);
  if (!(rec.sample_dt > 0.0)) throw FormatError("trajectory stride must be positive");
  rec.samples.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  for (std::uint64_t i = 0; i < count; ++i) {
    Sample s;
    s.t = get_f64(is);
    s.x = get_f64(is);
    s.y = get_f64(is);
    rec.samples.push_back(s);
  }
  return {std::move(rec), hash};
}

void write_grid_binary(std::ostream& os, const OccupancyGrid& grid, std::uint64_t config_hash) {
  put_header(os, kGridMagic, config_hash);
  put_grid_body(os, grid);
  check_stream(os);
}

std::pair<OccupancyGrid, std::uint64_t> read_grid_binary(std::istream& is) {
  const auto hash = get_header(is, kGridMagic, "grid");
  return {get_grid_body(is), hash};
}

void write_grid_csv(std::ostream& os, const OccupancyGrid& grid) {
  const auto norm = grid.normalized();
  const auto& b = grid.bounds();
  const int n = grid.resolution();
  os << "ix,iy,x,y,count,normalized\n";
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const auto idx = static_cast<std::size_t>(iy) * static_cast<std::size_t>(n) + static_cast<std::size_t>(ix);
      os << ix << ',' << iy << ',' << num(cell_center(b.x_min, b.x_max, n, ix)) << ','
         << num(cell_center(b.y_min, b.y_max, n, iy)) << ',' << num(grid.counts()[idx]) << ',' << num(norm[idx])
         << '\n';
    }
  }
  check_stream(os);
}

void write_density_csv(std::ostream& os, const DensitySnapshot& snap) {
  const auto& b = snap.grid.bounds;
  const int n = snap.grid.resolution;
  os << "x,y,density,support\n";
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const double v = snap.at(ix, iy);
      os << num(cell_center(b.x_min, b.x_max, n, ix)) << ',' << num(cell_center(b.y_min, b.y_max, n, iy)) << ','
         << num(v) << ',' << (v >= snap.floor ? 1 : 0) << '\n';
    }
  }
  check_stream(os);
}

void write_nodes_csv(std::ostream& os, const std::vector<NodalPoint>& nodes) {
  os << "t,x,y,k,residual\n";
  for (const auto& p : nodes) {
    os << num(p.t) << ',' << num(p.x) << ',' << num(p.y) << ',';
    if (p.k) os << *p.k;
    os << ',' << num(p.residual) << '\n';
  }
  check_stream(os);
}

void write_points_csv(std::ostream& os, const std::vector<Sample>& points) {
  os << "t,x,y\n";
  for (const auto& s : points) os << num(s.t) << ',' << num(s.x) << ',' << num(s.y) << '\n';
  check_stream(os);
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepEntry>& entries) {
  os << "n_in,n_f,c2,D\n";
  for (const auto& e : entries) {
    os << e.n_in << ',' << (e.n_f ? std::to_string(*e.n_f) : std::string("unbounded")) << ',' << num(e.c2) << ',';
    if (e.distance) os << num(*e.distance);
    os << '\n';
  }
  check_stream(os);
}

void write_lcn_csv(std::ostream& os, const LyapunovEstimate& est) {
  os << "t,lcn\n";
  for (const auto& [t, l] : est.lcn_series) os << num(t) << ',' << num(l) << '\n';
  check_stream(os);
}

void write_checkpoint(std::ostream& os, const RunCheckpoint& cp, std::uint64_t config_hash) {
  put_header(os, kCheckpointMagic, config_hash);
  const auto& s = cp.runner.stepper;
  put_f64(os, s.t);
  put_f64(os, s.y[0]);
  put_f64(os, s.y[1]);
  put_f64(os, s.h);
  put_f64(os, s.facold);
  put_u32(os, s.last_rejected ? 1u : 0u);
  put_u64(os, s.accepted);
  put_u64(os, s.rejected);
  put_u64(os, cp.runner.next_sample);
  const auto& d = cp.runner.diagnostics;
  put_u64(os, d.accepted_steps);
  put_u64(os, d.rejected_steps);
  put_f64(os, d.min_log_density);
  put_f64(os, d.closest_node_approach);
  put_f64(os, d.max_speed);
  put_u32(os, static_cast<std::uint32_t>(cp.runner.status));
  put_u32(os, cp.runner.finished ? 1u : 0u);
  put_grid_body(os, cp.grid);
  check_stream(os);
}

std::pair<RunCheckpoint, std::uint64_t> read_checkpoint(std::istream& is) {
  const auto hash = get_header(is, kCheckpointMagic, "checkpoint");
  TrajectoryRunner::Checkpoint r;
  auto& s = r.stepper;
  s.t = get_f64(is);
  s.y[0] = get_f64(is);
  s.y[1] = get_f64(is);
  s.h = get_f64(is);
  s.facold = get_f64(is);
  s.last_rejected = get_u32(is) != 0;
  s.accepted = get_u64(is);
  s.rejected = get_u64(is);
  r.next_sample = get_u64(is);
  auto& d = r.diagnostics;
  d.accepted_steps = get_u64(is);
  d.rejected_steps = get_u64(is);
  d.min_log_density = get_f64(is);
  d.closest_node_approach = get_f64(is);
  d.max_speed = get_f64(is);
  const auto status = get_u32(is);
  if (status > static_cast<std::uint32_t>(TrajectoryStatus::out_of_box)) throw FormatError("bad trajectory status");
  r.status = static_cast<TrajectoryStatus>(status);
  r.finished = get_u32(is) != 0;
  return {RunCheckpoint{r, get_grid_body(is)}, hash};
}

Rgb colormap(double s) {
  struct Stop {
    double at;
    double r, g, b;
  };
  static constexpr Stop stops[] = {{0.0, 255, 255, 255},
                                   {0.25, 40, 60, 200},
                                   {0.5, 0, 190, 220},
                                   {0.75, 250, 220, 0},
                                   {1.0, 200, 0, 0}};
  if (!(s > 0.0)) s = 0.0;
  if (s > 1.0) s = 1.0;
  for (std::size_t i = 1; i < std::size(stops); ++i) {
    if (s <= stops[i].at) {
      const auto& a = stops[i - 1];
      const auto& b = stops[i];
      const double u = (s - a.at) / (b.at - a.at);
      auto mix = [u](double p, double q) { return static_cast<std::uint8_t>(std::lround(p + u * (q - p))); };
      return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
    }
  }
  return {200, 0, 0};
}

Image::Image(int w, int h, Rgb fill) : width(w), height(h) {
  if (w < 1 || h < 1) throw SpecError("image size must be positive");
  pixels.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
}

void write_ppm(std::ostream& os, const Image& image) {
  os << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  for (const auto& p : image.pixels) {
    const char px[3] = {static_cast<char>(p.r), static_cast<char>(p.g), static_cast<char>(p.b)};
    os.write(px, 3);
  }
  check_stream(os);
}

Image render_counts(const std::vector<double>& values, int resolution) {
  if (values.size() != static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution)) {
    throw ShapeMismatch("value count does not match the resolution");
  }
  Image img(resolution, resolution);
  double peak = 0.0;
  for (double v : values) peak = std::max(peak, std::log10(1.0 + v));
  for (int iy = 0; iy < resolution; ++iy) {
    for (int ix = 0; ix < resolution; ++ix) {
      const double v = values[static_cast<std::size_t>(iy) * static_cast<std::size_t>(resolution) + static_cast<std::size_t>(ix)];
      if (v <= 0.0 || peak <= 0.0) continue;
      // Smallest non-zero values still get a visible color.
      const double s = 0.05 + 0.95 * std::log10(1.0 + v) / peak;
      img.at(ix, resolution - 1 - iy) = colormap(s);
    }
  }
  return img;
}

Image render_density(const DensitySnapshot& snap) {
  const int n = snap.grid.resolution;
  Image img(n, n);
  const double peak = *std::max_element(snap.values.begin(), snap.values.end());
  if (!(peak > 0.0)) return img;
  const double lo = std::log10(std::min(snap.floor, peak));
  const double hi = std::log10(peak);
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const double v = snap.at(ix, iy);
      if (v < snap.floor) continue;
      const double s = hi > lo ? 0.05 + 0.95 * (std::log10(v) - lo) / (hi - lo) : 1.0;
      img.at(ix, n - 1 - iy) = colormap(s);
    }
  }
  return img;
}

Image render_points(const std::vector<Sample>& points, const Rect& bounds, int size) {
  Image img(size, size);
  for (const auto& p : points) {
    if (!bounds.contains(p.x, p.y)) continue;
    const int ix = std::clamp(static_cast<int>((p.x - bounds.x_min) / bounds.width() * size), 0, size - 1);
    const int iy = std::clamp(static_cast<int>((p.y - bounds.y_min) / bounds.height() * size), 0, size - 1);
    img.at(ix, size - 1 - iy) = {20, 20, 60};
  }
  return img;
}

void save(const std::filesystem::path& path, const Image& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  write_ppm(os, image);
}

}  // namespace bohm::io
