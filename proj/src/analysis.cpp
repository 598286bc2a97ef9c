#include "bohm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>

#include "bohm/errors.hpp"
#include "bohm/parallel.hpp"

namespace bohm {

namespace {

bool same_stride(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

double cell_center(double lo, double hi, int n, int i) {
  return lo + (static_cast<double>(i) + 0.5) * (hi - lo) / static_cast<double>(n);
}

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

void GridSpec::validate() const {
  if (!bounds.valid()) throw SpecError("grid bounds are empty");
  if (resolution < 1) throw SpecError("grid resolution must be >= 1");
}

OccupancyGrid::OccupancyGrid(const GridSpec& grid, double stride) : grid_(grid), stride_(stride) {
  grid_.validate();
  if (!(stride > 0.0)) throw SpecError("grid stride must be positive");
  counts_.assign(static_cast<std::size_t>(grid_.resolution) * static_cast<std::size_t>(grid_.resolution), 0.0);
}

std::optional<std::pair<int, int>> OccupancyGrid::cell_of(double x, double y) const {
  const auto& b = grid_.bounds;
  if (!b.contains(x, y)) return std::nullopt;
  const int n = grid_.resolution;
  auto bin = [n](double v, double lo, double hi) {
    const auto i = static_cast<int>(std::floor((v - lo) / (hi - lo) * n));
    return std::clamp(i, 0, n - 1);
  };
  return std::make_pair(bin(x, b.x_min, b.x_max), bin(y, b.y_min, b.y_max));
}

void OccupancyGrid::add_sample(double x, double y) {
  ++sample_count_;
  total_time_ += stride_;
  if (const auto c = cell_of(x, y)) {
    counts_[index(c->first, c->second)] += 1.0;
  } else {
    ++out_of_bounds_;
  }
}

void OccupancyGrid::add(const TrajectoryRecord& record) {
  if (record.samples.empty()) return;
  if (!same_stride(record.sample_dt, stride_)) {
    throw StrideMismatch("record sampled every " + std::to_string(record.sample_dt) + ", grid expects " +
                         std::to_string(stride_));
  }
  for (const auto& s : record.samples) add_sample(s.x, s.y);
}

void OccupancyGrid::merge(const OccupancyGrid& other) {
  if (!(grid_ == other.grid_)) throw ShapeMismatch("cannot merge grids with different bounds or resolution");
  if (!same_stride(stride_, other.stride_)) throw StrideMismatch("cannot merge grids with different strides");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_time_ += other.total_time_;
  sample_count_ += other.sample_count_;
  out_of_bounds_ += other.out_of_bounds_;
}

std::vector<double> OccupancyGrid::normalized() const {
  std::vector<double> out(counts_.size(), 0.0);
  if (total_time_ > 0.0) {
    for (std::size_t i = 0; i < counts_.size(); ++i) out[i] = counts_[i] / total_time_;
  }
  return out;
}

OccupancyGrid OccupancyGrid::from_parts(const GridSpec& grid, double stride, double total_time,
                                        std::uint64_t sample_count, std::uint64_t out_of_bounds,
                                        std::vector<double> counts) {
  OccupancyGrid g(grid, stride);
  if (counts.size() != g.counts_.size()) throw FormatError("grid value count does not match its resolution");
  if (!(total_time >= 0.0) || !std::isfinite(total_time)) throw FormatError("grid total_time is invalid");
  for (double c : counts) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw FormatError("grid holds a negative or non-finite count");
  }
  g.counts_ = std::move(counts);
  g.total_time_ = total_time;
  g.sample_count_ = sample_count;
  g.out_of_bounds_ = out_of_bounds;
  return g;
}

OccupancyGrid accumulate(OccupancyGrid grid, const TrajectoryRecord& record) {
  grid.add(record);
  return grid;
}

double frobenius_distance(const OccupancyGrid& a, const OccupancyGrid& b) {
  if (!(a.grid() == b.grid())) throw ShapeMismatch("grids differ in bounds or resolution");
  const auto na = a.normalized();
  const auto nb = b.normalized();
  double sum = 0.0;
  for (std::size_t i = 0; i < na.size(); ++i) {
    const double d = na[i] - nb[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

GridRun grid_run(const Wavefunction& wf, Point2 start, const IntegratorSettings& settings, const GridSpec& grid) {
  GridRun out{OccupancyGrid(grid, settings.sample_dt), TrajectoryStatus::completed, {}};
  if (!settings.safety_box.contains(start.x, start.y)) {
    out.status = TrajectoryStatus::out_of_box;
    return out;
  }
  TrajectoryRunner runner(wf, start.x, start.y, settings);
  runner.run([&out](const Sample& s) { out.grid.add_sample(s.x, s.y); });
  out.status = runner.status();
  out.diagnostics = runner.diagnostics();
  return out;
}

OccupancyGrid accumulate_ensemble(const Wavefunction& wf, std::span<const Point2> starts,
                                  const IntegratorSettings& settings, const GridSpec& grid) {
  settings.validate();
  std::vector<OccupancyGrid> partial(starts.size(), OccupancyGrid(grid, settings.sample_dt));
  const auto n = static_cast<long>(starts.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (long i = 0; i < n; ++i) {
    try {
      partial[static_cast<std::size_t>(i)] = grid_run(wf, starts[static_cast<std::size_t>(i)], settings, grid).grid;
    } catch (...) {
#pragma omp critical(bohm_ensemble_grid_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  OccupancyGrid total(grid, settings.sample_dt);
  for (const auto& g : partial) total.merge(g);
  return total;
}

namespace {

struct SweepJob {
  SystemSpec spec;
  GridRun result;
  std::string error;
  bool failed = false;
};

void check_sweep(const SweepRequest& r) {
  if (r.n_f_list.empty() || r.c2_list.empty()) throw SpecError("sweep needs non-empty n_f and c2 lists");
  r.settings.validate();
  r.grid.validate();
  for (double c2 : r.c2_list) r.base.with_c2(c2).validate();
  for (const auto& nf : r.n_f_list) r.base.with_band(r.n_in, nf).validate();
}

// Reference runs first (one per c2), then the truncated runs c2-major.
std::vector<SweepJob> sweep_jobs(const SweepRequest& r) {
  std::vector<SweepJob> jobs;
  for (double c2 : r.c2_list) jobs.push_back({r.base.with_band(0, std::nullopt).with_c2(c2), {}, {}, false});
  for (double c2 : r.c2_list) {
    for (const auto& nf : r.n_f_list) jobs.push_back({r.base.with_band(r.n_in, nf).with_c2(c2), {}, {}, false});
  }
  return jobs;
}

void run_job(SweepJob& job, const SweepRequest& r) {
  try {
    const Wavefunction wf(job.spec);
    job.result = grid_run(wf, r.start, r.settings, r.grid);
  } catch (const Error& e) {
    job.failed = true;
    job.error = std::string(e.kind()) + ": " + e.what();
  } catch (const std::exception& e) {
    job.failed = true;
    job.error = std::string("error: ") + e.what();
  }
}

std::vector<SweepEntry> collect(const SweepRequest& r, const std::vector<SweepJob>& jobs) {
  std::vector<SweepEntry> out;
  const std::size_t refs = r.c2_list.size();
  for (std::size_t ci = 0; ci < r.c2_list.size(); ++ci) {
    const auto& ref = jobs[ci];
    for (std::size_t ni = 0; ni < r.n_f_list.size(); ++ni) {
      const auto& job = jobs[refs + ci * r.n_f_list.size() + ni];
      SweepEntry e;
      e.n_in = r.n_in;
      e.n_f = r.n_f_list[ni];
      e.c2 = r.c2_list[ci];
      if (ref.failed || job.failed) {
        e.message = ref.failed ? "reference run: " + ref.error : job.error;
      } else if (ref.result.status != TrajectoryStatus::completed ||
                 job.result.status != TrajectoryStatus::completed) {
        e.status = job.result.status != TrajectoryStatus::completed ? job.result.status : ref.result.status;
        e.message = (job.result.status != TrajectoryStatus::completed ? "truncated run " : "reference run ") +
                    to_string(e.status);
      } else {
        e.distance = frobenius_distance(ref.result.grid, job.result.grid);
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace

std::vector<SweepEntry> truncation_sweep(const SweepRequest& request) {
  check_sweep(request);
  auto jobs = sweep_jobs(request);
  const auto n = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (long i = 0; i < n; ++i) run_job(jobs[static_cast<std::size_t>(i)], request);
  return collect(request, jobs);
}

namespace serial {

std::vector<SweepEntry> truncation_sweep(const SweepRequest& request) {
  check_sweep(request);
  auto jobs = sweep_jobs(request);
  for (auto& job : jobs) run_job(job, request);
  return collect(request, jobs);
}

OccupancyGrid accumulate_ensemble(const Wavefunction& wf, std::span<const Point2> starts,
                                  const IntegratorSettings& settings, const GridSpec& grid) {
  settings.validate();
  OccupancyGrid total(grid, settings.sample_dt);
  for (const auto& p : starts) total.merge(grid_run(wf, p, settings, grid).grid);
  return total;
}

}  // namespace serial

std::vector<Point2> born_sample(const SystemSpec& spec, double t, std::size_t count, std::uint64_t seed,
                                const GridSpec& envelope_grid) {
  if (!spec.renormalize) throw SpecError("born_sample needs a renormalized spec");
  if (count < 1) throw SpecError("born_sample needs count >= 1");
  envelope_grid.validate();
  const auto snap = density_snapshot(spec, t, envelope_grid);
  const double envelope = 1.1 * *std::max_element(snap.values.begin(), snap.values.end());
  if (!(envelope > 0.0)) throw SpecError("density vanishes on the sampling box");

  const Wavefunction wf(spec);
  const Rect& b = envelope_grid.bounds;
  std::mt19937_64 rng(seed);
  std::vector<Point2> out;
  out.reserve(count);
  while (out.size() < count) {
    const double x = b.x_min + unit_uniform(rng) * b.width();
    const double y = b.y_min + unit_uniform(rng) * b.height();
    const double u = unit_uniform(rng) * envelope;
    const double rho = wf.density(x, y, t);
    if (rho > envelope) {
      throw EnvelopeViolation("density " + std::to_string(rho) + " exceeds envelope " + std::to_string(envelope) +
                              " at (" + std::to_string(x) + ", " + std::to_string(y) + ")");
    }
    if (u < rho) out.push_back({x, y});
  }
  return out;
}

std::vector<bool> DensitySnapshot::support_mask() const {
  std::vector<bool> mask(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) mask[i] = values[i] >= floor;
  return mask;
}

double DensitySnapshot::support_area() const {
  const double cell = grid.bounds.width() * grid.bounds.height() / (static_cast<double>(grid.resolution) * grid.resolution);
  const auto inside = std::count_if(values.begin(), values.end(), [this](double v) { return v >= floor; });
  return static_cast<double>(inside) * cell;
}

double DensitySnapshot::integral() const {
  const double cell = grid.bounds.width() * grid.bounds.height() / (static_cast<double>(grid.resolution) * grid.resolution);
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum * cell;
}

Point2 DensitySnapshot::argmax() const {
  const auto it = std::max_element(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(it - values.begin());
  const int n = grid.resolution;
  const int ix = static_cast<int>(idx % static_cast<std::size_t>(n));
  const int iy = static_cast<int>(idx / static_cast<std::size_t>(n));
  const auto& b = grid.bounds;
  return {cell_center(b.x_min, b.x_max, n, ix), cell_center(b.y_min, b.y_max, n, iy)};
}

DensitySnapshot density_snapshot(const SystemSpec& spec, double t, const GridSpec& grid, double floor) {
  spec.validate();
  grid.validate();
  const Wavefunction wf(spec);
  DensitySnapshot snap;
  snap.grid = grid;
  snap.t = t;
  snap.floor = floor;
  const int n = grid.resolution;
  snap.values.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  const auto& b = grid.bounds;
#pragma omp parallel for schedule(static) num_threads(worker_count())
  for (int iy = 0; iy < n; ++iy) {
    const double y = cell_center(b.y_min, b.y_max, n, iy);
    for (int ix = 0; ix < n; ++ix) {
      snap.values[static_cast<std::size_t>(iy) * static_cast<std::size_t>(n) + static_cast<std::size_t>(ix)] =
          wf.density(cell_center(b.x_min, b.x_max, n, ix), y, t);
    }
  }
  return snap;
}

std::vector<std::pair<double, double>> convergence_series(const Wavefunction& wf, Point2 a, Point2 b,
                                                          const IntegratorSettings& settings, const GridSpec& grid,
                                                          std::span<const double> checkpoints) {
  settings.validate();
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (!(checkpoints[i] > 0.0) || checkpoints[i] > settings.t_end || (i > 0 && !(checkpoints[i] > checkpoints[i - 1]))) {
      throw SpecError("checkpoints must be positive, strictly increasing and <= t_end");
    }
  }
  struct Lane {
    TrajectoryRunner runner;
    OccupancyGrid grid;
    std::vector<Sample> pending;
  };
  Lane la{TrajectoryRunner(wf, a.x, a.y, settings), OccupancyGrid(grid, settings.sample_dt), {}};
  Lane lb{TrajectoryRunner(wf, b.x, b.y, settings), OccupancyGrid(grid, settings.sample_dt), {}};
  std::vector<std::pair<double, double>> out;
  for (double cp : checkpoints) {
    for (Lane* lane : {&la, &lb}) {
      lane->runner.advance_to(cp, [lane](const Sample& s) { lane->pending.push_back(s); });
      if (lane->runner.status() != TrajectoryStatus::completed) {
        throw Error("convergence_series: trajectory " + to_string(lane->runner.status()));
      }
      std::size_t used = 0;
      for (const auto& s : lane->pending) {
        if (s.t > cp) break;
        lane->grid.add_sample(s.x, s.y);
        ++used;
      }
      lane->pending.erase(lane->pending.begin(), lane->pending.begin() + static_cast<long>(used));
    }
    out.emplace_back(cp, frobenius_distance(la.grid, lb.grid));
  }
  return out;
}

}  // namespace bohm
