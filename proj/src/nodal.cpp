#include "bohm/nodal.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numbers>

#include "bohm/dynamics.hpp"
#include "bohm/errors.hpp"
#include "bohm/parallel.hpp"

namespace bohm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kAtInfinity = 1e-12;
constexpr double kResidualLimit = 1e-8;
constexpr double kSeedThreshold = 1e-4;
constexpr double kCancellationSeed = 0.5;
constexpr double kDedupRadius = 1e-6;
constexpr int kNewtonIterations = 50;
constexpr double kNewtonTolerance = 1e-12;

double log_abs_psi(const ScaledField2D& f) {
  const double a = std::abs(f.value);
  return a > 0.0 ? f.log_scale + std::log(a) : -std::numeric_limits<double>::infinity();
}

double abs_psi(const Wavefunction& wf, double x, double y, double t) {
  const auto f = wf.psi_scaled(x, y, t);
  return std::exp(log_abs_psi(f));
}

struct NodeGeometry {
  double s = 0.0;      // sin(w_xy t)
  double ell = 0.0;    // ln|c1/c2|
  double ax = 0.0;     // sqrt(2) / (4 sqrt(w_x) a0 s)
  double ay = 0.0;
  double cx = 0.0, sx = 0.0, cy = 0.0, sy = 0.0;
  int parity = 1;      // 1: odd k, 0: even k
};

// Empty optional for product states, which have no finite nodes.
std::optional<NodeGeometry> node_geometry(const SystemSpec& spec, double t) {
  if (!spec.full_band()) throw SpecError("closed-form nodes need the full band (n_in = 0, n_f unbounded)");
  if (std::abs(spec.a0 - spec.b0) > 1e-12 * std::max(1.0, std::abs(spec.a0))) {
    throw SpecError("closed-form nodes need a0 = b0");
  }
  if (spec.c1 == 0.0 || spec.c2 == 0.0) return std::nullopt;
  NodeGeometry g;
  g.s = std::sin((spec.omega_x - spec.omega_y) * t);
  if (std::abs(g.s) < kAtInfinity) {
    throw NodesAtInfinity("nodal points are at infinity at t=" + std::to_string(t));
  }
  g.ell = std::log(std::abs(spec.c1 / spec.c2));
  g.ax = std::numbers::sqrt2 / (4.0 * std::sqrt(spec.omega_x) * spec.a0 * g.s);
  g.ay = std::numbers::sqrt2 / (4.0 * std::sqrt(spec.omega_y) * spec.a0 * g.s);
  g.cx = std::cos(spec.omega_x * t);
  g.sx = std::sin(spec.omega_x * t);
  g.cy = std::cos(spec.omega_y * t);
  g.sy = std::sin(spec.omega_y * t);
  g.parity = spec.c1 * spec.c2 > 0.0 ? 1 : 0;
  return g;
}

bool parity_ok(int k, int parity) { return ((k % 2) + 2) % 2 == parity; }

NodalPoint family_point(const Wavefunction& wf, const NodeGeometry& g, int k, double t) {
  NodalPoint p;
  p.t = t;
  p.k = k;
  p.x = g.ax * (k * kPi * g.cy + g.sy * g.ell);
  p.y = g.ay * (k * kPi * g.cx + g.sx * g.ell);
  p.residual = abs_psi(wf, p.x, p.y, t);
  return p;
}

// k interval for which coefficient * k + offset lies in [lo, hi].
void restrict_k(double coefficient, double offset, double lo, double hi, double& k_lo, double& k_hi) {
  if (std::abs(coefficient) < 1e-300) {
    if (offset < lo || offset > hi) {
      k_lo = 1.0;
      k_hi = 0.0;
    }
    return;
  }
  double a = (lo - offset) / coefficient;
  double b = (hi - offset) / coefficient;
  if (a > b) std::swap(a, b);
  k_lo = std::max(k_lo, a);
  k_hi = std::min(k_hi, b);
}

bool newton(const Wavefunction& wf, double t, double& x, double& y) {
  auto f = wf.psi_scaled(x, y, t);
  double log_here = log_abs_psi(f);
  for (int it = 0; it < kNewtonIterations; ++it) {
    if (std::abs(f.value.real()) + std::abs(f.value.imag()) < kNewtonTolerance * f.term_magnitude) return true;
    const double j11 = f.grad_x.real(), j12 = f.grad_y.real();
    const double j21 = f.grad_x.imag(), j22 = f.grad_y.imag();
    const double det = j11 * j22 - j12 * j21;
    if (!(std::abs(det) > 0.0) || !std::isfinite(det)) return false;
    const double dx = -(j22 * f.value.real() - j12 * f.value.imag()) / det;
    const double dy = -(-j21 * f.value.real() + j11 * f.value.imag()) / det;
    if (!std::isfinite(dx) || !std::isfinite(dy)) return false;
    double lambda = 1.0;
    bool moved = false;
    for (int h = 0; h < 40; ++h, lambda *= 0.5) {
      const double xn = x + lambda * dx;
      const double yn = y + lambda * dy;
      const auto fn = wf.psi_scaled(xn, yn, t);
      const double log_new = log_abs_psi(fn);
      if (log_new < log_here) {
        x = xn;
        y = yn;
        f = fn;
        log_here = log_new;
        moved = true;
        break;
      }
    }
    if (!moved) {
      // No descent left: either exactly converged or stuck.
      return std::abs(f.value.real()) + std::abs(f.value.imag()) < kNewtonTolerance * f.term_magnitude;
    }
  }
  return std::abs(f.value.real()) + std::abs(f.value.imag()) < kNewtonTolerance * f.term_magnitude;
}

double lattice_coordinate(double lo, double hi, int n, int i) {
  return lo + (static_cast<double>(i) + 0.5) * (hi - lo) / static_cast<double>(n);
}

std::vector<std::vector<NodalPoint>> node_sets(const Wavefunction& wf, const std::vector<double>& times,
                                               const Rect& box, bool analytic, int seed_grid) {
  std::vector<std::vector<NodalPoint>> sets(times.size());
  const auto n = static_cast<long>(times.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (long i = 0; i < n; ++i) {
    const double t = times[static_cast<std::size_t>(i)];
    try {
      if (analytic) {
        sets[static_cast<std::size_t>(i)] = nodes_analytic_in_box(wf, t, box);
      } else {
        sets[static_cast<std::size_t>(i)] = nodes_numeric(wf, t, box, seed_grid).nodes;
      }
    } catch (const NodesAtInfinity&) {
      // No node at finite distance at this instant.
    } catch (...) {
#pragma omp critical(bohm_trace_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return sets;
}

double distance_to_edge(const Rect& box, double x, double y) {
  return std::min({x - box.x_min, box.x_max - x, y - box.y_min, box.y_max - y});
}

std::vector<NodalTrace> trace_by_family(const std::vector<double>& times,
                                        const std::vector<std::vector<NodalPoint>>& sets) {
  std::map<int, NodalTrace> traces;
  std::map<int, double> last_seen;
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (const auto& p : sets[i]) {
      const int k = *p.k;
      auto& tr = traces[k];
      auto seen = last_seen.find(k);
      if (seen != last_seen.end() && i > 0 && seen->second < times[i - 1]) {
        tr.gaps.emplace_back(seen->second, p.t);
      }
      tr.points.push_back(p);
      last_seen[k] = p.t;
    }
  }
  std::vector<NodalTrace> out;
  for (auto& [k, tr] : traces) out.push_back(std::move(tr));
  return out;
}

std::vector<NodalTrace> trace_by_neighbour(const std::vector<double>& times,
                                           const std::vector<std::vector<NodalPoint>>& sets, const Rect& box,
                                           double threshold) {
  std::vector<NodalTrace> traces;
  std::vector<bool> active;
  const double edge_band = threshold;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto& pts = sets[i];
    std::vector<bool> used(pts.size(), false);
    std::vector<bool> continued(traces.size(), false);

    // Greedy global nearest-pair matching of active traces to new points.
    struct Pair {
      double d;
      std::size_t trace;
      std::size_t point;
    };
    std::vector<Pair> pairs;
    for (std::size_t a = 0; a < traces.size(); ++a) {
      if (!active[a]) continue;
      const auto& last = traces[a].points.back();
      for (std::size_t b = 0; b < pts.size(); ++b) {
        const double d = std::hypot(pts[b].x - last.x, pts[b].y - last.y);
        if (d < threshold) pairs.push_back({d, a, b});
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& l, const Pair& r) {
      return l.d != r.d ? l.d < r.d : (l.trace != r.trace ? l.trace < r.trace : l.point < r.point);
    });
    for (const auto& pr : pairs) {
      if (continued[pr.trace] || used[pr.point]) continue;
      continued[pr.trace] = true;
      used[pr.point] = true;
      traces[pr.trace].points.push_back(pts[pr.point]);
    }

    // Unmatched traces stop; those whose last point was near the edge are
    // dormant and may be revived by a node entering near the edge.
    std::vector<std::size_t> dormant;
    for (std::size_t a = 0; a < traces.size(); ++a) {
      if (continued[a]) continue;
      active[a] = false;
      const auto& last = traces[a].points.back();
      if (distance_to_edge(box, last.x, last.y) < edge_band) dormant.push_back(a);
    }

    // New points: revive a dormant trace when entering near the edge.
    for (std::size_t b = 0; b < pts.size(); ++b) {
      if (used[b]) continue;
      const auto& p = pts[b];
      bool revived = false;
      if (distance_to_edge(box, p.x, p.y) < edge_band) {
        for (auto it = dormant.begin(); it != dormant.end(); ++it) {
          auto& tr = traces[*it];
          tr.gaps.emplace_back(tr.points.back().t, p.t);
          tr.points.push_back(p);
          active[*it] = true;
          continued[*it] = true;
          dormant.erase(it);
          revived = true;
          break;
        }
      }
      if (!revived) {
        NodalTrace tr;
        tr.points.push_back(p);
        traces.push_back(std::move(tr));
        active.push_back(true);
        continued.push_back(true);
      }
    }
  }
  return traces;
}

// Phase difference wrapped to (-pi, pi].
double wrap(double d) {
  while (d > kPi) d -= 2.0 * kPi;
  while (d <= -kPi) d += 2.0 * kPi;
  return d;
}

std::vector<Sample> contour_at(const Wavefunction& wf, double t, double speed_level, const Rect& box, int grid) {
  const int n = grid;
  const double hx = box.width() / n;
  const double hy = box.height() / n;
  // Phase of Psi at cell corners.
  std::vector<double> phase(static_cast<std::size_t>(n + 1) * static_cast<std::size_t>(n + 1));
  std::vector<char> zero(phase.size(), 0);
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const auto f = wf.psi_scaled(box.x_min + i * hx, box.y_min + j * hy, t);
      const auto idx = static_cast<std::size_t>(j) * static_cast<std::size_t>(n + 1) + static_cast<std::size_t>(i);
      if (std::abs(f.value) == 0.0) {
        zero[idx] = 1;
      } else {
        phase[idx] = std::arg(f.value);
      }
    }
  }
  std::vector<Sample> out;
  auto corner = [&](int i, int j) {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(n + 1) + static_cast<std::size_t>(i);
  };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double xc = box.x_min + (i + 0.5) * hx;
      const double yc = box.y_min + (j + 0.5) * hy;
      bool marked = false;
      Velocity v;
      if (!try_velocity(wf, xc, yc, t, v) || std::hypot(v.vx, v.vy) >= speed_level) marked = true;
      if (!marked) {
        const std::size_t c[4] = {corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1)};
        if (zero[c[0]] || zero[c[1]] || zero[c[2]] || zero[c[3]]) {
          marked = true;
        } else {
          double winding = 0.0;
          for (int q = 0; q < 4; ++q) winding += wrap(phase[c[(q + 1) % 4]] - phase[c[q]]);
          marked = std::abs(winding) > kPi;
        }
      }
      if (marked) out.push_back({t, xc, yc});
    }
  }
  return out;
}

std::vector<double> time_grid(double t0, double t1, double dt) {
  if (!(dt > 0.0) || !(t1 >= t0)) throw SpecError("time range needs dt > 0 and t1 >= t0");
  const auto steps = static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-9));
  std::vector<double> times(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) times[i] = t0 + static_cast<double>(i) * dt;
  return times;
}

void check_contour_args(double speed_level, const Rect& box, int grid) {
  if (!(speed_level > 0.0)) throw SpecError("speed_level must be positive");
  if (!box.valid()) throw SpecError("search box is empty");
  if (grid < 2) throw SpecError("contour grid must be at least 2");
}

}  // namespace

double relative_residual(const Wavefunction& wf, double x, double y, double t) {
  const double at = log_abs_psi(wf.psi_scaled(x, y, t));
  double peak = -std::numeric_limits<double>::infinity();
  for (int j = -2; j <= 2; ++j) {
    for (int i = -2; i <= 2; ++i) {
      peak = std::max(peak, log_abs_psi(wf.psi_scaled(x + 0.25 * i, y + 0.25 * j, t)));
    }
  }
  if (at == -std::numeric_limits<double>::infinity()) return 0.0;
  return std::exp(at - peak);
}

bool residual_ok(const Wavefunction& wf, const NodalPoint& p) {
  return relative_residual(wf, p.x, p.y, p.t) < kResidualLimit;
}

std::vector<NodalPoint> nodes_analytic(const Wavefunction& wf, double t, int k_max) {
  if (k_max < 0) throw SpecError("k_max must be >= 0");
  const auto g = node_geometry(wf.spec(), t);
  std::vector<NodalPoint> out;
  if (!g) return out;
  for (int k = -k_max; k <= k_max; ++k) {
    if (parity_ok(k, g->parity)) out.push_back(family_point(wf, *g, k, t));
  }
  return out;
}

std::vector<NodalPoint> nodes_analytic_in_box(const Wavefunction& wf, double t, const Rect& box) {
  if (!box.valid()) throw SpecError("search box is empty");
  const auto g = node_geometry(wf.spec(), t);
  std::vector<NodalPoint> out;
  if (!g) return out;
  double k_lo = -std::numeric_limits<double>::infinity();
  double k_hi = std::numeric_limits<double>::infinity();
  restrict_k(g->ax * kPi * g->cy, g->ax * g->sy * g->ell, box.x_min, box.x_max, k_lo, k_hi);
  restrict_k(g->ay * kPi * g->cx, g->ay * g->sx * g->ell, box.y_min, box.y_max, k_lo, k_hi);
  if (!(k_lo <= k_hi) || !std::isfinite(k_lo) || !std::isfinite(k_hi)) return out;
  constexpr double kLimit = 1e6;
  const int lo = static_cast<int>(std::max(-kLimit, std::floor(k_lo) - 1.0));
  const int hi = static_cast<int>(std::min(kLimit, std::ceil(k_hi) + 1.0));
  for (int k = lo; k <= hi; ++k) {
    if (!parity_ok(k, g->parity)) continue;
    auto p = family_point(wf, *g, k, t);
    if (box.contains(p.x, p.y)) out.push_back(p);
  }
  return out;
}

double min_node_distance(const SystemSpec& spec, double t) {
  if (std::abs(spec.c1 - spec.c2) > 1e-12) throw SpecError("minimum node distance needs c1 = c2");
  const double s = std::sin((spec.omega_x - spec.omega_y) * t);
  if (std::abs(s) < kAtInfinity) throw NodesAtInfinity("nodal points are at infinity at t=" + std::to_string(t));
  const double cx = std::cos(spec.omega_x * t);
  const double cy = std::cos(spec.omega_y * t);
  return std::numbers::sqrt2 * kPi / (4.0 * spec.a0 * std::abs(s)) *
         std::sqrt(cy * cy / spec.omega_x + cx * cx / spec.omega_y);
}

NodeSearch nodes_numeric(const Wavefunction& wf, double t, const Rect& box, int seed_grid) {
  if (seed_grid < 64) throw SpecError("seed_grid must be >= 64");
  if (!box.valid()) throw SpecError("search box is empty");
  const int n = seed_grid;
  const auto cells = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  std::vector<double> logd(cells);
  std::vector<double> ratio(cells);
  double peak = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    const double y = lattice_coordinate(box.y_min, box.y_max, n, j);
    for (int i = 0; i < n; ++i) {
      const double x = lattice_coordinate(box.x_min, box.x_max, n, i);
      const auto f = wf.psi_scaled(x, y, t);
      const auto idx = static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
      logd[idx] = f.log_density();
      ratio[idx] = f.term_magnitude > 0.0 ? std::abs(f.value) / f.term_magnitude : 1.0;
      peak = std::max(peak, logd[idx]);
    }
  }
  const double threshold = peak + std::log(kSeedThreshold);
  auto local_min = [&](const std::vector<double>& field, int i, int j) {
    const double v = field[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)];
    for (int dj = -1; dj <= 1; ++dj) {
      for (int di = -1; di <= 1; ++di) {
        const int ii = i + di, jj = j + dj;
        if ((di == 0 && dj == 0) || ii < 0 || jj < 0 || ii >= n || jj >= n) continue;
        if (field[static_cast<std::size_t>(jj) * static_cast<std::size_t>(n) + static_cast<std::size_t>(ii)] < v) {
          return false;
        }
      }
    }
    return true;
  };

  NodeSearch result;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
      // Absolute rule: dim local minimum of |Psi|^2 (interior only, since the
      // envelope alone makes every edge cell far from the blob a minimum).
      const bool interior = i > 0 && j > 0 && i + 1 < n && j + 1 < n;
      const bool dim_seed = interior && logd[idx] < threshold && local_min(logd, i, j);
      // Relative rule: local minimum of the term-cancellation ratio, which is
      // blind to the Gaussian envelope and vanishes only at nodes.
      const bool cancel_seed = ratio[idx] < kCancellationSeed && local_min(ratio, i, j);
      if (!dim_seed && !cancel_seed) continue;
      ++result.seeds;
      double x = lattice_coordinate(box.x_min, box.x_max, n, i);
      double y = lattice_coordinate(box.y_min, box.y_max, n, j);
      if (!newton(wf, t, x, y)) {
        ++result.non_converged;
        continue;
      }
      if (!box.contains(x, y)) continue;
      NodalPoint p;
      p.t = t;
      p.x = x;
      p.y = y;
      p.residual = abs_psi(wf, x, y, t);
      if (!residual_ok(wf, p)) {
        ++result.non_converged;
        continue;
      }
      const bool duplicate = std::any_of(result.nodes.begin(), result.nodes.end(), [&](const NodalPoint& q) {
        return std::hypot(q.x - x, q.y - y) < kDedupRadius;
      });
      if (!duplicate) result.nodes.push_back(p);
    }
  }
  return result;
}

std::vector<NodalTrace> trace_nodes(const Wavefunction& wf, double t0, double t1, double dt, const Rect& box,
                                    const TraceOptions& options) {
  if (!box.valid()) throw SpecError("search box is empty");
  if (!(options.continuation_threshold > 0.0)) throw SpecError("continuation threshold must be positive");
  const auto& spec = wf.spec();
  bool analytic = false;
  switch (options.locator) {
    case NodeLocator::analytic:
      analytic = true;
      break;
    case NodeLocator::numeric:
      analytic = false;
      break;
    case NodeLocator::automatic:
      analytic = spec.full_band() && std::abs(spec.a0 - spec.b0) <= 1e-12 * std::max(1.0, std::abs(spec.a0));
      break;
  }
  const auto times = time_grid(t0, t1, dt);
  const auto sets = node_sets(wf, times, box, analytic, options.seed_grid);
  return analytic ? trace_by_family(times, sets)
                  : trace_by_neighbour(times, sets, box, options.continuation_threshold);
}

std::vector<Sample> union_cloud(const std::vector<NodalTrace>& traces) {
  std::vector<Sample> cloud;
  for (const auto& tr : traces) {
    for (const auto& p : tr.points) cloud.push_back({p.t, p.x, p.y});
  }
  std::sort(cloud.begin(), cloud.end(), [](const Sample& a, const Sample& b) {
    return a.t != b.t ? a.t < b.t : (a.x != b.x ? a.x < b.x : a.y < b.y);
  });
  return cloud;
}

double empty_disk_radius(const std::vector<Sample>& cloud) {
  double r = std::numeric_limits<double>::infinity();
  for (const auto& s : cloud) r = std::min(r, std::hypot(s.x, s.y));
  return r;
}

std::vector<Sample> velocity_contour_nodes(const Wavefunction& wf, double t0, double t1, double dt,
                                           double speed_level, const Rect& box, int grid) {
  check_contour_args(speed_level, box, grid);
  const auto times = time_grid(t0, t1, dt);
  std::vector<std::vector<Sample>> per_time(times.size());
  const auto n = static_cast<long>(times.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (long i = 0; i < n; ++i) {
    try {
      per_time[static_cast<std::size_t>(i)] = contour_at(wf, times[static_cast<std::size_t>(i)], speed_level, box, grid);
    } catch (...) {
#pragma omp critical(bohm_contour_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  std::vector<Sample> out;
  for (auto& v : per_time) out.insert(out.end(), v.begin(), v.end());
  return out;
}

namespace serial {

std::vector<Sample> velocity_contour_nodes(const Wavefunction& wf, double t0, double t1, double dt,
                                           double speed_level, const Rect& box, int grid) {
  check_contour_args(speed_level, box, grid);
  std::vector<Sample> out;
  for (double t : time_grid(t0, t1, dt)) {
    auto v = contour_at(wf, t, speed_level, box, grid);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

}  // namespace serial

std::vector<std::vector<Sample>> contour_clusters(const std::vector<Sample>& cells, double cell_size) {
  const double reach = 1.5 * cell_size;
  std::vector<int> label(cells.size(), -1);
  std::vector<std::vector<Sample>> clusters;
  for (std::size_t s = 0; s < cells.size(); ++s) {
    if (label[s] >= 0) continue;
    const int id = static_cast<int>(clusters.size());
    clusters.emplace_back();
    std::vector<std::size_t> stack{s};
    label[s] = id;
    while (!stack.empty()) {
      const auto c = stack.back();
      stack.pop_back();
      clusters.back().push_back(cells[c]);
      for (std::size_t o = 0; o < cells.size(); ++o) {
        if (label[o] >= 0) continue;
        if (std::abs(cells[o].x - cells[c].x) <= reach && std::abs(cells[o].y - cells[c].y) <= reach) {
          label[o] = id;
          stack.push_back(o);
        }
      }
    }
  }
  return clusters;
}

}  // namespace bohm
