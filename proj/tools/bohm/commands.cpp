#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "bohm/io.hpp"

namespace bohm::cli {

namespace fs = std::filesystem;

namespace {

/// Output directory, artifact bookkeeping and the progress side channel.
class Session {
 public:
  Session(const Invocation& inv, std::ostream& progress)
      : inv_(inv), progress_(progress), hash_(config_hash(inv.config)), short_hash_(short_hash(hash_)) {
    fs::create_directories(inv.out_dir);
  }

  const RunConfig& config() const { return inv_.config; }
  const Invocation& invocation() const { return inv_; }
  std::uint64_t short_hash_value() const { return short_hash_; }

  void event(const std::string& name, json fields = json::object()) {
    if (inv_.quiet && name == "progress") return;
    fields["event"] = name;
    progress_ << fields.dump() << '\n';
    progress_.flush();
  }

  fs::path path(const std::string& name) const { return inv_.out_dir / name; }

  void text(const std::string& name, const std::function<void(std::ostream&)>& writer) {
    std::ofstream os(path(name), std::ios::binary);
    if (!os) throw Error("cannot open " + path(name).string() + " for writing");
    writer(os);
    if (!os) throw Error("write failed: " + path(name).string());
    record(name);
  }

  void image(const std::string& name, const io::Image& img) {
    io::save(path(name), img);
    record(name);
  }

  void json_file(const std::string& name, const json& j) {
    text(name, [&j](std::ostream& os) { os << j.dump(2) << '\n'; });
  }

  void manifest(const std::string& status) {
    json m = canonical_json(inv_.config);
    m["tool_version"] = kToolVersion;
    m["config_hash"] = hash_;
    m["command"] = inv_.command;
    m["artifacts"] = artifacts_;
    m["status"] = status;
    std::ofstream os(path("manifest.json"), std::ios::binary);
    os << m.dump(2) << '\n';
  }

 private:
  void record(const std::string& name) {
    artifacts_.push_back(name);
    event("artifact", {{"path", path(name).string()}});
  }

  const Invocation& inv_;
  std::ostream& progress_;
  std::string hash_;
  std::uint64_t short_hash_;
  std::vector<std::string> artifacts_;
};

json diagnostics_json(const TrajectoryDiagnostics& d) {
  return {{"accepted_steps", d.accepted_steps},
          {"rejected_steps", d.rejected_steps},
          {"min_log_density", std::isfinite(d.min_log_density) ? json(d.min_log_density) : json(nullptr)},
          {"closest_node_approach",
           std::isfinite(d.closest_node_approach) ? json(d.closest_node_approach) : json(nullptr)},
          {"max_speed", d.max_speed}};
}

std::string indexed(const std::string& stem, std::size_t i, const std::string& ext) {
  return stem + "_" + std::to_string(i) + ext;
}

void require_long(const Invocation& inv) {
  if (inv.config.integrator.t_end >= kLongRunThreshold && !inv.long_run) {
    throw ConfigError("/integrator/t_end", "runs with t_end >= 1e5 need --long");
  }
}

void require_points(const RunConfig& c, std::size_t n) {
  if (c.initial_points.size() < n) {
    throw ConfigError("/initial_points", "needs at least " + std::to_string(n) + " initial point(s)");
  }
}

// Integrate while reporting progress every tenth of the run.
TrajectoryRunner::Sink progress_sink(std::vector<Sample>& out) {
  return [&out](const Sample& s) { out.push_back(s); };
}

template <class Runner, class Sink>
void advance_with_progress(Runner& runner, double from, double to, const Sink& sink, Session& session,
                           std::size_t item) {
  const double span = to - from;
  for (int part = 1; part <= 10 && !runner.finished(); ++part) {
    const double target = part == 10 ? to : from + span * part / 10.0;
    runner.advance_to(target, sink);
    session.event("progress", {{"item", item}, {"t", runner.t()}, {"t_stop", to}});
  }
}

// ---- trajectory -------------------------------------------------------------

int cmd_trajectory(Session& s, std::ostream& out) {
  const auto& c = s.config();
  require_points(c, 1);
  const Wavefunction wf(c.spec);
  json summary = json::array();
  bool failed = false;
  for (std::size_t i = 0; i < c.initial_points.size(); ++i) {
    const auto p = c.initial_points[i];
    TrajectoryRecord rec;
    rec.sample_dt = c.integrator.sample_dt;
    rec.spec_id = c.spec.fingerprint();
    TrajectoryRunner runner(wf, p.x, p.y, c.integrator);
    advance_with_progress(runner, 0.0, c.integrator.t_end, progress_sink(rec.samples), s, i);
    rec.status = runner.status();
    rec.diagnostics = runner.diagnostics();

    if (c.wants("csv")) s.text(indexed("trajectory", i, ".csv"), [&](std::ostream& os) { io::write_trajectory_csv(os, rec); });
    if (c.wants("binary")) {
      s.text(indexed("trajectory", i, ".bin"),
             [&](std::ostream& os) { io::write_trajectory_binary(os, rec, s.short_hash_value()); });
    }
    if (c.wants("image")) s.image(indexed("trajectory", i, ".ppm"), io::render_points(rec.samples, c.analysis.grid.bounds));

    json entry = {{"index", i},
                  {"x0", p.x},
                  {"y0", p.y},
                  {"status", to_string(rec.status)},
                  {"samples", rec.samples.size()},
                  {"duration", rec.duration()},
                  {"diagnostics", diagnostics_json(rec.diagnostics)}};
    if (c.analysis.lyapunov && rec.status == TrajectoryStatus::completed) {
      const auto est = lyapunov(wf, p.x, p.y, c.integrator, c.analysis.renorm_interval);
      s.text(indexed("lcn", i, ".csv"), [&](std::ostream& os) { io::write_lcn_csv(os, est); });
      entry["final_lcn"] = est.final_lcn;
      entry["ordered"] = is_ordered(est, c.integrator.t_end);
      entry["lyapunov_status"] = to_string(est.status);
    }
    if (rec.status != TrajectoryStatus::completed) {
      failed = true;
      s.event("error", {{"kind", "integration_failure"},
                        {"item", i},
                        {"message", "trajectory " + to_string(rec.status) + " at t=" + std::to_string(runner.t())}});
    }
    summary.push_back(entry);
  }
  s.json_file("summary.json", summary);
  out << summary.dump(2) << '\n';
  return failed ? kExitRuntime : kExitOk;
}

// ---- grid -------------------------------------------------------------------

int cmd_grid(Session& s, std::ostream& out) {
  const auto& inv = s.invocation();
  const auto& c = s.config();
  require_points(c, 1);
  if (inv.stop_at && !(*inv.stop_at > 0.0 && *inv.stop_at < c.integrator.t_end)) {
    throw ConfigError("", "--stop-at must lie inside (0, t_end)");
  }
  const Wavefunction wf(c.spec);
  std::vector<std::optional<OccupancyGrid>> finals(c.initial_points.size());
  json summary = json::array();
  bool failed = false;
  for (std::size_t i = 0; i < c.initial_points.size(); ++i) {
    const auto p = c.initial_points[i];
    TrajectoryRunner runner(wf, p.x, p.y, c.integrator);
    OccupancyGrid grid(c.analysis.grid, c.integrator.sample_dt);
    double from = 0.0;
    const auto ckp_name = indexed("checkpoint", i, ".ckp");
    if (inv.resume) {
      std::ifstream is(s.path(ckp_name), std::ios::binary);
      if (!is) throw Error("no checkpoint " + s.path(ckp_name).string() + " to resume from");
      auto [cp, hash] = io::read_checkpoint(is);
      if (hash != s.short_hash_value()) throw Error(ckp_name + " was written by a different configuration");
      if (!(cp.grid.grid() == grid.grid())) throw ShapeMismatch(ckp_name + " grid shape differs from the config");
      runner.restore(cp.runner);
      grid = std::move(cp.grid);
      from = runner.t();
    }
    const double stop = inv.stop_at ? *inv.stop_at : c.integrator.t_end;
    advance_with_progress(runner, from, std::max(stop, from), [&grid](const Sample& x) { grid.add_sample(x.x, x.y); },
                          s, i);

    json entry = {{"index", i}, {"x0", p.x}, {"y0", p.y}, {"status", to_string(runner.status())}, {"t", runner.t()}};
    if (!runner.finished()) {
      s.text(ckp_name, [&](std::ostream& os) {
        io::write_checkpoint(os, io::RunCheckpoint{runner.checkpoint(), grid}, s.short_hash_value());
      });
      entry["checkpointed"] = true;
      summary.push_back(entry);
      continue;
    }
    if (runner.status() != TrajectoryStatus::completed) {
      failed = true;
      s.event("error", {{"kind", "integration_failure"},
                        {"item", i},
                        {"message", "trajectory " + to_string(runner.status()) + " at t=" + std::to_string(runner.t())}});
    }
    s.text(indexed("grid", i, ".bin"), [&](std::ostream& os) { io::write_grid_binary(os, grid, s.short_hash_value()); });
    if (c.wants("csv")) s.text(indexed("grid", i, ".csv"), [&](std::ostream& os) { io::write_grid_csv(os, grid); });
    if (c.wants("image")) s.image(indexed("grid", i, ".ppm"), io::render_counts(grid.counts(), grid.resolution()));
    entry["total_time"] = grid.total_time();
    entry["samples"] = grid.sample_count();
    entry["out_of_bounds"] = grid.out_of_bounds();
    entry["diagnostics"] = diagnostics_json(runner.diagnostics());
    summary.push_back(entry);
    finals[i] = std::move(grid);
  }

  json distances = json::array();
  for (std::size_t i = 0; i < finals.size(); ++i) {
    for (std::size_t j = i + 1; j < finals.size(); ++j) {
      if (finals[i] && finals[j]) distances.push_back({{"i", i}, {"j", j}, {"D", frobenius_distance(*finals[i], *finals[j])}});
    }
  }
  if (!distances.empty()) {
    s.text("d_report.csv", [&](std::ostream& os) {
      os.precision(17);
      os << "i,j,D\n";
      for (const auto& d : distances) os << d["i"] << ',' << d["j"] << ',' << d["D"].get<double>() << '\n';
    });
  }
  const json result = {{"runs", summary}, {"distances", distances}};
  s.json_file("summary.json", result);
  out << result.dump(2) << '\n';
  return failed ? kExitRuntime : kExitOk;
}

// ---- nodes ------------------------------------------------------------------

bool analytic_applicable(const SystemSpec& spec) {
  return spec.full_band() && std::abs(spec.a0 - spec.b0) <= 1e-12 * std::max(1.0, std::abs(spec.a0));
}

int cmd_nodes(Session& s, std::ostream& out) {
  const auto& c = s.config();
  const auto& a = c.analysis;
  const Wavefunction wf(c.spec);
  const Rect& box = a.grid.bounds;
  json report;
  report["mode"] = a.node_mode;

  if (a.node_mode == "snapshot") {
    const bool analytic = a.locator == NodeLocator::analytic ||
                          (a.locator == NodeLocator::automatic && analytic_applicable(c.spec));
    std::vector<NodalPoint> all;
    json per_time = json::array();
    for (double t : a.times) {
      json entry = {{"t", t}, {"locator", analytic ? "analytic" : "numeric"}};
      try {
        if (analytic) {
          auto nodes = nodes_analytic(wf, t, a.k_max);
          entry["count"] = nodes.size();
          all.insert(all.end(), nodes.begin(), nodes.end());
        } else {
          auto found = nodes_numeric(wf, t, box, a.seed_grid);
          entry["count"] = found.nodes.size();
          entry["seeds"] = found.seeds;
          entry["non_converged"] = found.non_converged;
          all.insert(all.end(), found.nodes.begin(), found.nodes.end());
        }
        entry["status"] = "ok";
      } catch (const NodesAtInfinity& e) {
        entry["status"] = "at_infinity";
        entry["message"] = e.what();
      }
      per_time.push_back(entry);
    }
    report["snapshots"] = per_time;
    s.text("nodes.csv", [&](std::ostream& os) { io::write_nodes_csv(os, all); });
  } else if (a.node_mode == "trace") {
    TraceOptions opt;
    opt.locator = a.locator;
    opt.seed_grid = a.seed_grid;
    opt.continuation_threshold = a.continuation_threshold;
    const auto traces = trace_nodes(wf, a.t0, a.t1, a.dt, box, opt);
    std::vector<NodalPoint> all;
    for (const auto& tr : traces) all.insert(all.end(), tr.points.begin(), tr.points.end());
    s.text("nodes.csv", [&](std::ostream& os) { io::write_nodes_csv(os, all); });
    s.text("trace_gaps.csv", [&](std::ostream& os) {
      os << "trace,t_exit,t_entry\n";
      for (std::size_t i = 0; i < traces.size(); ++i) {
        for (const auto& [t0, t1] : traces[i].gaps) os << i << ',' << t0 << ',' << t1 << '\n';
      }
    });
    const auto cloud = union_cloud(traces);
    if (c.wants("image")) s.image("node_cloud.ppm", io::render_points(cloud, box));
    report["traces"] = traces.size();
    report["points"] = cloud.size();
    report["empty_disk_radius"] = cloud.empty() ? json(nullptr) : json(empty_disk_radius(cloud));
  } else if (a.node_mode == "contour") {
    const auto cells = velocity_contour_nodes(wf, a.t0, a.t1, a.dt, a.speed_level, box, a.contour_grid);
    s.text("contour.csv", [&](std::ostream& os) { io::write_points_csv(os, cells); });
    if (c.wants("image")) s.image("contour.ppm", io::render_points(cells, box));
    report["cells"] = cells.size();
    report["speed_level"] = a.speed_level;
  } else {  // crosscheck
    json rows = json::array();
    const double cell = std::max(box.width(), box.height()) / a.contour_grid;
    for (double t : a.times) {
      json row = {{"t", t}};
      const auto numeric = nodes_numeric(wf, t, box, a.seed_grid);
      row["numeric"] = numeric.nodes.size();
      if (analytic_applicable(c.spec)) {
        try {
          const auto analytic = nodes_analytic_in_box(wf, t, box);
          double worst = 0.0;
          for (const auto& q : numeric.nodes) {
            double best = INFINITY;
            for (const auto& p : analytic) best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
            worst = std::max(worst, best);
          }
          row["analytic"] = analytic.size();
          row["max_mismatch"] = numeric.nodes.empty() ? 0.0 : worst;
        } catch (const NodesAtInfinity&) {
          row["analytic"] = "at_infinity";
        }
      }
      const auto cells = velocity_contour_nodes(wf, t, t, 1.0, a.speed_level, box, a.contour_grid);
      const auto clusters = contour_clusters(cells, cell);
      std::size_t confirmed = 0;
      for (const auto& cl : clusters) {
        const bool hit = std::any_of(cl.begin(), cl.end(), [&](const Sample& cs) {
          return std::any_of(numeric.nodes.begin(), numeric.nodes.end(), [&](const NodalPoint& n) {
            return std::hypot(n.x - cs.x, n.y - cs.y) <= 2.0 * cell;
          });
        });
        if (hit) ++confirmed;
      }
      row["contour_clusters"] = clusters.size();
      row["clusters_with_root"] = confirmed;
      rows.push_back(row);
    }
    report["crosscheck"] = rows;
    s.text("crosscheck.csv", [&](std::ostream& os) {
      os << "t,numeric,analytic,max_mismatch,contour_clusters,clusters_with_root\n";
      for (const auto& r : rows) {
        os << r["t"].get<double>() << ',' << r["numeric"] << ',' << (r.contains("analytic") ? r["analytic"].dump() : "")
           << ',' << (r.contains("max_mismatch") ? r["max_mismatch"].dump() : "") << ',' << r["contour_clusters"]
           << ',' << r["clusters_with_root"] << '\n';
      }
    });
  }
  s.json_file("nodes_report.json", report);
  out << report.dump(2) << '\n';
  return kExitOk;
}

// ---- density ----------------------------------------------------------------

int cmd_density(Session& s, std::ostream& out) {
  const auto& c = s.config();
  const auto& a = c.analysis;
  json report = json::array();
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    const auto snap = density_snapshot(c.spec, a.times[i], a.grid, a.floor);
    if (c.wants("csv")) s.text(indexed("density", i, ".csv"), [&](std::ostream& os) { io::write_density_csv(os, snap); });
    if (c.wants("image")) s.image(indexed("density", i, ".ppm"), io::render_density(snap));
    const auto peak = snap.argmax();
    report.push_back({{"t", snap.t},
                      {"max", *std::max_element(snap.values.begin(), snap.values.end())},
                      {"argmax", {peak.x, peak.y}},
                      {"argmax_distance", std::hypot(peak.x, peak.y)},
                      {"integral", snap.integral()},
                      {"support_area", snap.support_area()},
                      {"floor", snap.floor}});
  }
  if (a.born_count > 0) {
    const auto seed = c.seeds.empty() ? 1 : c.seeds.front();
    const auto pts = born_sample(c.spec, a.times.front(), a.born_count, seed, a.grid);
    s.text("born_samples.csv", [&](std::ostream& os) {
      os << "x,y\n";
      os.precision(17);
      for (const auto& p : pts) os << p.x << ',' << p.y << '\n';
    });
  }
  s.json_file("density_report.json", report);
  out << report.dump(2) << '\n';
  return kExitOk;
}

// ---- overlap / Poisson tables ----------------------------------------------------

int cmd_overlap(Session& s, std::ostream& out) {
  const auto& c = s.config();
  const auto& a = c.analysis;
  const double omega = c.spec.omega_x;
  json report = json::array();
  s.text("poisson.csv", [&](std::ostream& os) {
    os.precision(17);
    os << "amplitude,n,probability\n";
    for (double amp : a.amplitudes) {
      for (int n = 0; n <= a.n_f_max; ++n) os << amp << ',' << n << ',' << poisson_probability(amp * amp, n) << '\n';
    }
  });
  s.text("coverage.csv", [&](std::ostream& os) {
    os.precision(17);
    os << "amplitude,n_in,n_f,coverage\n";
    for (double amp : a.amplitudes) {
      for (int nf = c.spec.n_in; nf <= a.n_f_max; ++nf) {
        os << amp << ',' << c.spec.n_in << ',' << nf << ',' << poisson_coverage(amp, c.spec.n_in, nf) << '\n';
      }
    }
  });
  s.text("overlap.csv", [&](std::ostream& os) {
    os.precision(17);
    os << "amplitude,n_in,n_f,overlap\n";
    for (double amp : a.amplitudes) {
      json row = {{"amplitude", amp}};
      for (int nf = c.spec.n_in; nf <= a.n_f_max; ++nf) {
        os << amp << ',' << c.spec.n_in << ',' << nf << ',' << overlap_1d(amp, omega, c.spec.n_in, nf) << '\n';
      }
      const double full = overlap_1d(amp, omega, c.spec.n_in, std::nullopt);
      os << amp << ',' << c.spec.n_in << ",unbounded," << full << '\n';
      row["overlap_unbounded"] = full;
      row["mean_level"] = amp * amp;
      report.push_back(row);
    }
  });
  s.json_file("overlap_report.json", report);
  out << report.dump(2) << '\n';
  return kExitOk;
}

// ---- sweep ------------------------------------------------------------------

int cmd_sweep(Session& s, std::ostream& out) {
  const auto& c = s.config();
  require_points(c, 1);
  SweepRequest req;
  req.base = c.spec;
  req.n_f_list = c.analysis.n_f_list;
  req.c2_list = c.analysis.c2_list;
  req.n_in = c.analysis.sweep_n_in;
  req.start = c.initial_points.front();
  req.settings = c.integrator;
  req.grid = c.analysis.grid;
  s.event("progress", {{"jobs", req.c2_list.size() * (req.n_f_list.size() + 1)}});
  const auto entries = truncation_sweep(req);
  s.text("sweep.csv", [&](std::ostream& os) { io::write_sweep_csv(os, entries); });
  json report = json::array();
  bool failed = false;
  for (const auto& e : entries) {
    json row = {{"n_in", e.n_in},
                {"n_f", e.n_f ? json(*e.n_f) : json("unbounded")},
                {"c2", e.c2},
                {"D", e.distance ? json(*e.distance) : json(nullptr)}};
    if (!e.distance) {
      failed = true;
      row["message"] = e.message;
      s.event("error", {{"kind", "integration_failure"}, {"message", e.message}});
    }
    report.push_back(row);
  }
  s.json_file("sweep_report.json", report);
  out << report.dump(2) << '\n';
  return failed ? kExitRuntime : kExitOk;
}

// ---- compare ----------------------------------------------------------------

int cmd_compare(Session& s, std::ostream& out) {
  const auto& inv = s.invocation();
  const auto& c = s.config();
  json report;
  if (!inv.grids.empty()) {
    if (inv.grids.size() != 2) throw ConfigError("", "compare needs exactly two --grid files");
    std::vector<OccupancyGrid> grids;
    for (const auto& p : inv.grids) {
      std::ifstream is(p, std::ios::binary);
      if (!is) throw Error("cannot open " + p.string());
      grids.push_back(io::read_grid_binary(is).first);
    }
    report = {{"a", inv.grids[0].string()}, {"b", inv.grids[1].string()}, {"D", frobenius_distance(grids[0], grids[1])}};
  } else {
      require_points(c, 2);
    if (c.analysis.checkpoints.empty()) throw ConfigError("/analysis/checkpoints", "needs at least one checkpoint");
    const Wavefunction wf(c.spec);
    const auto series = convergence_series(wf, c.initial_points[0], c.initial_points[1], c.integrator, c.analysis.grid,
                                           c.analysis.checkpoints);
    s.text("convergence.csv", [&](std::ostream& os) {
      os.precision(17);
      os << "t,D\n";
      for (const auto& [t, d] : series) os << t << ',' << d << '\n';
    });
    json rows = json::array();
    for (const auto& [t, d] : series) rows.push_back({{"t", t}, {"D", d}});
    report = {{"series", rows}};
  }
  s.json_file("compare_report.json", report);
  out << report.dump(2) << '\n';
  return kExitOk;
}

int dispatch(Session& s, std::ostream& out) {
  const auto& cmd = s.invocation().command;
  if (cmd == "trajectory") return cmd_trajectory(s, out);
  if (cmd == "grid") return cmd_grid(s, out);
  if (cmd == "nodes") return cmd_nodes(s, out);
  if (cmd == "density") return cmd_density(s, out);
  if (cmd == "overlap") return cmd_overlap(s, out);
  if (cmd == "sweep") return cmd_sweep(s, out);
  if (cmd == "compare") return cmd_compare(s, out);
  throw ConfigError("", "unknown command '" + cmd + "'");
}

void error_record(std::ostream& err, const std::string& kind, const std::string& message, const std::string& pointer) {
  json j = {{"event", "error"}, {"kind", kind}, {"message", message}};
  if (!pointer.empty()) j["pointer"] = pointer;
  err << j.dump() << '\n';
}

}  // namespace

int run_command(const Invocation& inv, std::ostream& out, std::ostream& progress) {
  const bool integrates = inv.command == "trajectory" || inv.command == "grid" || inv.command == "sweep" ||
                          (inv.command == "compare" && inv.grids.empty());
  if (integrates) require_long(inv);
  Session session(inv, progress);
  session.event("start", {{"command", inv.command}, {"config_hash", config_hash(inv.config)}, {"tool_version", kToolVersion}});
  try {
    const int code = dispatch(session, out);
    session.manifest(code == kExitOk ? "ok" : "failed");
    session.event("done", {{"exit_code", code}});
    return code;
  } catch (...) {
    session.manifest("failed");
    throw;
  }
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bohmian trajectories of entangled coherent-state qubits"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string config_path;
  std::vector<std::string> overrides;
  Invocation inv;
  std::string out_dir = "out";
  std::optional<double> stop_at;
  std::vector<std::string> grids;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"trajectory", "Integrate trajectories (CSV, binary, path image, LCN series)"},
      {"grid", "Accumulate occupancy grids and pairwise Frobenius distances"},
      {"nodes", "Nodal points: snapshots, traces, velocity contours, cross-checks"},
      {"density", "Probability-density snapshots and Born samples"},
      {"overlap", "Poisson, coverage and overlap tables"},
      {"sweep", "Truncation sweep of distances to the full state"},
      {"compare", "Distance between two grid files or a two-trajectory convergence series"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config_path, "JSON config (a manifest.json also works)");
    sub->add_option("-s,--set", overrides, "Override, e.g. --set spec.a0=0.5 (repeatable)");
    sub->add_option("-o,--out", out_dir, "Output directory")->capture_default_str();
    sub->add_flag("--long", inv.long_run, "Allow runs with t_end >= 1e5");
    sub->add_flag("-q,--quiet", inv.quiet, "Suppress progress events");
    if (name == "grid") {
      sub->add_option("--stop-at", stop_at, "Stop at this time and write checkpoints");
      sub->add_flag("--resume", inv.resume, "Continue from checkpoints in the output directory");
    }
    if (name == "compare") sub->add_option("--grid", grids, "Grid file (give two)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  inv.command = app.get_subcommands().front()->get_name();
  inv.out_dir = out_dir;
  inv.stop_at = stop_at;
  for (const auto& g : grids) inv.grids.emplace_back(g);

  try {
    json doc = json::object();
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw ConfigError("", "cannot open config file " + config_path);
      try {
        doc = json::parse(is);
      } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
      }
    }
    for (const auto& o : overrides) apply_override(doc, o);
    inv.config = parse_config(doc);
    return run_command(inv, out, err);
  } catch (const ConfigError& e) {
    error_record(err, e.kind(), e.what(), e.pointer());
    return kExitConfig;
  } catch (const SpecError& e) {
    error_record(err, e.kind(), e.what(), "");
    return kExitConfig;
  } catch (const Error& e) {
    error_record(err, e.kind(), e.what(), "");
    return kExitRuntime;
  } catch (const std::exception& e) {
    error_record(err, "runtime_error", e.what(), "");
    return kExitRuntime;
  }
}

}  // namespace bohm::cli
