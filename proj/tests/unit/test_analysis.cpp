#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "bohm/analysis.hpp"
#include "bohm/errors.hpp"

using namespace bohm;

namespace {

SystemSpec entangled(double a0, std::optional<int> n_f = std::nullopt) {
  SystemSpec s;
  s.a0 = s.b0 = a0;
  s.n_f = n_f;
  return s;
}

TrajectoryRecord random_record(std::mt19937_64& rng, std::size_t n, double stride = 0.05) {
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  TrajectoryRecord r;
  r.sample_dt = stride;
  for (std::size_t i = 0; i < n; ++i) r.samples.push_back({static_cast<double>(i) * stride, u(rng), u(rng)});
  return r;
}

// Upper 99% point of chi-square with k degrees of freedom (Wilson-Hilferty).
double chi2_99(double k) {
  const double z = 2.326347874;
  const double a = 2.0 / (9.0 * k);
  return k * std::pow(1.0 - a + z * std::sqrt(a), 3);
}

std::vector<double> coarse_histogram(const std::vector<Point2>& pts, const Rect& box, int n) {
  std::vector<double> h(static_cast<std::size_t>(n) * n, 0.0);
  for (const auto& p : pts) {
    int ix = std::min(n - 1, static_cast<int>((p.x - box.x_min) / box.width() * n));
    int iy = std::min(n - 1, static_cast<int>((p.y - box.y_min) / box.height() * n));
    h[static_cast<std::size_t>(iy) * n + ix] += 1.0;
  }
  return h;
}

}  // namespace

TEST_CASE("binning") {
  GridSpec g{Rect::square(9.0), 360};
  OccupancyGrid grid(g, 0.05);
  const double cell = 18.0 / 360;
  SUBCASE("sample at a cell center") {
    grid.add_sample(-9.0 + cell * 10.5, -9.0 + cell * 200.5);
    CHECK(grid.at(10, 200) == 1.0);
    CHECK(grid.sample_count() == 1);
    CHECK(grid.total_time() == doctest::Approx(0.05));
  }
  SUBCASE("half-open cells, last cell closed") {
    CHECK(grid.cell_of(-9.0 + cell * 3, 0.0)->first == 3);
    CHECK(grid.cell_of(9.0, 9.0) == std::make_pair(359, 359));
    CHECK(grid.cell_of(-9.0, -9.0) == std::make_pair(0, 0));
    CHECK_FALSE(grid.cell_of(9.0 + 1e-12, 0.0).has_value());
  }
  SUBCASE("out of bounds samples still count as time") {
    grid.add_sample(20.0, 0.0);
    CHECK(grid.out_of_bounds() == 1);
    CHECK(grid.total_time() == doctest::Approx(0.05));
    CHECK(std::all_of(grid.counts().begin(), grid.counts().end(), [](double v) { return v == 0.0; }));
  }
  SUBCASE("empty record leaves the grid unchanged") {
    const OccupancyGrid before = grid;
    TrajectoryRecord empty;
    empty.sample_dt = 0.05;
    grid.add(empty);
    CHECK(grid == before);
    TrajectoryRecord other;
    other.sample_dt = 0.1;
    grid.add(other);
    CHECK(grid == before);
  }
  SUBCASE("stride must match") {
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(grid.add(random_record(rng, 10, 0.1)), StrideMismatch);
    CHECK_THROWS_AS(grid.merge(OccupancyGrid(g, 0.1)), StrideMismatch);
    CHECK_THROWS_AS(grid.merge(OccupancyGrid(GridSpec{Rect::square(9.0), 100}, 0.05)), ShapeMismatch);
    CHECK_THROWS_AS(frobenius_distance(grid, OccupancyGrid(GridSpec{Rect::square(8.0), 360}, 0.05)), ShapeMismatch);
  }
  SUBCASE("invalid shapes") {
    CHECK_THROWS(OccupancyGrid(GridSpec{Rect::square(9.0), 0}, 0.05));
    CHECK_THROWS(OccupancyGrid(g, -1.0));
    CHECK_THROWS_AS(OccupancyGrid::from_parts(g, 0.05, 1.0, 1, 0, std::vector<double>(5)), FormatError);
  }
}

TEST_CASE("accumulation is additive and split-invariant") {
  std::mt19937_64 rng(2);
  const GridSpec g{Rect::square(9.0), 60};
  const auto r1 = random_record(rng, 500);
  const auto r2 = random_record(rng, 300);
  TrajectoryRecord joined = r1;
  joined.samples.insert(joined.samples.end(), r2.samples.begin(), r2.samples.end());
  const OccupancyGrid empty(g, 0.05);
  const auto seq = accumulate(accumulate(empty, r1), r2);
  const auto all = accumulate(empty, joined);
  CHECK(seq.counts() == all.counts());
  CHECK(seq.total_time() == doctest::Approx(all.total_time()));
  CHECK(seq.total_time() == doctest::Approx(accumulate(empty, r1).total_time() + accumulate(empty, r2).total_time()));

  auto merged = accumulate(empty, r2);
  merged.merge(accumulate(empty, r1));
  CHECK(merged.counts() == all.counts());
  const auto a = merged.normalized();
  const auto b = all.normalized();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
}

TEST_CASE("Frobenius distance is a metric") {
  std::mt19937_64 rng(3);
  const GridSpec g{Rect::square(9.0), 40};
  for (int i = 0; i < 20; ++i) {
    const auto a = accumulate(OccupancyGrid(g, 0.05), random_record(rng, 50 + i * 13));
    const auto b = accumulate(OccupancyGrid(g, 0.05), random_record(rng, 400));
    const auto c = accumulate(OccupancyGrid(g, 0.05), random_record(rng, 77));
    CHECK(frobenius_distance(a, a) == 0.0);
    CHECK(frobenius_distance(a, b) == frobenius_distance(b, a));
    CHECK(frobenius_distance(a, b) > 0.0);
    CHECK(frobenius_distance(a, c) <= frobenius_distance(a, b) + frobenius_distance(b, c) + 1e-15);
  }
  const OccupancyGrid empty(g, 0.05);
  CHECK(empty.normalized() == std::vector<double>(1600, 0.0));
}

TEST_CASE("streamed grid runs equal record accumulation") {
  const Wavefunction wf(entangled(2.5));
  IntegratorSettings st;
  st.t_end = 30.0;
  const GridSpec g{};
  const auto run = grid_run(wf, {3.0, 0.0}, st, g);
  const auto rec = integrate(wf, 3.0, 0.0, st);
  CHECK(run.grid == accumulate(OccupancyGrid(g, st.sample_dt), rec));
  CHECK(run.status == TrajectoryStatus::completed);
  CHECK(run.grid.total_time() == doctest::Approx(rec.duration()));
}

TEST_CASE("ensemble accumulation equals the serial reference") {
  const Wavefunction wf(entangled(2.5));
  IntegratorSettings st;
  st.t_end = 10.0;
  const std::vector<Point2> pts{{0.1, 0.4}, {3.0, 0.0}, {-2.0, 1.0}};
  const GridSpec g{Rect::square(9.0), 90};
  CHECK(accumulate_ensemble(wf, pts, st, g) == serial::accumulate_ensemble(wf, pts, st, g));
}

TEST_CASE("truncation sweep") {
  SweepRequest req;
  req.base = entangled(2.5);
  req.n_f_list = {2, 12, std::nullopt};
  req.c2_list = {0.2, std::numbers::sqrt2 / 2.0};
  req.settings.t_end = 20.0;
  const auto par = truncation_sweep(req);
  const auto ser = serial::truncation_sweep(req);
  REQUIRE(par.size() == 6);
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i].n_f == ser[i].n_f);
    CHECK(par[i].c2 == ser[i].c2);
    CHECK(par[i].distance == ser[i].distance);
  }
  CHECK(par[0].c2 == 0.2);
  CHECK(par[0].n_f == 2);
  CHECK(par[3].c2 == doctest::Approx(std::numbers::sqrt2 / 2.0));
  // The full state compared with itself.
  CHECK(par[2].distance == 0.0);
  CHECK(par[5].distance == 0.0);
  CHECK(*par[0].distance > 0.0);
}

TEST_CASE("convergence series") {
  const Wavefunction wf(entangled(2.5));
  IntegratorSettings st;
  st.t_end = 20.0;
  const std::vector<double> cps{5.0, 10.0, 20.0};
  const auto same = convergence_series(wf, {3.0, 0.0}, {3.0, 0.0}, st, GridSpec{}, cps);
  REQUIRE(same.size() == 3);
  for (const auto& [t, d] : same) CHECK(d == 0.0);
  const auto diff = convergence_series(wf, {3.0, 0.0}, {0.1, 0.2}, st, GridSpec{}, cps);
  CHECK(diff[2].first == 20.0);
  // The last checkpoint equals the full-run distance.
  const auto ga = grid_run(wf, {3.0, 0.0}, st, GridSpec{}).grid;
  const auto gb = grid_run(wf, {0.1, 0.2}, st, GridSpec{}).grid;
  CHECK(diff[2].second == doctest::Approx(frobenius_distance(ga, gb)).epsilon(1e-14));
}

TEST_CASE("density snapshots") {
  SUBCASE("integrate to one for a0 <= 2.5") {
    for (double a0 : {0.5, 1.0, 2.5}) {
      SystemSpec s = entangled(a0, 8);
      s.renormalize = true;
      CHECK(density_snapshot(s, 0.0).integral() == doctest::Approx(1.0).epsilon(1e-3));
    }
    CHECK(density_snapshot(entangled(2.5), 0.0).integral() == doctest::Approx(1.0).epsilon(1e-3));
  }
  SUBCASE("t=0 maximum sits on one of the two blobs") {
    const SystemSpec s = entangled(2.5);
    const auto snap = density_snapshot(s, 0.0);
    const auto c = blob_centers(s, 0.0);
    const auto p = snap.argmax();
    const double cell = 18.0 / 360;
    const double d = std::min(std::hypot(p.x - c.x_c, p.y + c.y_c), std::hypot(p.x + c.x_c, p.y - c.y_c));
    CHECK(d <= cell);
  }
  SUBCASE("support mask follows the floor") {
    const auto snap = density_snapshot(entangled(2.5), 0.0, GridSpec{}, 1e-5);
    const auto mask = snap.support_mask();
    std::size_t on = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      CHECK(mask[i] == (snap.values[i] >= 1e-5));
      on += mask[i];
    }
    CHECK(snap.support_area() == doctest::Approx(on * (18.0 / 360) * (18.0 / 360)));
  }
  SUBCASE("serial row order does not matter") {
    const auto a = density_snapshot(entangled(1.0, 4), 2.0, GridSpec{Rect::square(6.0), 50});
    CHECK(a.at(3, 7) == doctest::Approx(Wavefunction(entangled(1.0, 4)).density(-6.0 + 3.5 * 0.24, -6.0 + 7.5 * 0.24, 2.0)));
  }
}

TEST_CASE("Born sampling") {
  SystemSpec s = entangled(2.5);
  s.renormalize = true;
  SUBCASE("requires a renormalized spec") { CHECK_THROWS_AS(born_sample(entangled(2.5), 0.0, 10, 1), SpecError); }
  SUBCASE("deterministic per seed") {
    CHECK(born_sample(s, 1.0, 200, 42).front().x == born_sample(s, 1.0, 200, 42).front().x);
    const auto a = born_sample(s, 1.0, 200, 42);
    const auto b = born_sample(s, 1.0, 200, 42);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i].x == b[i].x && a[i].y == b[i].y));
    CHECK(born_sample(s, 1.0, 5, 43).front().x != a.front().x);
  }
  SUBCASE("histogram agrees with the density (chi-square, 99%)") {
    const int n = 100000;
    const auto pts = born_sample(s, 0.7, n, 7);
    const Rect box = Rect::square(9.0);
    const auto snap = density_snapshot(s, 0.7);
    const double cell_area = (18.0 / 360) * (18.0 / 360);
    std::vector<double> expected(36 * 36, 0.0);
    double total = 0.0;
    for (int iy = 0; iy < 360; ++iy) {
      for (int ix = 0; ix < 360; ++ix) {
        expected[static_cast<std::size_t>(iy / 10) * 36 + ix / 10] += snap.at(ix, iy) * cell_area;
        total += snap.at(ix, iy) * cell_area;
      }
    }
    const auto observed = coarse_histogram(pts, box, 36);
    double chi2 = 0.0;
    int dof = -1;
    double pooled_obs = 0.0, pooled_exp = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      const double e = expected[i] / total * n;
      if (e >= 5.0) {
        chi2 += (observed[i] - e) * (observed[i] - e) / e;
        ++dof;
      } else {
        pooled_obs += observed[i];
        pooled_exp += e;
      }
    }
    if (pooled_exp > 0.0) {
      chi2 += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
      ++dof;
    }
    CHECK(chi2 < chi2_99(dof));
  }
  SUBCASE("two seeds are statistically indistinguishable") {
    const int n = 40000;
    const auto a = coarse_histogram(born_sample(s, 2.0, n, 100), Rect::square(9.0), 36);
    const auto b = coarse_histogram(born_sample(s, 2.0, n, 200), Rect::square(9.0), 36);
    double chi2 = 0.0;
    int dof = -1;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] + b[i] >= 10.0) {
        chi2 += (a[i] - b[i]) * (a[i] - b[i]) / (a[i] + b[i]);
        ++dof;
      }
    }
    CHECK(chi2 < chi2_99(dof));
  }
  SUBCASE("maximally entangled t=0 splits evenly between the blobs") {
    const int n = 20000;
    const auto pts = born_sample(s, 0.0, n, 9);
    const double right = static_cast<double>(std::count_if(pts.begin(), pts.end(), [](const Point2& p) { return p.x > 0; }));
    CHECK(std::abs(right / n - 0.5) < 3.0 * 0.5 / std::sqrt(n));
  }
  SUBCASE("product state marginal means sit on the blob centers") {
    SystemSpec p = s;
    p.c1 = 1.0;
    p.c2 = 0.0;
    const int n = 20000;
    const double t = 0.9;
    const auto pts = born_sample(p, t, n, 5);
    double mx = 0.0, my = 0.0;
    for (const auto& q : pts) {
      mx += q.x / n;
      my += q.y / n;
    }
    const auto c = blob_centers(p, t);
    CHECK(std::abs(mx - c.x_c) < 3.0 / std::sqrt(2.0 * p.omega_x * n));
    CHECK(std::abs(my + c.y_c) < 3.0 / std::sqrt(2.0 * p.omega_y * n));
  }
}

TEST_CASE("Born-sampled ensemble stays in the support") {
  SystemSpec s = entangled(2.5);
  s.renormalize = true;
  const auto pts = born_sample(s, 0.0, 100, 17);
  IntegratorSettings st;
  st.t_end = 1e3;
  const auto recs = integrate_ensemble(Wavefunction(s), pts, st);
  for (const auto& r : recs) CHECK(r.status != TrajectoryStatus::out_of_box);
}
