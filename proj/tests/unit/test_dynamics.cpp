#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "bohm/dynamics.hpp"
#include "bohm/errors.hpp"
#include "bohm/nodal.hpp"
#include "oracle_values.hpp"

using namespace bohm;

namespace {

SystemSpec entangled(double a0, std::optional<int> n_f = std::nullopt) {
  SystemSpec s;
  s.a0 = s.b0 = a0;
  s.n_f = n_f;
  return s;
}

SystemSpec product(double a0) {
  SystemSpec s = entangled(a0);
  s.c1 = 1.0;
  s.c2 = 0.0;
  return s;
}

}  // namespace

TEST_CASE("velocity matches the high-precision oracle") {
  const auto v = velocity(entangled(2.5), 0.3, -1.2, 2.1);
  CHECK(v.vx == doctest::Approx(oracle::kVelFullX).epsilon(1e-9));
  CHECK(v.vy == doctest::Approx(oracle::kVelFullY).epsilon(1e-9));
  const auto w = velocity(entangled(0.5, 4), 0.4, 0.9, 3.3);
  CHECK(w.vx == doctest::Approx(oracle::kVelTruncX).epsilon(1e-9));
  CHECK(w.vy == doctest::Approx(oracle::kVelTruncY).epsilon(1e-9));
  SystemSpec mixed;
  mixed.a0 = 1.5;
  mixed.b0 = 0.8;
  mixed.c2 = 0.35;
  mixed.c1 = std::sqrt(1.0 - 0.35 * 0.35);
  mixed.n_in = 1;
  mixed.n_f = 6;
  const auto m = velocity(mixed, -0.6, 0.25, 1.3);
  CHECK(m.vx == doctest::Approx(oracle::kVelMixedX).epsilon(1e-9));
  CHECK(m.vy == doctest::Approx(oracle::kVelMixedY).epsilon(1e-9));
}

TEST_CASE("analytic gradient agrees with central differences") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5.0, 5.0), ut(0.0, 30.0);
  const SystemSpec specs[] = {entangled(2.5), entangled(0.5, 2), entangled(1.0, 12)};
  int checked = 0;
  for (const auto& s : specs) {
    const Wavefunction wf(s);
    for (int i = 0; i < 200; ++i) {
      const double x = u(rng), y = u(rng), t = ut(rng);
      const auto p = wf.psi(x, y, t);
      if (std::norm(p.value) < 1e-8) continue;
      const double h = 1e-5;
      const cplx gx = (wf.psi(x + h, y, t).value - wf.psi(x - h, y, t).value) / (2 * h);
      const cplx gy = (wf.psi(x, y + h, t).value - wf.psi(x, y - h, t).value) / (2 * h);
      const double scale = std::abs(p.grad_x) + std::abs(p.grad_y) + std::abs(p.value);
      CHECK(std::abs(gx - p.grad_x) / scale < 1e-6);
      CHECK(std::abs(gy - p.grad_y) / scale < 1e-6);
      ++checked;
    }
  }
  CHECK(checked > 300);
}

TEST_CASE("velocity is invariant under rescaling Psi") {
  const cplx k = 7.3 * std::polar(1.0, std::numbers::pi / 5.0);
  SystemSpec plain = entangled(2.5, 6);
  SystemSpec renorm = plain;
  renorm.renormalize = true;
  const Wavefunction a(plain), b(renorm);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int i = 0; i < 100; ++i) {
    const double x = u(rng), y = u(rng), t = u(rng) + 4.0;
    const auto p = a.psi(x, y, t);
    const auto v = velocity(a, x, y, t);
    const double vx = ((k * p.grad_x) / (k * p.value)).imag();
    const double vy = ((k * p.grad_y) / (k * p.value)).imag();
    CHECK(std::abs(vx - v.vx) <= 1e-12 * std::max(1.0, std::abs(v.vx)));
    CHECK(std::abs(vy - v.vy) <= 1e-12 * std::max(1.0, std::abs(v.vy)));
    const auto w = velocity(b, x, y, t);
    CHECK(std::abs(w.vx - v.vx) <= 1e-12 * std::max(1.0, std::abs(v.vx)));
    CHECK(std::abs(w.vy - v.vy) <= 1e-12 * std::max(1.0, std::abs(v.vy)));
  }
}

TEST_CASE("product-state velocity is uniform and follows the blob centers") {
  const SystemSpec s = product(2.5);
  for (double t : {0.3, 1.7, 8.2}) {
    const double vx = -std::sqrt(2.0 / s.omega_x) * s.a0 * s.omega_x * std::sin(s.omega_x * t);
    // Y_L on y: its center is -y_c(t).
    const double vy = std::sqrt(2.0 / s.omega_y) * s.b0 * s.omega_y * std::sin(s.omega_y * t);
    for (double x : {-3.0, 0.0, 2.2}) {
      for (double y : {-1.0, 4.0}) {
        const auto v = velocity(s, x, y, t);
        CHECK(v.vx == doctest::Approx(vx).epsilon(1e-10).scale(1.0));
        CHECK(v.vy == doctest::Approx(vy).epsilon(1e-10).scale(1.0));
      }
    }
  }
}

TEST_CASE("speed diverges approaching a node") {
  const Wavefunction wf(entangled(2.5));
  const auto nodes = nodes_analytic(wf, 1.0, 1);
  REQUIRE(!nodes.empty());
  const auto& n = nodes.front();
  double prev = 0.0;
  for (double d : {1e-2, 1e-3, 1e-4}) {
    const auto v = velocity(wf, n.x + d, n.y, 1.0);
    const double speed = std::hypot(v.vx, v.vy);
    CHECK(speed > prev);
    prev = speed;
  }
  // The closed-form point is only a floating-point neighbour of the zero.
  CHECK(prev > 1e3);
}

TEST_CASE("velocity is undefined at an exact zero") {
  SystemSpec s = entangled(2.5);
  s.c2 = -s.c1;  // antisymmetric: Psi(0, 0) cancels exactly
  const Wavefunction wf(s);
  Velocity out;
  CHECK_FALSE(try_velocity(wf, 0.0, 0.0, 1.0, out));
  CHECK_THROWS_AS(velocity(wf, 0.0, 0.0, 1.0), NodeSingularity);
}

TEST_CASE("Dopri5 integrates a rotation to tolerance") {
  Dopri5<2> stepper([](double, const Dopri5<2>::State& y, Dopri5<2>::State& f) {
    f = {-y[1], y[0]};
    return true;
  }, StepControl{1e-11, 1e-11, 1e-3, 1e-14, 1.0, 1e9});
  stepper.reset(0.0, {1.0, 0.0});
  while (stepper.t() < 10.0) REQUIRE(stepper.step(10.0) == StepOutcome::ok);
  CHECK(stepper.t() == 10.0);
  CHECK(stepper.y()[0] == doctest::Approx(std::cos(10.0)).epsilon(1e-8));
  CHECK(stepper.y()[1] == doctest::Approx(std::sin(10.0)).epsilon(1e-8));
}

TEST_CASE("settings validation") {
  IntegratorSettings s;
  CHECK_NOTHROW(s.validate());
  s.sample_dt = 0.0;
  CHECK_THROWS_AS(s.validate(), SpecError);
  s = IntegratorSettings{};
  s.t_end = 1.0;
  s.sample_dt = 0.25;
  CHECK(s.sample_count() == 5);
}

TEST_CASE("product-state trajectories are translated Lissajous curves") {
  const SystemSpec s = product(2.5);
  const Wavefunction wf(s);
  IntegratorSettings st;
  st.t_end = 100.0;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 4; ++i) {
    const double x0 = u(rng), y0 = u(rng);
    const auto rec = integrate(wf, x0, y0, st);
    REQUIRE(rec.status == TrajectoryStatus::completed);
    const auto c0 = blob_centers(s, 0.0);
    double worst = 0.0;
    for (const auto& smp : rec.samples) {
      const auto c = blob_centers(s, smp.t);
      worst = std::max(worst, std::hypot(smp.x - (x0 - c0.x_c + c.x_c), smp.y - (y0 + c0.y_c - c.y_c)));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("samples sit at exact multiples of the stride") {
  IntegratorSettings st;
  st.t_end = 3.0;
  st.sample_dt = 0.1;
  const auto rec = integrate(Wavefunction(entangled(2.5)), 0.1, 0.4, st);
  REQUIRE(rec.samples.size() == st.sample_count());
  for (std::size_t k = 0; k < rec.samples.size(); ++k) CHECK(rec.samples[k].t == static_cast<double>(k) * 0.1);
  CHECK(rec.samples.front().x == 0.1);
}

TEST_CASE("chunked and resumed runs are bit-exact") {
  const Wavefunction wf(entangled(2.5));
  IntegratorSettings st;
  st.t_end = 40.0;
  const auto whole = integrate(wf, 3.0, 0.0, st);

  std::vector<Sample> pieces;
  TrajectoryRunner first(wf, 3.0, 0.0, st);
  first.advance_to(13.37, [&](const Sample& s) { pieces.push_back(s); });
  const auto cp = first.checkpoint();
  TrajectoryRunner second(wf, 3.0, 0.0, st);
  second.restore(cp);
  second.advance_to(25.0, [&](const Sample& s) { pieces.push_back(s); });
  second.run([&](const Sample& s) { pieces.push_back(s); });
  CHECK(second.finished());
  CHECK(pieces == whole.samples);
  CHECK(second.diagnostics().accepted_steps == whole.diagnostics.accepted_steps);
}

TEST_CASE("initial point outside the safety box is rejected") {
  IntegratorSettings st;
  CHECK_THROWS_AS(TrajectoryRunner(Wavefunction(entangled(2.5)), 60.0, 0.0, st), SpecError);
  const auto rec = integrate_isolated(Wavefunction(entangled(2.5)), {60.0, 0.0}, st);
  CHECK(rec.status == TrajectoryStatus::out_of_box);
  CHECK(rec.samples.empty());
}

TEST_CASE("ensembles equal the serial reference and follow input order") {
  const Wavefunction wf(entangled(2.5));
  IntegratorSettings st;
  st.t_end = 10.0;
  std::vector<Point2> pts{{0.1, 0.4}, {3.0, 0.0}, {-1.0, 1.5}, {60.0, 0.0}};
  const auto par = integrate_ensemble(wf, pts, st);
  const auto ser = serial::integrate_ensemble(wf, pts, st);
  REQUIRE(par.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(par[i].samples == ser[i].samples);
    CHECK(par[i].status == ser[i].status);
  }
  CHECK(par[3].status == TrajectoryStatus::out_of_box);
  CHECK(par[1].samples == integrate(wf, 3.0, 0.0, st).samples);

  std::vector<Point2> rev(pts.rbegin(), pts.rend());
  const auto back = integrate_ensemble(wf, rev, st);
  for (std::size_t i = 0; i < 4; ++i) CHECK(back[i].samples == par[3 - i].samples);
  const std::vector<Point2> one{{-1.0, 1.5}};
  CHECK(integrate_ensemble(wf, one, st)[0].samples == par[2].samples);
}

TEST_CASE("Lyapunov estimates") {
  IntegratorSettings st;
  st.t_end = 200.0;
  SUBCASE("product state decays inside the ordered envelope") {
    const auto est = lyapunov(Wavefunction(product(2.5)), 0.5, -0.3, st);
    REQUIRE(est.status == TrajectoryStatus::completed);
    REQUIRE(!est.lcn_series.empty());
    for (const auto& [t, l] : est.lcn_series) {
      if (t >= 10.0) CHECK(std::abs(l) < 10.0 / t);
    }
    CHECK(est.lcn_series.back().first == doctest::Approx(200.0));
  }
  SUBCASE("chaotic start leaves the ordered envelope") {
    st.t_end = 1e4;
    const auto est = lyapunov(Wavefunction(entangled(2.5)), 3.0, 0.0, st);
    CHECK_FALSE(is_ordered(est, st.t_end));
    CHECK(est.final_lcn > 10.0 * 5.0 / st.t_end);
  }
  SUBCASE("invalid interval") {
    CHECK_THROWS_AS(lyapunov(Wavefunction(product(2.5)), 0.5, -0.3, st, 0.0), SpecError);
  }
}
