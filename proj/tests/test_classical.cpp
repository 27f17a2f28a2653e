#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "soqdyn/classical.hpp"
#include "soqdyn/rng.hpp"

using namespace soqdyn;
using namespace soqdyn::classical;
using Catch::Approx;

namespace {
const ModelParams kAniso{20.0, 30.0, 0.0, 0.0, 1.0};
const ModelParams kIso{30.0, 30.0, 0.0, 0.0, 1.0};
const ModelParams kFree{0.0, 0.0, 0.0, 0.0, 1.0};
}  // namespace

TEST_CASE("equations of motion") {
  const PhasePoint fp{0.0, 0.0, 0.0, 30.0};
  const PhasePoint d0 = eom_rhs(kAniso, fp);
  CHECK(std::abs(d0.x) + std::abs(d0.y) + std::abs(d0.px) + std::abs(d0.py) < 1e-14);

  const PhasePoint z{1.0, 2.0, 3.0, 4.0};
  const PhasePoint dh = eom_rhs(kFree, z);
  CHECK(dh.x == 3.0);
  CHECK(dh.y == 4.0);
  CHECK(dh.px == -1.0);
  CHECK(dh.py == -2.0);

  const PhasePoint d = eom_rhs(kAniso, {0.0, 0.0, 10.0, 0.0});
  CHECK(d.x == Approx(-10.0));
  CHECK(d.px == 0.0);
}

TEST_CASE("analytic Jacobian matches finite differences") {
  SplitMix64 rng(5);
  double max_err = 0.0;
  int checked = 0;
  while (checked < 1000) {
    const PhasePoint z{rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-40, 40),
                       rng.uniform(-40, 40)};
    if (zeeman_mag(kAniso, z.px, z.py) < 1.0) continue;  // cusp region excluded
    ++checked;
    const auto j = eom_jacobian(kAniso, z);
    const double eps = 1e-6;
    for (int c = 0; c < 4; ++c) {
      PhasePoint zp = z, zm = z;
      double* fp[4] = {&zp.x, &zp.y, &zp.px, &zp.py};
      double* fm[4] = {&zm.x, &zm.y, &zm.px, &zm.py};
      *fp[c] += eps;
      *fm[c] -= eps;
      const PhasePoint rp = eom_rhs(kAniso, zp), rm = eom_rhs(kAniso, zm);
      const double fd[4] = {(rp.x - rm.x) / (2 * eps), (rp.y - rm.y) / (2 * eps),
                            (rp.px - rm.px) / (2 * eps), (rp.py - rm.py) / (2 * eps)};
      for (int r = 0; r < 4; ++r) max_err = std::max(max_err, std::abs(j[r][c] - fd[r]));
    }
  }
  CHECK(max_err < 1e-6);
}

TEST_CASE("harmonic trajectory matches the analytic solution") {
  const double tf = 20.0 * std::numbers::pi;
  const Trajectory tr = integrate(kFree, {1.0, 0.0, 0.0, 0.0}, tf, 1e-12, 0.25);
  double max_err = 0.0;
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    max_err = std::max(max_err, std::abs(tr.z[i].x - std::cos(tr.t[i])));
    max_err = std::max(max_err, std::abs(tr.z[i].px + std::sin(tr.t[i])));
  }
  CHECK(max_err < 1e-8);
  CHECK(tr.t.front() == 0.0);
  CHECK(tr.t.back() == tf);
}

TEST_CASE("energy conservation across random shells and parameters") {
  SplitMix64 rng(17);
  for (int rep = 0; rep < 12; ++rep) {
    const double va = rng.uniform(5, 30);
    const double vb = rng.uniform(5, 30);
    const ModelParams m{va, vb, 0, 0, 1.0};
    const double vmax = std::max(va, vb);
    const double e0 = rng.uniform(-0.45 * vmax * vmax, 50.0);
    const auto seeds = sample_energy_shell(m, e0, 2, 1000 + rep);
    for (const auto& z : seeds) {
      const Trajectory tr = integrate(m, z, 200.0, 1e-10, 1.0);
      double worst = 0.0;
      for (const auto& p : tr.z)
        worst = std::max(worst, std::abs(energy(m, p) - tr.energy0));
      CHECK(worst <= 1e-6 * std::max(1.0, std::abs(tr.energy0)));
    }
  }
}

TEST_CASE("isotropic coupling conserves angular momentum") {
  const auto seeds = sample_energy_shell(kIso, -192.0, 3, 99);
  for (const auto& z0 : seeds) {
    const double l0 = z0.x * z0.py - z0.y * z0.px;
    const Trajectory tr = integrate(kIso, z0, 500.0, 1e-10, 2.0);
    for (const auto& z : tr.z) {
      const double l = z.x * z.py - z.y * z.px;
      CHECK(std::abs(l - l0) < 1e-6 * std::max(1.0, std::abs(l0)));
    }
  }
}

TEST_CASE("dense output interpolates to high order") {
  using Rhs = void (*)(double, const State<2>&, State<2>&);
  Dopri5<2, Rhs> ode(
      [](double, const State<2>& y, State<2>& d) {
        d[0] = y[1];
        d[1] = -y[0];
      },
      1e-10, 1e-10);
  ode.init(0.0, {1.0, 0.0});
  double max_err = 0.0;
  ode.integrate_to(10.0, [&](const Dopri5<2, Rhs>& s) {
    for (int k = 1; k < 5; ++k) {
      const double t = s.t_prev() + (s.t() - s.t_prev()) * k / 5.0;
      const auto y = s.dense_at(t);
      max_err = std::max(max_err, std::abs(y[0] - std::cos(t)));
      max_err = std::max(max_err, std::abs(y[1] + std::sin(t)));
    }
  });
  CHECK(max_err < 1e-9);
}

TEST_CASE("time reversal on a regular trajectory") {
  const auto seeds = sample_energy_shell(kIso, -192.0, 1, 4);
  const PhasePoint z0 = seeds[0];
  const Trajectory fwd = integrate(kIso, z0, 50.0, 1e-12, 50.0);
  PhasePoint zr = fwd.z.back();
  zr.px = -zr.px;
  zr.py = -zr.py;
  const Trajectory bwd = integrate(kIso, zr, 50.0, 1e-12, 50.0);
  const PhasePoint back = bwd.z.back();
  CHECK(std::abs(back.x - z0.x) < 1e-5);
  CHECK(std::abs(back.y - z0.y) < 1e-5);
  CHECK(std::abs(back.px + z0.px) < 1e-5);
  CHECK(std::abs(back.py + z0.py) < 1e-5);
}

TEST_CASE("integrator rejects non-finite input") {
  CHECK_THROWS(integrate(kIso, {std::nan(""), 0, 0, 30.0}, 1.0, 1e-10));
}

TEST_CASE("poincare: harmonic sections collapse to at most two points") {
  const PhasePoint z0{1.0, 0.7, 0.3, 0.5};
  const auto sections = poincare_section(kFree, {z0}, SectionPlane::PyZero, 200.0);
  REQUIRE(sections.size() == 1);
  CHECK(sections[0].size() > 20);
  std::vector<std::pair<double, double>> uniq;
  for (const auto& p : sections[0]) {
    bool found = false;
    for (auto& u : uniq)
      if (std::hypot(u.first - p.x, u.second - p.px) < 1e-6) found = true;
    if (!found) uniq.emplace_back(p.x, p.px);
  }
  CHECK(uniq.size() <= 2);
  for (const auto& p : sections[0]) {
    CHECK(p.plane == SectionPlane::PyZero);
    CHECK((p.sign == 1 || p.sign == -1));
  }
}

TEST_CASE("poincare: isotropic shell crossings land on closed curves") {
  const auto seeds = sample_energy_shell(kIso, -192.0, 6, 21);
  const auto sections = poincare_section(kIso, seeds, SectionPlane::PyZero, 500.0);
  int tested = 0;
  for (const auto& per_seed : sections) {
    for (int sign : {1, -1}) {
      const auto xy = section_coords(per_seed, sign);
      if (xy.size() < 12) continue;
      const CurveTest ct = closed_curve_test(xy);
      INFO("points " << xy.size() << " residual " << ct.residual << " diameter "
                     << ct.diameter);
      CHECK(ct.closed);
      ++tested;
    }
  }
  CHECK(tested >= 6);
}

TEST_CASE("poincare: seeds off the shell are rejected") {
  auto seeds = sample_energy_shell(kIso, -192.0, 2, 22);
  seeds[1].x += 0.5;
  CHECK_THROWS_AS(poincare_section(kIso, seeds, SectionPlane::PyZero, 10.0),
                  std::invalid_argument);
}

TEST_CASE("closed-curve statistic separates curves from scatter") {
  std::vector<std::pair<double, double>> ellipse;
  for (int k = 0; k < 200; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 200.0;
    ellipse.emplace_back(3.0 * std::cos(a), 1.0 * std::sin(a));
  }
  CHECK(closed_curve_test(ellipse).closed);

  SplitMix64 rng(8);
  std::vector<std::pair<double, double>> blob;
  for (int k = 0; k < 200; ++k) blob.emplace_back(rng.uniform(-3, 3), rng.uniform(-1, 1));
  CHECK_FALSE(closed_curve_test(blob).closed);
}

TEST_CASE("lyapunov: integrable cases give zero exponent") {
  const LyapunovResult free_l = max_lyapunov(kFree, {1.0, 0.5, 0.2, 0.1}, 300.0, 0.5);
  CHECK(std::abs(free_l.lambda) < 1e-3);

  const auto seeds = sample_energy_shell(kIso, -192.0, 1, 31);
  const LyapunovResult iso_l = max_lyapunov(kIso, seeds[0], 400.0, 0.5);
  CHECK(std::abs(iso_l.lambda) < 0.02);
}

TEST_CASE("shell sampler lands on the shell and is deterministic") {
  for (double e0 : {-192.0, -88.0}) {
    const auto seeds = sample_energy_shell(kAniso, e0, 18, 77);
    REQUIRE(seeds.size() == 18);
    for (const auto& z : seeds)
      CHECK(std::abs(energy(kAniso, z) - e0) <= 1e-9 * std::abs(e0));
  }
  const auto a = sample_energy_shell(kAniso, -88.0, 5, 123);
  const auto b = sample_energy_shell(kAniso, -88.0, 5, 123);
  for (int i = 0; i < 5; ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].py == b[i].py);
  }
}

TEST_CASE("section export format") {
  const auto seeds = sample_energy_shell(kIso, -192.0, 1, 2);
  const auto sections = poincare_section(kIso, seeds, SectionPlane::YZero, 30.0);
  const std::string path =
      (std::filesystem::temp_directory_path() / "soqdyn_section_test.txt").string();
  write_section(path, sections);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "# t x p_x sign seed_index");
  double t, x, px;
  int sign, seed;
  int rows = 0;
  while (in >> t >> x >> px >> sign >> seed) {
    ++rows;
    CHECK((sign == 1 || sign == -1));
    CHECK(seed == 0);
  }
  CHECK(rows == static_cast<int>(sections[0].size()));
  std::filesystem::remove(path);
}
