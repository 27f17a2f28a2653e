#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "soqdyn/classical.hpp"
#include "soqdyn/model.hpp"
#include "soqdyn/rng.hpp"

using namespace soqdyn;
using Catch::Approx;

namespace {
const ModelParams kAniso{20.0, 30.0, 0.0, 0.0, 1.0};
const ModelParams kIso{30.0, 30.0, 0.0, 0.0, 1.0};
}  // namespace

TEST_CASE("dispersion branch values") {
  CHECK(dispersion(kAniso, 1, 0.0, 0.0) == 0.0);
  CHECK(dispersion(kAniso, -1, 0.0, 0.0) == 0.0);
  CHECK(dispersion(kAniso, -1, 0.0, 30.0) == Approx(-450.0));
  CHECK(dispersion(kAniso, -1, 20.0, 0.0) == Approx(-200.0));
  CHECK(adiabatic_potential(kAniso, -1, 0.0, 30.0) == Approx(-450.0));

  SplitMix64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const double px = rng.uniform(-40, 40), py = rng.uniform(-40, 40);
    CHECK(dispersion(kAniso, 1, px, py) - dispersion(kAniso, -1, px, py) ==
          Approx(2.0 * zeeman_mag(kAniso, px, py)));
  }
}

TEST_CASE("spinor eigenstate phase convention") {
  // phi = 0: lower band is (1, 1)/sqrt(2) with <sigma_x> = +1.
  auto s = spinor_eigenstate(kAniso, -1, 5.0, 0.0);
  CHECK(s[0].real() == Approx(1.0 / std::sqrt(2.0)));
  CHECK(s[0].imag() == Approx(0.0).margin(1e-15));
  CHECK(s[1].real() == Approx(1.0 / std::sqrt(2.0)));

  auto sigma_xy = [](const std::array<Complex, 2>& chi) {
    const Complex ud = std::conj(chi[0]) * chi[1];
    return std::pair{2.0 * ud.real(), 2.0 * ud.imag()};
  };
  auto [sx, sy] = sigma_xy(s);
  CHECK(sx == Approx(1.0));
  CHECK(sy == Approx(0.0).margin(1e-15));

  // phi = pi/2: <sigma_y> = +1 in the lower band.
  auto s2 = spinor_eigenstate(kAniso, -1, 0.0, 4.0);
  auto [sx2, sy2] = sigma_xy(s2);
  CHECK(sx2 == Approx(0.0).margin(1e-15));
  CHECK(sy2 == Approx(1.0));

  CHECK_THROWS_AS(spinor_eigenstate(kAniso, -1, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("spinor eigenstates: orthogonality, unit norm, sigma expectation") {
  SplitMix64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double px = rng.uniform(-40, 40), py = rng.uniform(-40, 40);
    if (zeeman_mag(kAniso, px, py) == 0.0) continue;
    const auto up = spinor_eigenstate(kAniso, 1, px, py);
    const auto dn = spinor_eigenstate(kAniso, -1, px, py);
    const Complex overlap = std::conj(up[0]) * dn[0] + std::conj(up[1]) * dn[1];
    CHECK(std::abs(overlap) < 1e-14);
    CHECK(std::norm(up[0]) + std::norm(up[1]) == Approx(1.0));

    // <sigma_x> + i <sigma_y> = -mu e^{i phi}
    const double phi = std::atan2(kAniso.vy * py, kAniso.vx * px);
    for (int mu : {-1, 1}) {
      const auto chi = mu == 1 ? up : dn;
      const Complex ud = std::conj(chi[0]) * chi[1];
      CHECK(2.0 * ud.real() == Approx(-mu * std::cos(phi)).margin(1e-12));
      CHECK(2.0 * ud.imag() == Approx(-mu * std::sin(phi)).margin(1e-12));
    }
  }
}

TEST_CASE("spinor eigenstate diagonalizes the implemented spin kernel") {
  // The spin term is implemented as -B.sigma, under which the mu spinor has
  // spin energy mu |B|, consistent with the branch energies p^2/2 + mu |B|.
  SplitMix64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    const double px = rng.uniform(-30, 30), py = rng.uniform(-30, 30);
    const double b = zeeman_mag(kAniso, px, py);
    if (b == 0.0) continue;
    const Complex bx{kAniso.vx * px, 0.0};
    const Complex off{kAniso.vx * px, -kAniso.vy * py};  // (B.sigma)_{12}
    for (int mu : {-1, 1}) {
      const auto chi = spinor_eigenstate(kAniso, mu, px, py);
      // kernel K = -B.sigma acting on chi
      const Complex k0 = -(off * chi[1]);
      const Complex k1 = -(std::conj(off) * chi[0]);
      CHECK(std::abs(k0 - double(mu) * b * chi[0]) < 1e-9 * b);
      CHECK(std::abs(k1 - double(mu) * b * chi[1]) < 1e-9 * b);
    }
    (void)bx;
  }
}

TEST_CASE("nonadiabatic scale") {
  // isotropic: v^4 r^2 / (v^2 r^2)^2 = 1/r^2
  for (double r : {0.5, 2.0, 7.0}) {
    const double val = nonadiabatic_scale(kIso, r / std::sqrt(2.0), r / std::sqrt(2.0));
    CHECK(val == Approx(1.0 / (r * r)));
  }
  CHECK(nonadiabatic_scale(kAniso, 1.0, 1.0) == Approx(720000.0 / 1690000.0));
  CHECK(nonadiabatic_scale(kAniso, 1e4, 1e4) < 1e-6);
  CHECK_THROWS_AS(nonadiabatic_scale(kAniso, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("classical fixed points by regime") {
  const auto iso = classical_fixed_points(kIso);
  REQUIRE(iso.points.size() == 1);
  CHECK(iso.points[0].kind == Stability::Unstable);
  REQUIRE(iso.ring.has_value());
  CHECK(iso.ring->radius == Approx(30.0));

  const auto aniso = classical_fixed_points(kAniso);
  CHECK_FALSE(aniso.ring.has_value());
  REQUIRE(aniso.points.size() == 5);
  int stable = 0, unstable = 0;
  for (const auto& fp : aniso.points) {
    if (fp.kind == Stability::Stable) {
      ++stable;
      CHECK(fp.px == 0.0);
      CHECK(std::abs(fp.py) == Approx(30.0));
    } else {
      ++unstable;
      CHECK(fp.py == 0.0);
      CHECK((fp.px == 0.0 || std::abs(fp.px) == Approx(20.0)));
    }
  }
  CHECK(stable == 2);
  CHECK(unstable == 3);

  const auto swapped = classical_fixed_points(ModelParams{30.0, 20.0, 0, 0, 1});
  int stable_sw = 0;
  for (const auto& fp : swapped.points)
    if (fp.kind == Stability::Stable) {
      ++stable_sw;
      CHECK(std::abs(fp.px) == Approx(30.0));
      CHECK(fp.py == 0.0);
    }
  CHECK(stable_sw == 2);

  const auto free = classical_fixed_points(ModelParams{0, 0, 0, 0, 1});
  REQUIRE(free.points.size() == 1);
  CHECK(free.points[0].kind == Stability::Stable);
}

TEST_CASE("fixed points are equilibria of the flow and match FD stability") {
  for (const ModelParams& m : {kIso, kAniso}) {
    const auto set = classical_fixed_points(m);
    for (const auto& fp : set.points) {
      const classical::PhasePoint z{0.0, 0.0, fp.px, fp.py};
      const classical::PhasePoint d = classical::eom_rhs(m, z);
      const double mag = std::sqrt(d.x * d.x + d.y * d.y + d.px * d.px + d.py * d.py);
      CHECK(mag < 1e-12);

      // Finite-difference linearization; the cusp at p = 0 shows up as a
      // divergent restoring coefficient with real (unstable) eigenvalues.
      const double eps = 1e-6;
      auto fd = [&](int k) {
        classical::PhasePoint zp = z, zm = z;
        double* fields_p[4] = {&zp.x, &zp.y, &zp.px, &zp.py};
        double* fields_m[4] = {&zm.x, &zm.y, &zm.px, &zm.py};
        *fields_p[k] += eps;
        *fields_m[k] -= eps;
        const auto rp = classical::eom_rhs(m, zp);
        const auto rm = classical::eom_rhs(m, zm);
        return std::array<double, 4>{(rp.x - rm.x) / (2 * eps), (rp.y - rm.y) / (2 * eps),
                                     (rp.px - rm.px) / (2 * eps),
                                     (rp.py - rm.py) / (2 * eps)};
      };
      // x-block frequency^2 = -d(xdot)/dpx * d(pxdot)/dx etc.; stable needs
      // both oscillator blocks positive.
      const auto dpx = fd(2);
      const auto dpy = fd(3);
      const bool stable_fd = dpx[0] > 0.0 && dpy[1] > 0.0;
      CHECK(stable_fd == (fp.kind == Stability::Stable));
    }
  }
}

TEST_CASE("accessible region: isotropic paper case") {
  const auto r = accessible_region(kIso, -192.0);
  CHECK(r.position_radius2 == Approx(516.0));
  REQUIRE(r.isotropic);
  CHECK(r.annulus_inner == Approx(7.2842).epsilon(1e-4));
  CHECK(r.annulus_outer == Approx(52.7158).epsilon(1e-4));

  CHECK(r.contains_momentum(0.0, 30.0));
  CHECK(r.contains_momentum(0.0, 52.0));
  CHECK_FALSE(r.contains_momentum(0.0, 53.5));
  CHECK_FALSE(r.contains_momentum(0.0, 5.0));
  CHECK(r.contains_position(10.0, 10.0));
  CHECK_FALSE(r.contains_position(20.0, 20.0));
}

TEST_CASE("accessible region: collapse, harmonic limit, errors") {
  const auto shell = accessible_region(kIso, -450.0);
  CHECK(shell.annulus_inner == Approx(30.0));
  CHECK(shell.annulus_outer == Approx(30.0));
  CHECK_THROWS_AS(accessible_region(kIso, -450.1), std::invalid_argument);

  const auto free = accessible_region(ModelParams{0, 0, 0, 0, 1}, 8.0);
  CHECK(free.position_radius2 == Approx(16.0));
  CHECK(free.px_axis.hi == Approx(4.0));
  CHECK(free.py_axis.hi == Approx(4.0));
  CHECK(free.px_abs_max == Approx(4.0));
}

TEST_CASE("accessible region: anisotropic per-axis and global bounds") {
  const auto r = accessible_region(kAniso, -88.0);
  CHECK(r.py_axis.exists);
  CHECK(r.py_axis.lo == Approx(30.0 - std::sqrt(900.0 - 176.0)));
  CHECK(r.py_axis.hi == Approx(30.0 + std::sqrt(900.0 - 176.0)));
  CHECK(r.px_axis.exists);
  CHECK(r.px_axis.hi == Approx(20.0 + std::sqrt(400.0 - 176.0)));
  CHECK(r.py_abs_max == Approx(r.py_axis.hi));
  // Global px bound exceeds the on-axis cut (off-axis ridge |B| = vy^2).
  CHECK(r.px_abs_max == Approx(std::sqrt(724.0 * 900.0 / 500.0)));
  CHECK(r.px_abs_max > r.px_axis.hi);

  // E = -250: the momentum region no longer meets the px axis, yet extends
  // to finite px off axis.
  const auto deep = accessible_region(kAniso, -250.0);
  CHECK_FALSE(deep.px_axis.exists);
  CHECK(deep.px_abs_max == Approx(std::sqrt(400.0 * 900.0 / 500.0)));

  // Numeric cross-check of the global bounds by scanning the region.
  for (const auto& reg : {r, deep}) {
    double px_seen = 0.0, py_seen = 0.0;
    for (double px = 0.0; px < 60.0; px += 0.01)
      for (double py = 0.0; py < 60.0; py += 0.25)
        if (reg.contains_momentum(px, py)) {
          px_seen = std::max(px_seen, px);
          py_seen = std::max(py_seen, py);
        }
    CHECK(px_seen <= reg.px_abs_max + 0.02);
    CHECK(px_seen >= reg.px_abs_max - 0.05);
    CHECK(py_seen <= reg.py_abs_max + 0.3);
  }
}
