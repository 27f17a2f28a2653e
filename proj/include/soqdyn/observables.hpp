#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "soqdyn/qprop.hpp"

namespace soqdyn {

struct BlochVector {
  double rx = 0.0;
  double ry = 0.0;
  double rz = 0.0;
  double norm() const { return std::sqrt(rx * rx + ry * ry + rz * rz); }
};

/// Pseudo-spin expectation values. Full model: direct spinor bilinears
/// (space-independent). Adiabatic model: quadratures of (cos phi, sin phi)
/// against the momentum density, with R_z = 0 exactly; the Dirac-point node
/// is skipped (measure zero).
inline BlochVector bloch_vector(const QuantumState& st) {
  BlochVector r;
  if (st.mode() == Mode::Full) {
    const SpinorField& f = st.spinor();
    const double area = f.grid().cell_area(f.space());
    double sx = 0.0, sy = 0.0, sz = 0.0;
    const auto& u = f.up.values();
    const auto& d = f.down.values();
    for (std::size_t i = 0; i < u.size(); ++i) {
      const Complex ud = std::conj(u[i]) * d[i];
      sx += ud.real();
      sy += ud.imag();
      sz += std::norm(u[i]) - std::norm(d[i]);
    }
    r.rx = 2.0 * sx * area;
    r.ry = 2.0 * sy * area;
    r.rz = sz * area;
    return r;
  }
  const ScalarField phi = st.space() == Space::Momentum
                              ? st.scalar()
                              : transform(st.scalar(), Transform::ToMomentum);
  const Grid2D& g = phi.grid();
  const double area = g.cell_area(Space::Momentum);
  for (int i = 0; i < g.n(); ++i)
    for (int j = 0; j < g.n(); ++j) {
      const double px = g.p(i), py = g.p(j);
      if (zeeman_mag(st.params, px, py) == 0.0) continue;
      const double a = std::atan2(st.params.vy * py, st.params.vx * px);
      const double w = std::norm(phi.values()[g.idx(i, j)]);
      r.rx += w * std::cos(a);
      r.ry += w * std::sin(a);
    }
  r.rx *= area;
  r.ry *= area;
  r.rz = 0.0;
  return r;
}

/// Crude sharply-localized-packet approximation R = (vx px, vy py)/|B| at
/// the mean momentum.
inline BlochVector bloch_approx(const ModelParams& m, double mean_px, double mean_py) {
  const double b = zeeman_mag(m, mean_px, mean_py);
  if (b == 0.0)
    throw std::invalid_argument("bloch_approx: undefined at the Dirac point");
  return {m.vx * mean_px / b, m.vy * mean_py / b, 0.0};
}

/// Per-snapshot record. dx..dpy are standard deviations (the phase-space
/// areas Dx = dx*dpx, Dy = dy*dpy would otherwise not have area units).
struct MomentRecord {
  double t = 0.0;
  double mean_x = 0.0, mean_y = 0.0, mean_px = 0.0, mean_py = 0.0;
  double std_x = 0.0, std_y = 0.0, std_px = 0.0, std_py = 0.0;
  double area_x = 0.0;  // std_x * std_px
  double area_y = 0.0;
  double energy = 0.0;
  BlochVector bloch;
};

namespace detail {

struct AxisMoments {
  double mx = 0.0, my = 0.0, sx = 0.0, sy = 0.0;
};

inline AxisMoments grid_moments(const Grid2D& g, Space space,
                                const std::vector<double>& rho) {
  const auto& ax = space == Space::Position ? g.xs() : g.ps();
  double mass = 0.0, mx = 0.0, my = 0.0, xx = 0.0, yy = 0.0;
  for (int i = 0; i < g.n(); ++i)
    for (int j = 0; j < g.n(); ++j) {
      const double w = rho[g.idx(i, j)];
      mass += w;
      mx += w * ax[i];
      my += w * ax[j];
      xx += w * ax[i] * ax[i];
      yy += w * ax[j] * ax[j];
    }
  AxisMoments m;
  if (mass <= 0.0) return m;
  m.mx = mx / mass;
  m.my = my / mass;
  m.sx = std::sqrt(std::max(0.0, xx / mass - m.mx * m.mx));
  m.sy = std::sqrt(std::max(0.0, yy / mass - m.my * m.my));
  return m;
}

}  // namespace detail

/// Grid quadratures in both spaces plus the spectral energy (trap term in
/// position space, kinetic + SO in momentum space).
inline MomentRecord moments(const QuantumState& st) {
  if (st.space() != Space::Position)
    throw std::invalid_argument("moments: position-space state expected");
  const Grid2D& g = st.grid();
  MomentRecord rec;
  rec.t = st.t;

  const std::vector<double> rho_pos =
      st.mode() == Mode::Full ? st.spinor().density() : st.scalar().density();
  const auto pm = detail::grid_moments(g, Space::Position, rho_pos);
  rec.mean_x = pm.mx;
  rec.mean_y = pm.my;
  rec.std_x = pm.sx;
  rec.std_y = pm.sy;

  QuantumState mom_state = st;
  if (st.mode() == Mode::Full)
    mom_state.field = transform(st.spinor(), Transform::ToMomentum);
  else
    mom_state.field = transform(st.scalar(), Transform::ToMomentum);
  const std::vector<double> rho_mom = st.mode() == Mode::Full
                                          ? mom_state.spinor().density()
                                          : mom_state.scalar().density();
  const auto mm = detail::grid_moments(g, Space::Momentum, rho_mom);
  rec.mean_px = mm.mx;
  rec.mean_py = mm.my;
  rec.std_px = mm.sx;
  rec.std_py = mm.sy;
  rec.area_x = rec.std_x * rec.std_px;
  rec.area_y = rec.std_y * rec.std_py;

  rec.energy = detail::energy_expectation(st, 0.0, 0.0);
  rec.bloch = bloch_vector(mom_state);
  return rec;
}

/// |psi(x, y=0)| along the y = 0 grid row (spinor: root of the summed
/// component densities).
inline std::vector<double> density_slice(const QuantumState& st) {
  if (st.space() != Space::Position)
    throw std::invalid_argument("density_slice: position-space state expected");
  const Grid2D& g = st.grid();
  const int iy = g.n() / 2;  // x_i = 0 at i = n/2
  std::vector<double> slice(g.n());
  if (st.mode() == Mode::Full) {
    const SpinorField& f = st.spinor();
    for (int ix = 0; ix < g.n(); ++ix)
      slice[ix] = std::sqrt(std::norm(f.up.values()[g.idx(ix, iy)]) +
                            std::norm(f.down.values()[g.idx(ix, iy)]));
  } else {
    const ScalarField& f = st.scalar();
    for (int ix = 0; ix < g.n(); ++ix) slice[ix] = std::abs(f.values()[g.idx(ix, iy)]);
  }
  return slice;
}

/// Local maxima whose topographic prominence is at least
/// prominence_frac * max(values).
inline int count_peaks(const std::vector<double>& v, double prominence_frac = 0.05) {
  const int n = static_cast<int>(v.size());
  if (n < 3) return 0;
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, x);
  const double need = prominence_frac * vmax;
  int count = 0;
  for (int i = 1; i + 1 < n; ++i) {
    if (!(v[i] > v[i - 1] && v[i] > v[i + 1])) continue;
    double min_l = v[i];
    for (int j = i - 1; j >= 0; --j) {
      if (v[j] > v[i]) break;
      min_l = std::min(min_l, v[j]);
    }
    double min_r = v[i];
    for (int j = i + 1; j < n; ++j) {
      if (v[j] > v[i]) break;
      min_r = std::min(min_r, v[j]);
    }
    const double prominence = v[i] - std::max(min_l, min_r);
    if (prominence >= need) ++count;
  }
  return count;
}

// ---------------------------------------------------------------------------
// CSV stream: t mx my mpx mpy dx dy dpx dpy Dx Dy E Rx Ry Rz

inline std::string moment_csv_header() {
  return "t mx my mpx mpy dx dy dpx dpy Dx Dy E Rx Ry Rz";
}

inline std::string moment_csv_row(const MomentRecord& r) {
  char line[512];
  std::snprintf(line, sizeof(line),
                "%.12g %.12g %.12g %.12g %.12g %.12g %.12g %.12g %.12g %.12g %.12g "
                "%.12g %.12g %.12g %.12g",
                r.t, r.mean_x, r.mean_y, r.mean_px, r.mean_py, r.std_x, r.std_y,
                r.std_px, r.std_py, r.area_x, r.area_y, r.energy, r.bloch.rx,
                r.bloch.ry, r.bloch.rz);
  return line;
}

inline void write_moments_csv(const std::string& path,
                              const std::vector<MomentRecord>& recs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_moments_csv: cannot open " + path);
  out << moment_csv_header() << "\n";
  for (const auto& r : recs) out << moment_csv_row(r) << "\n";
}

}  // namespace soqdyn
