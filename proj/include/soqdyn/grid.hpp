#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "soqdyn/fft.hpp"

namespace soqdyn {

using Complex = std::complex<double>;

enum class Space { Position, Momentum };

/// Square spectral grid with an adjustable dimensionless Planck constant h.
/// Position axis: x_i = -extent_x + i*dx. Momentum axis: p = h*k with k the
/// discrete wavenumbers of the n-point periodic box, stored in monotone
/// order p_j = (j - n/2)*dp, dp = 2*pi*h/(n*dx). Immutable once built.
class Grid2D {
 public:
  Grid2D(int n, double extent_x, double h)
      : n_(n), extent_x_(extent_x), h_(h) {
    if (n < 8 || !std::has_single_bit(static_cast<unsigned>(n)))
      throw std::invalid_argument("grid: n must be a power of two, n >= 8");
    if (!(extent_x > 0.0) || !std::isfinite(extent_x))
      throw std::invalid_argument("grid: extent_x must be positive");
    if (!(h > 0.0) || !std::isfinite(h))
      throw std::invalid_argument("grid: h must be positive");
    dx_ = 2.0 * extent_x_ / n_;
    dp_ = 2.0 * std::numbers::pi * h_ / (n_ * dx_);
    xs_.resize(n_);
    ps_.resize(n_);
    for (int i = 0; i < n_; ++i) {
      xs_[i] = -extent_x_ + i * dx_;
      ps_[i] = (i - n_ / 2) * dp_;
    }
  }

  int n() const { return n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
  double extent_x() const { return extent_x_; }
  double extent_p() const { return h_ * std::numbers::pi / dx_; }
  double dx() const { return dx_; }
  double dp() const { return dp_; }
  double h() const { return h_; }

  double x(int i) const { return xs_[i]; }
  double p(int i) const { return ps_[i]; }
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ps() const { return ps_; }

  /// Momentum at a raw FFT-order index (propagator kick tables).
  double p_fft(int j) const {
    const int m = j < n_ / 2 ? j : j - n_;
    return m * dp_;
  }

  /// Row-major, y-fastest.
  std::size_t idx(int ix, int iy) const {
    return static_cast<std::size_t>(ix) * n_ + iy;
  }

  double cell_area(Space s) const { return s == Space::Position ? dx_ * dx_ : dp_ * dp_; }

  bool operator==(const Grid2D& o) const {
    return n_ == o.n_ && extent_x_ == o.extent_x_ && h_ == o.h_;
  }

 private:
  int n_;
  double extent_x_, h_, dx_, dp_;
  std::vector<double> xs_, ps_;
};

using GridPtr = std::shared_ptr<const Grid2D>;

inline GridPtr make_grid(int n, double extent_x, double h) {
  return std::make_shared<const Grid2D>(n, extent_x, h);
}

/// One complex amplitude per grid point. Momentum-space fields use the
/// monotone momentum axis ordering.
class ScalarField {
 public:
  ScalarField(GridPtr grid, Space space)
      : grid_(std::move(grid)), space_(space), v_(grid_->size(), Complex{}) {}

  static ScalarField from_fn(GridPtr grid, Space space,
                             const std::function<Complex(double, double)>& f) {
    ScalarField out(std::move(grid), space);
    const Grid2D& g = *out.grid_;
    const auto& ax = space == Space::Position ? g.xs() : g.ps();
    for (int ix = 0; ix < g.n(); ++ix)
      for (int iy = 0; iy < g.n(); ++iy)
        out.v_[g.idx(ix, iy)] = f(ax[ix], ax[iy]);
    return out;
  }

  const Grid2D& grid() const { return *grid_; }
  GridPtr grid_ptr() const { return grid_; }
  Space space() const { return space_; }

  Complex& at(int ix, int iy) { return v_[grid_->idx(ix, iy)]; }
  const Complex& at(int ix, int iy) const { return v_[grid_->idx(ix, iy)]; }
  std::vector<Complex>& values() { return v_; }
  const std::vector<Complex>& values() const { return v_; }

  double norm2() const {
    double acc = 0.0;
    for (const Complex& c : v_) acc += std::norm(c);
    return acc * grid_->cell_area(space_);
  }

  void scale(double s) {
    for (Complex& c : v_) c *= s;
  }

  void normalize() {
    const double nrm = norm2();
    if (!(nrm > 0.0)) throw std::runtime_error("cannot normalize a null field");
    scale(1.0 / std::sqrt(nrm));
  }

  std::vector<double> density() const {
    std::vector<double> d(v_.size());
    for (std::size_t i = 0; i < v_.size(); ++i) d[i] = std::norm(v_[i]);
    return d;
  }

 private:
  GridPtr grid_;
  Space space_;
  std::vector<Complex> v_;
};

/// Two-component field for the full spinor model.
struct SpinorField {
  ScalarField up;
  ScalarField down;

  SpinorField(ScalarField u, ScalarField d) : up(std::move(u)), down(std::move(d)) {
    if (!(up.grid() == down.grid()) || up.space() != down.space())
      throw std::invalid_argument("spinor components must share grid and space");
  }

  static SpinorField zero(GridPtr grid, Space space) {
    return SpinorField(ScalarField(grid, space), ScalarField(std::move(grid), space));
  }

  const Grid2D& grid() const { return up.grid(); }
  Space space() const { return up.space(); }

  double norm2() const { return up.norm2() + down.norm2(); }

  void scale(double s) {
    up.scale(s);
    down.scale(s);
  }

  void normalize() {
    const double nrm = norm2();
    if (!(nrm > 0.0)) throw std::runtime_error("cannot normalize a null field");
    scale(1.0 / std::sqrt(nrm));
  }

  std::vector<double> density() const {
    std::vector<double> d = up.density();
    const auto& dn = down.values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += std::norm(dn[i]);
    return d;
  }
};

inline double norm2(const ScalarField& f) { return f.norm2(); }
inline double norm2(const SpinorField& f) { return f.norm2(); }

enum class Transform { ToMomentum, ToPosition };

namespace detail {

/// fft-order index <-> monotone index, per axis: mono j corresponds to
/// signed wavenumber m = j - n/2, stored by FFTW at (j + n/2) % n.
inline int fft_index(int mono, int n) { return (mono + n / 2) % n; }

}  // namespace detail

/// Unitary spectral transform with the h-scaled momentum convention
/// phi(p) = (2*pi*h)^(-1) * integral psi(x,y) exp(-i p.r / h) dx dy.
/// The box-offset phase reduces to (-1)^(mx+my), applied so that sampled
/// continuum transforms (e.g. centered Gaussians) come out exactly.
inline ScalarField transform(const ScalarField& f, Transform dir) {
  const Grid2D& g = f.grid();
  const int n = g.n();
  const bool fwd = dir == Transform::ToMomentum;
  if (fwd && f.space() != Space::Position)
    throw std::invalid_argument("transform: ToMomentum requires a position-space field");
  if (!fwd && f.space() != Space::Momentum)
    throw std::invalid_argument("transform: ToPosition requires a momentum-space field");

  fft::Workspace& ws = fft::shared_workspace(n);
  Complex* buf = ws.data();
  ScalarField out(f.grid_ptr(), fwd ? Space::Momentum : Space::Position);

  if (fwd) {
    std::memcpy(buf, f.values().data(), sizeof(Complex) * g.size());
    ws.forward();
    const double s = g.dx() * g.dx() / (2.0 * std::numbers::pi * g.h());
    for (int mx = 0; mx < n; ++mx) {
      const int jx = detail::fft_index(mx, n);
      for (int my = 0; my < n; ++my) {
        const int jy = detail::fft_index(my, n);
        const double sign = ((jx + jy) & 1) ? -1.0 : 1.0;
        out.values()[g.idx(mx, my)] = buf[g.idx(jx, jy)] * (s * sign);
      }
    }
  } else {
    for (int mx = 0; mx < n; ++mx) {
      const int jx = detail::fft_index(mx, n);
      for (int my = 0; my < n; ++my) {
        const int jy = detail::fft_index(my, n);
        const double sign = ((jx + jy) & 1) ? -1.0 : 1.0;
        buf[g.idx(jx, jy)] = f.values()[g.idx(mx, my)] * sign;
      }
    }
    ws.backward();
    const double s = g.dp() * g.dp() / (2.0 * std::numbers::pi * g.h());
    for (std::size_t i = 0; i < g.size(); ++i) out.values()[i] = buf[i] * s;
  }
  return out;
}

inline SpinorField transform(const SpinorField& f, Transform dir) {
  return SpinorField(transform(f.up, dir), transform(f.down, dir));
}

// ---------------------------------------------------------------------------
// Grid sizing rule: the classically accessible shell (position radius and
// outer momentum radius from the energy bound) must fit with margin. The
// product extent_x*extent_p = pi*h*n/2 is fixed by n and h, so the two
// extents are balanced against the shell aspect ratio.

struct GridSizing {
  double pos_needed = 0.0;   // classical position radius at E_max
  double mom_needed = 0.0;   // outer momentum radius at E_max
  double extent_x = 0.0;
  double extent_p = 0.0;
  double margin = 0.0;       // achieved min(extent/need); >= target when fits
  bool fits = false;
};

inline double accessible_position_radius(double v_max, double e_max) {
  return std::sqrt(std::max(0.0, 2.0 * e_max + v_max * v_max));
}

inline double accessible_momentum_radius(double v_max, double e_max) {
  return v_max + std::sqrt(std::max(0.0, 2.0 * e_max + v_max * v_max));
}

inline GridSizing plan_grid_extents(int n, double h, double v_max, double e_max,
                                    double margin_target = 1.5) {
  GridSizing s;
  s.pos_needed = accessible_position_radius(v_max, e_max);
  s.mom_needed = accessible_momentum_radius(v_max, e_max);
  const double area = std::numbers::pi * h * n / 2.0;  // extent_x * extent_p
  const double r = std::max(s.pos_needed, 1e-12);
  const double p = std::max(s.mom_needed, 1e-12);
  const double balanced = std::sqrt(area / (r * p));
  if (balanced >= margin_target) {
    s.extent_x = margin_target * r;  // surplus goes to the momentum side
    s.margin = margin_target;
  } else {
    s.extent_x = balanced * r;
    s.margin = balanced;
  }
  s.extent_p = area / s.extent_x;
  s.fits = s.margin >= margin_target - 1e-12;
  return s;
}

/// Smallest power-of-two n whose extents can hold the shell with margin.
inline int min_grid_points(double h, double v_max, double e_max,
                           double margin_target = 1.5) {
  const double r = accessible_position_radius(v_max, e_max);
  const double p = accessible_momentum_radius(v_max, e_max);
  const double need = 2.0 * margin_target * margin_target * r * p /
                      (std::numbers::pi * h);
  int n = 8;
  while (n < need && n < (1 << 24)) n *= 2;
  return n;
}

// ---------------------------------------------------------------------------
// Density dump: one ASCII header line
//   soqdyn-grid n=<n> extent=<extent_x> h=<h> space=<pos|mom>
// followed by n^2 little-endian 8-byte IEEE-754 reals, row-major, y-fastest.

static_assert(std::endian::native == std::endian::little,
              "density dump writer assumes a little-endian host");

inline void write_density(const std::string& path, const Grid2D& g, Space space,
                          const std::vector<double>& values) {
  if (values.size() != g.size())
    throw std::invalid_argument("write_density: value count != n^2");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_density: cannot open " + path);
  char header[160];
  std::snprintf(header, sizeof(header), "soqdyn-grid n=%d extent=%.17g h=%.17g space=%s\n",
                g.n(), g.extent_x(), g.h(), space == Space::Position ? "pos" : "mom");
  out << header;
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write_density: write failed for " + path);
}

struct DensityDump {
  GridPtr grid;
  Space space = Space::Position;
  std::vector<double> values;
};

inline DensityDump read_density(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_density: cannot open " + path);
  std::string header;
  std::getline(in, header);
  int n = 0;
  double extent = 0.0, h = 0.0;
  char space_tag[8] = {0};
  if (std::sscanf(header.c_str(), "soqdyn-grid n=%d extent=%lg h=%lg space=%7s",
                  &n, &extent, &h, space_tag) != 4)
    throw std::runtime_error("read_density: bad header in " + path);
  DensityDump d;
  d.grid = make_grid(n, extent, h);
  if (std::string(space_tag) == "pos")
    d.space = Space::Position;
  else if (std::string(space_tag) == "mom")
    d.space = Space::Momentum;
  else
    throw std::runtime_error("read_density: bad space tag in " + path);
  d.values.resize(d.grid->size());
  in.read(reinterpret_cast<char*>(d.values.data()),
          static_cast<std::streamsize>(d.values.size() * sizeof(double)));
  if (!in) throw std::runtime_error("read_density: truncated payload in " + path);
  return d;
}

}  // namespace soqdyn
