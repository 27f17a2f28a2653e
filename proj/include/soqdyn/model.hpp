#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

namespace soqdyn {

using Complex = std::complex<double>;

/// Dimensionless physics parameters. Energies in units of the trap quantum,
/// lengths in oscillator lengths, time in inverse trap frequencies
/// (classical period 2*pi). (xs, ys) is the trap shift before the quench.
struct ModelParams {
  double vx = 0.0;
  double vy = 0.0;
  double xs = 0.0;
  double ys = 0.0;
  double h = 1.0;

  void validate() const {
    if (vx < 0.0 || vy < 0.0) throw std::invalid_argument("params: vx, vy must be >= 0");
    if (!(h > 0.0)) throw std::invalid_argument("params: h must be > 0");
  }

  bool isotropic() const { return vx == vy; }
  double v_max() const { return std::max(vx, vy); }
};

/// |B(p)| for the momentum-dependent Zeeman field B = (vx*px, vy*py).
inline double zeeman_mag(const ModelParams& m, double px, double py) {
  return std::hypot(m.vx * px, m.vy * py);
}

/// Branch energy p^2/2 + mu*|B(p)| of the free spin-orbit dispersion.
inline double dispersion(const ModelParams& m, int mu, double px, double py) {
  return 0.5 * (px * px + py * py) + mu * zeeman_mag(m, px, py);
}

/// Same expression read as the dual potential V_mu over momentum space; the
/// trap plays the kinetic role in the adiabatic picture.
inline double adiabatic_potential(const ModelParams& m, int mu, double px, double py) {
  return dispersion(m, mu, px, py);
}

/// Helicity spinor (e^{-i phi/2}, -mu e^{+i phi/2})/sqrt(2), phi computed
/// with the two-argument arctangent. Phase convention fixed so that
/// <sigma_x> + i<sigma_y> = -mu e^{i phi}; the lower band (mu = -1) carries
/// Bloch vector +(cos phi, sin phi), matching the crude approximation
/// R = (vx px, vy py)/|B| used for localized packets.
inline std::array<Complex, 2> spinor_eigenstate(const ModelParams& m, int mu,
                                                double px, double py) {
  if (zeeman_mag(m, px, py) == 0.0)
    throw std::invalid_argument("spinor_eigenstate: undefined at the Dirac point");
  const double phi = std::atan2(m.vy * py, m.vx * px);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const Complex a = std::polar(inv_sqrt2, -0.5 * phi);
  const Complex b = std::polar(-mu * inv_sqrt2, 0.5 * phi);
  return {a, b};
}

/// Diagnostic scale of the scalar non-adiabatic correction,
/// (vx vy)^2 (px^2+py^2) / (vx^2 px^2 + vy^2 py^2)^2, prefactor fixed to 1.
/// Never added to a Hamiltonian.
inline double nonadiabatic_scale(const ModelParams& m, double px, double py) {
  if (px == 0.0 && py == 0.0)
    throw std::invalid_argument("nonadiabatic_scale: undefined at the Dirac point");
  const double num = (m.vx * m.vy) * (m.vx * m.vy) * (px * px + py * py);
  if (num == 0.0) return 0.0;
  const double b2 = m.vx * m.vx * px * px + m.vy * m.vy * py * py;
  return num / (b2 * b2);
}

// ---------------------------------------------------------------------------
// Fixed points of the lower-band classical flow.

enum class Stability { Stable, Unstable };

struct FixedPoint {
  double px = 0.0;
  double py = 0.0;
  Stability kind = Stability::Stable;
};

/// Degenerate seam of stable fixed points |p| = v of the isotropic model.
struct StableRing {
  double radius = 0.0;
};

struct FixedPointSet {
  std::vector<FixedPoint> points;
  std::optional<StableRing> ring;
};

inline FixedPointSet classical_fixed_points(const ModelParams& m) {
  m.validate();
  FixedPointSet set;
  if (m.vx == 0.0 && m.vy == 0.0) {
    set.points.push_back({0.0, 0.0, Stability::Stable});
    return set;
  }
  if (m.isotropic()) {
    set.points.push_back({0.0, 0.0, Stability::Unstable});
    set.ring = StableRing{m.vx};
    return set;
  }
  // Canonical orientation vy > vx; mirrored otherwise.
  const bool y_major = m.vy > m.vx;
  const double v_minor = y_major ? m.vx : m.vy;
  const double v_major = y_major ? m.vy : m.vx;
  auto push = [&](double along_minor, double along_major, Stability k) {
    if (y_major)
      set.points.push_back({along_minor, along_major, k});
    else
      set.points.push_back({along_major, along_minor, k});
  };
  push(0.0, 0.0, Stability::Unstable);
  if (v_minor > 0.0) {
    push(v_minor, 0.0, Stability::Unstable);
    push(-v_minor, 0.0, Stability::Unstable);
  }
  push(0.0, v_major, Stability::Stable);
  push(0.0, -v_major, Stability::Stable);
  return set;
}

// ---------------------------------------------------------------------------
// Classically accessible region at a given maximum energy:
//   x^2 + y^2 <= 2 E_max + v_max^2
//   px^2 + py^2 - 2 sqrt(vx^2 px^2 + vy^2 py^2) <= 2 E_max

/// |p| interval where the momentum region meets a coordinate axis.
struct AxisInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool exists = false;
};

struct AccessibleRegion {
  ModelParams params;
  double e_max = 0.0;
  double position_radius2 = 0.0;
  AxisInterval px_axis;  // |px| range at py = 0
  AxisInterval py_axis;  // |py| range at px = 0
  double px_abs_max = 0.0;
  double py_abs_max = 0.0;
  bool isotropic = false;
  double annulus_inner = 0.0;
  double annulus_outer = 0.0;

  bool contains_position(double x, double y) const {
    return x * x + y * y <= position_radius2;
  }
  bool contains_momentum(double px, double py) const {
    return px * px + py * py - 2.0 * zeeman_mag(params, px, py) <= 2.0 * e_max;
  }
};

namespace detail {

inline AxisInterval axis_interval(double v, double e_max) {
  AxisInterval iv;
  const double disc = v * v + 2.0 * e_max;
  if (disc < 0.0) return iv;
  const double s = std::sqrt(disc);
  iv.lo = std::max(0.0, v - s);
  iv.hi = v + s;
  iv.exists = true;
  return iv;
}

/// Largest |p_minor| over the region; attained either on the minor axis or
/// on the off-axis ridge |B| = v_major^2.
inline double minor_axis_abs_max(double v_minor, double v_major, double e_max) {
  double best = 0.0;
  const AxisInterval on_axis = axis_interval(v_minor, e_max);
  if (on_axis.exists) best = on_axis.hi;
  if (v_major > v_minor) {
    const double q2 = (2.0 * e_max + v_major * v_major) * v_major * v_major /
                      (v_major * v_major - v_minor * v_minor);
    if (q2 > 0.0) {
      const double conj2 =
          v_major * v_major - (v_minor * v_minor / (v_major * v_major)) * q2;
      if (conj2 >= 0.0) best = std::max(best, std::sqrt(q2));
    }
  }
  return best;
}

}  // namespace detail

inline AccessibleRegion accessible_region(const ModelParams& m, double e_max) {
  m.validate();
  const double vmax = m.v_max();
  if (e_max < -0.5 * vmax * vmax)
    throw std::invalid_argument("accessible_region: E_max below the global minimum");
  AccessibleRegion r;
  r.params = m;
  r.e_max = e_max;
  r.position_radius2 = 2.0 * e_max + vmax * vmax;
  r.px_axis = detail::axis_interval(m.vx, e_max);
  r.py_axis = detail::axis_interval(m.vy, e_max);
  if (m.isotropic()) {
    r.isotropic = true;
    const double s = std::sqrt(std::max(0.0, m.vx * m.vx + 2.0 * e_max));
    r.annulus_inner = std::max(0.0, m.vx - s);
    r.annulus_outer = m.vx + s;
    r.px_abs_max = r.annulus_outer;
    r.py_abs_max = r.annulus_outer;
  } else if (m.vy > m.vx) {
    r.py_abs_max = m.vy + std::sqrt(m.vy * m.vy + 2.0 * e_max);
    r.px_abs_max = detail::minor_axis_abs_max(m.vx, m.vy, e_max);
  } else {
    r.px_abs_max = m.vx + std::sqrt(m.vx * m.vx + 2.0 * e_max);
    r.py_abs_max = detail::minor_axis_abs_max(m.vy, m.vx, e_max);
  }
  return r;
}

}  // namespace soqdyn
