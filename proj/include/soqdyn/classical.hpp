#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "soqdyn/model.hpp"
#include "soqdyn/rng.hpp"

namespace soqdyn::classical {

struct IntegrationError : std::runtime_error {
  double t;
  explicit IntegrationError(const std::string& what, double t_) // NOLINT
      : std::runtime_error(what), t(t_) {}
};

struct PhasePoint {
  double x = 0.0;
  double y = 0.0;
  double px = 0.0;
  double py = 0.0;
};

inline double energy(const ModelParams& m, const PhasePoint& z) {
  return 0.5 * (z.x * z.x + z.y * z.y + z.px * z.px + z.py * z.py) -
         zeeman_mag(m, z.px, z.py);
}

/// Lower-band equations of motion. The |B| terms are set to zero at the
/// Dirac point itself (measure-zero regularization); for v = 0 this reduces
/// to the plain harmonic flow.
inline PhasePoint eom_rhs(const ModelParams& m, const PhasePoint& z) {
  const double b = zeeman_mag(m, z.px, z.py);
  double sx = 0.0, sy = 0.0;
  if (b > 0.0) {
    sx = m.vx * m.vx * z.px / b;
    sy = m.vy * m.vy * z.py / b;
  }
  return {z.px - sx, z.py - sy, -z.x, -z.y};
}

/// Jacobian of eom_rhs in the state ordering (x, y, px, py), analytic.
inline std::array<std::array<double, 4>, 4> eom_jacobian(const ModelParams& m,
                                                         const PhasePoint& z) {
  std::array<std::array<double, 4>, 4> j{};
  const double b = zeeman_mag(m, z.px, z.py);
  double dxx = 1.0, dyy = 1.0, dxy = 0.0;
  if (b > 0.0) {
    const double b3 = b * b * b;
    const double vx2 = m.vx * m.vx, vy2 = m.vy * m.vy;
    dxx = 1.0 - vx2 / b + vx2 * vx2 * z.px * z.px / b3;
    dyy = 1.0 - vy2 / b + vy2 * vy2 * z.py * z.py / b3;
    dxy = vx2 * vy2 * z.px * z.py / b3;
  }
  j[0][2] = dxx;
  j[0][3] = dxy;
  j[1][2] = dxy;
  j[1][3] = dyy;
  j[2][0] = -1.0;
  j[3][1] = -1.0;
  return j;
}

// ---------------------------------------------------------------------------
// Embedded Dormand-Prince 5(4) with the standard 4th-order dense output.

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N, typename Rhs>
class Dopri5 {
 public:
  Dopri5(Rhs rhs, double rtol, double atol)
      : rhs_(std::move(rhs)), rtol_(rtol), atol_(atol) {}

  void init(double t0, const State<N>& y0) {
    t_ = t0;
    y_ = y0;
    rhs_(t_, y_, k_[0]);
    check_finite(k_[0]);
    h_ = initial_step();
    have_step_ = false;
  }

  double t() const { return t_; }
  const State<N>& y() const { return y_; }
  double t_prev() const { return t_prev_; }

  /// Advance to exactly t_end. After every accepted internal step the
  /// observer is called; dense_at() is valid on [t_prev, t].
  template <typename Obs>
  void integrate_to(double t_end, Obs&& obs) {
    while (t_ < t_end) {
      double h = std::min(h_, t_end - t_);
      for (;;) {
        if (h < 1e-13 * std::max(1.0, std::abs(t_)))
          throw IntegrationError(
              "step size underflow (stiff region, likely near p = 0) at t = " +
                  std::to_string(t_),
              t_);
        const double err = attempt(h);
        if (err <= 1.0) {
          accept(h);
          const double f =
              std::clamp(0.9 * std::pow(std::max(err, 1e-16), -0.2), 0.2, 5.0);
          h_ = h * f;
          obs(*this);
          break;
        }
        h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
      }
    }
  }

  void integrate_to(double t_end) {
    integrate_to(t_end, [](const Dopri5&) {});
  }

  /// Continuous extension over the last accepted step.
  State<N> dense_at(double t) const {
    const double theta = (t - t_prev_) / h_last_;
    const double t1 = 1.0 - theta;
    State<N> out;
    for (std::size_t i = 0; i < N; ++i)
      out[i] = rc1_[i] +
               theta * (rc2_[i] + t1 * (rc3_[i] + theta * (rc4_[i] + t1 * rc5_[i])));
    return out;
  }

 private:
  static void check_finite(const State<N>& v) {
    for (double x : v)
      if (!std::isfinite(x)) throw std::runtime_error("non-finite state in integrator");
  }

  double initial_step() {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sc = atol_ + rtol_ * std::abs(y_[i]);
      d0 = std::max(d0, std::abs(y_[i]) / sc);
      d1 = std::max(d1, std::abs(k_[0][i]) / sc);
    }
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    return std::min(h, 0.1);
  }

  /// One trial step of size h; returns scaled error. Stage values remain in
  /// k_, candidate state in ynew_.
  double attempt(double h) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

    State<N> w;
    for (std::size_t i = 0; i < N; ++i) w[i] = y_[i] + h * a21 * k_[0][i];
    rhs_(t_ + c2 * h, w, k_[1]);
    for (std::size_t i = 0; i < N; ++i)
      w[i] = y_[i] + h * (a31 * k_[0][i] + a32 * k_[1][i]);
    rhs_(t_ + c3 * h, w, k_[2]);
    for (std::size_t i = 0; i < N; ++i)
      w[i] = y_[i] + h * (a41 * k_[0][i] + a42 * k_[1][i] + a43 * k_[2][i]);
    rhs_(t_ + c4 * h, w, k_[3]);
    for (std::size_t i = 0; i < N; ++i)
      w[i] = y_[i] + h * (a51 * k_[0][i] + a52 * k_[1][i] + a53 * k_[2][i] +
                          a54 * k_[3][i]);
    rhs_(t_ + c5 * h, w, k_[4]);
    for (std::size_t i = 0; i < N; ++i)
      w[i] = y_[i] + h * (a61 * k_[0][i] + a62 * k_[1][i] + a63 * k_[2][i] +
                          a64 * k_[3][i] + a65 * k_[4][i]);
    rhs_(t_ + h, w, k_[5]);
    for (std::size_t i = 0; i < N; ++i)
      ynew_[i] = y_[i] + h * (b1 * k_[0][i] + b3 * k_[2][i] + b4 * k_[3][i] +
                              b5 * k_[4][i] + b6 * k_[5][i]);
    rhs_(t_ + h, ynew_, k_[6]);
    check_finite(ynew_);

    double err2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e = h * (e1 * k_[0][i] + e3 * k_[2][i] + e4 * k_[3][i] +
                            e5 * k_[4][i] + e6 * k_[5][i] + e7 * k_[6][i]);
      const double sc = atol_ + rtol_ * std::max(std::abs(y_[i]), std::abs(ynew_[i]));
      err2 += (e / sc) * (e / sc);
    }
    return std::sqrt(err2 / N);
  }

  void accept(double h) {
    static constexpr double d1 = -12715105075.0 / 11282082432.0;
    static constexpr double d3 = 87487479700.0 / 32700410799.0;
    static constexpr double d4 = -10690763975.0 / 1880347072.0;
    static constexpr double d5 = 701980252875.0 / 199316789632.0;
    static constexpr double d6 = -1453857185.0 / 822651844.0;
    static constexpr double d7 = 69997945.0 / 29380423.0;

    for (std::size_t i = 0; i < N; ++i) {
      const double dy = ynew_[i] - y_[i];
      rc1_[i] = y_[i];
      rc2_[i] = dy;
      rc3_[i] = h * k_[0][i] - dy;
      rc4_[i] = dy - h * k_[6][i] - rc3_[i];
      rc5_[i] = h * (d1 * k_[0][i] + d3 * k_[2][i] + d4 * k_[3][i] +
                     d5 * k_[4][i] + d6 * k_[5][i] + d7 * k_[6][i]);
    }
    t_prev_ = t_;
    h_last_ = h;
    t_ += h;
    y_ = ynew_;
    k_[0] = k_[6];  // FSAL
    have_step_ = true;
  }

  Rhs rhs_;
  double rtol_, atol_;
  double t_ = 0.0, t_prev_ = 0.0, h_ = 1e-3, h_last_ = 0.0;
  State<N> y_{}, ynew_{};
  std::array<State<N>, 7> k_{};
  State<N> rc1_{}, rc2_{}, rc3_{}, rc4_{}, rc5_{};
  bool have_step_ = false;
};

// ---------------------------------------------------------------------------

struct Trajectory {
  std::vector<double> t;
  std::vector<PhasePoint> z;
  double energy0 = 0.0;
};

namespace detail {

inline State<4> pack(const PhasePoint& z) { return {z.x, z.y, z.px, z.py}; }
inline PhasePoint unpack(const State<4>& s) { return {s[0], s[1], s[2], s[3]}; }

struct EomRhs {
  ModelParams m;
  void operator()(double, const State<4>& s, State<4>& out) const {
    const PhasePoint d = eom_rhs(m, unpack(s));
    out = {d.x, d.y, d.px, d.py};
  }
};

}  // namespace detail

/// Adaptive integration with dense-output samples every sample_dt (plus the
/// endpoint). Enforces the relative energy-drift contract on every sample.
inline Trajectory integrate(const ModelParams& m, const PhasePoint& z0, double t_f,
                            double tol, double sample_dt = 0.1,
                            double energy_tol = 1e-6) {
  if (!(tol > 0.0)) throw std::invalid_argument("integrate: tol must be > 0");
  if (t_f < 0.0) throw std::invalid_argument("integrate: t_f must be >= 0");
  Trajectory traj;
  traj.energy0 = energy(m, z0);
  const double e_scale = std::max(std::abs(traj.energy0), 1e-12);

  Dopri5<4, detail::EomRhs> ode(detail::EomRhs{m}, tol, tol);
  ode.init(0.0, detail::pack(z0));

  auto record = [&](double t, const PhasePoint& z) {
    const double drift = std::abs(energy(m, z) - traj.energy0) / e_scale;
    if (drift > energy_tol)
      throw IntegrationError("energy drift " + std::to_string(drift) +
                                 " exceeds contract at t = " + std::to_string(t),
                             t);
    traj.t.push_back(t);
    traj.z.push_back(z);
  };

  record(0.0, z0);
  double next_sample = sample_dt;
  ode.integrate_to(t_f, [&](const Dopri5<4, detail::EomRhs>& s) {
    while (next_sample < s.t() - 1e-14 && next_sample < t_f - 1e-14) {
      record(next_sample, detail::unpack(s.dense_at(next_sample)));
      next_sample += sample_dt;
    }
  });
  record(t_f, detail::unpack(ode.y()));
  return traj;
}

/// Independent jobs; deterministic per-seed results.
inline std::vector<Trajectory> integrate_batch(const ModelParams& m,
                                               const std::vector<PhasePoint>& seeds,
                                               double t_f, double tol,
                                               double sample_dt = 0.1) {
  std::vector<Trajectory> out;
  out.reserve(seeds.size());
  for (const PhasePoint& z : seeds) out.push_back(integrate(m, z, t_f, tol, sample_dt));
  return out;
}

// ---------------------------------------------------------------------------
// Poincare sections.

enum class SectionPlane { YZero, PyZero };

struct SectionPoint {
  SectionPlane plane = SectionPlane::PyZero;
  double t = 0.0;
  double x = 0.0;
  double px = 0.0;
  int sign = 0;  // +1 crossing upward in the section variable, -1 downward
  int seed = 0;
};

/// Event-detected plane crossings for every seed, located on the dense
/// output by bisection to |section variable| < 1e-10. Both crossing
/// directions are recorded, tagged by sign.
inline std::vector<std::vector<SectionPoint>> poincare_section(
    const ModelParams& m, const std::vector<PhasePoint>& seeds, SectionPlane plane,
    double t_f, double tol = 1e-10) {
  if (seeds.empty()) return {};
  const double e0 = energy(m, seeds.front());
  for (const PhasePoint& z : seeds)
    if (std::abs(energy(m, z) - e0) > 1e-9 * std::max(1.0, std::abs(e0)))
      throw std::invalid_argument("poincare_section: seeds not on one energy shell");

  const int gi = plane == SectionPlane::YZero ? 1 : 3;  // index of y or py
  std::vector<std::vector<SectionPoint>> out(seeds.size());

  for (std::size_t is = 0; is < seeds.size(); ++is) {
    Dopri5<4, detail::EomRhs> ode(detail::EomRhs{m}, tol, tol);
    ode.init(0.0, detail::pack(seeds[is]));
    double g_prev = detail::pack(seeds[is])[gi];
    ode.integrate_to(t_f, [&](const Dopri5<4, detail::EomRhs>& s) {
      const double g_new = s.y()[gi];
      if (g_prev != 0.0 && g_prev * g_new < 0.0) {
        double lo = s.t_prev(), hi = s.t();
        double glo = g_prev;
        State<4> zc{};
        double tc = 0.5 * (lo + hi);
        for (int it = 0; it < 200; ++it) {
          tc = 0.5 * (lo + hi);
          zc = s.dense_at(tc);
          const double gc = zc[gi];
          if (std::abs(gc) < 1e-10) break;
          if (glo * gc < 0.0)
            hi = tc;
          else {
            lo = tc;
            glo = gc;
          }
        }
        out[is].push_back({plane, tc, zc[0], zc[2], g_new > g_prev ? 1 : -1,
                           static_cast<int>(is)});
      }
      g_prev = g_new;
    });
  }
  return out;
}

/// Closed-curve statistic: every point is compared against the local
/// nearest-neighbor geometry. For each well-sampled point the minor spread
/// (smallest principal component) of its k-nearest-neighbor patch measures
/// the distance of the patch from a fitted local curve segment; the residual
/// is the largest such spread. Points whose k-th neighbor lies beyond three
/// times the 75th-percentile neighborhood radius carry no local evidence
/// (partially traced curves) and are skipped. Sections on an invariant curve
/// stay far below 2% of the diameter; area-filling sections do not.
struct CurveTest {
  double residual = 0.0;
  double diameter = 0.0;
  std::size_t used = 0;
  bool closed = true;
};

inline CurveTest closed_curve_test(const std::vector<std::pair<double, double>>& pts,
                                   double rel_tol = 0.02, int k = 12) {
  CurveTest ct;
  const std::size_t n = pts.size();
  if (n < static_cast<std::size_t>(k + 2)) return ct;

  std::vector<double> d2(n);
  std::vector<std::size_t> idx(n);
  std::vector<double> kth_radius(n);
  std::vector<std::vector<std::size_t>> patch(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = pts[i].first - pts[j].first;
      const double dy = pts[i].second - pts[j].second;
      d2[j] = dx * dx + dy * dy;
      idx[j] = j;
      ct.diameter = std::max(ct.diameter, d2[j]);
    }
    std::nth_element(idx.begin(), idx.begin() + k, idx.end(),
                     [&](std::size_t a, std::size_t b) { return d2[a] < d2[b]; });
    kth_radius[i] = std::sqrt(d2[idx[k]]);
    patch[i].assign(idx.begin(), idx.begin() + k + 1);
  }
  ct.diameter = std::sqrt(ct.diameter);

  std::vector<double> radii = kth_radius;
  std::nth_element(radii.begin(), radii.begin() + (3 * n) / 4, radii.end());
  const double cap = 3.0 * radii[(3 * n) / 4];

  for (std::size_t i = 0; i < n; ++i) {
    if (kth_radius[i] > cap) continue;
    double mx = 0.0, my = 0.0;
    for (std::size_t j : patch[i]) {
      mx += pts[j].first;
      my += pts[j].second;
    }
    mx /= patch[i].size();
    my /= patch[i].size();
    double a = 0.0, b = 0.0, c = 0.0;
    for (std::size_t j : patch[i]) {
      const double dx = pts[j].first - mx, dy = pts[j].second - my;
      a += dx * dx;
      b += dx * dy;
      c += dy * dy;
    }
    a /= patch[i].size();
    b /= patch[i].size();
    c /= patch[i].size();
    const double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    const double lam_min = std::max(0.0, 0.5 * (a + c) - disc);
    ct.residual = std::max(ct.residual, std::sqrt(lam_min));
    ++ct.used;
  }

  if (ct.used < std::max<std::size_t>(8, n / 5)) return ct;  // insufficient evidence
  ct.closed = ct.residual < rel_tol * ct.diameter;
  return ct;
}

inline std::vector<std::pair<double, double>> section_coords(
    const std::vector<SectionPoint>& pts, int sign = 0) {
  std::vector<std::pair<double, double>> xy;
  for (const SectionPoint& p : pts)
    if (sign == 0 || p.sign == sign) xy.emplace_back(p.x, p.px);
  return xy;
}

// ---------------------------------------------------------------------------
// Maximum Lyapunov exponent, Benettin method with the analytic tangent flow.

struct LyapunovResult {
  double lambda = 0.0;
  bool converged = false;
  std::vector<std::pair<double, double>> series;  // (T, lambda(T))
};

namespace detail {

struct TangentRhs {
  ModelParams m;
  void operator()(double, const State<8>& s, State<8>& out) const {
    const PhasePoint z{s[0], s[1], s[2], s[3]};
    const PhasePoint d = eom_rhs(m, z);
    out[0] = d.x;
    out[1] = d.y;
    out[2] = d.px;
    out[3] = d.py;
    const auto j = eom_jacobian(m, z);
    for (int r = 0; r < 4; ++r) {
      double acc = 0.0;
      for (int c = 0; c < 4; ++c) acc += j[r][c] * s[4 + c];
      out[4 + r] = acc;
    }
  }
};

}  // namespace detail

inline LyapunovResult max_lyapunov(const ModelParams& m, const PhasePoint& z0,
                                   double t_total, double renorm_dt = 0.5,
                                   double tol = 1e-10) {
  if (!(renorm_dt > 0.0) || !(t_total > renorm_dt))
    throw std::invalid_argument("max_lyapunov: need t_total > renorm_dt > 0");
  LyapunovResult res;
  State<8> s{z0.x, z0.y, z0.px, z0.py, 0.5, 0.5, 0.5, 0.5};
  double log_sum = 0.0;
  double t = 0.0;
  const int chunks = static_cast<int>(t_total / renorm_dt);
  res.series.reserve(chunks);
  for (int c = 1; c <= chunks; ++c) {
    Dopri5<8, detail::TangentRhs> ode(detail::TangentRhs{m}, tol, tol);
    ode.init(t, s);
    ode.integrate_to(c * renorm_dt);
    t = ode.t();
    s = ode.y();
    double g = 0.0;
    for (int i = 4; i < 8; ++i) g += s[i] * s[i];
    g = std::sqrt(g);
    log_sum += std::log(g);
    for (int i = 4; i < 8; ++i) s[i] /= g;
    res.series.emplace_back(t, log_sum / t);
  }

  const std::size_t half = res.series.size() / 2;
  double acc = 0.0, lo = std::numeric_limits<double>::max(), hi = -lo;
  for (std::size_t i = half; i < res.series.size(); ++i) {
    const double l = res.series[i].second;
    acc += l;
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  const std::size_t tail = res.series.size() - half;
  res.lambda = tail ? acc / tail : 0.0;
  res.converged = (hi - lo) <= 0.2 * std::max(std::abs(res.lambda), 1e-12);
  return res;
}

// ---------------------------------------------------------------------------
// Seeds on an energy shell: (x, y, px) drawn uniformly in the accessible
// bounds, |py| solved from the energy equation (up to four roots, one picked
// at random), polished by Newton iterations to land on the shell exactly.

inline std::vector<PhasePoint> sample_energy_shell(const ModelParams& m, double e0,
                                                   int count, std::uint64_t seed) {
  const AccessibleRegion reg = accessible_region(m, e0);
  const double rpos = std::sqrt(std::max(0.0, reg.position_radius2));
  const double pxm = reg.px_abs_max;
  SplitMix64 rng(seed);
  std::vector<PhasePoint> out;
  out.reserve(count);
  int guard = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++guard > 1000000)
      throw std::runtime_error("sample_energy_shell: rejection budget exhausted");
    const double x = rng.uniform(-rpos, rpos);
    const double y = rng.uniform(-rpos, rpos);
    if (x * x + y * y > reg.position_radius2) continue;
    const double px = pxm > 0.0 ? rng.uniform(-pxm, pxm) : 0.0;
    const double e_rem = e0 - 0.5 * (x * x + y * y + px * px);
    const double c = m.vx * m.vx * px * px;
    const double vy2 = m.vy * m.vy;

    double roots[4];
    int nroots = 0;
    auto consider = [&](double s2) {
      if (!(s2 >= 0.0)) return;
      const double py = std::sqrt(s2);
      if (0.5 * s2 - e_rem < -1e-9 * std::max(1.0, std::abs(e_rem))) return;
      const double resid = 0.5 * s2 - std::sqrt(c + vy2 * s2) - e_rem;
      if (std::abs(resid) > 1e-6 * std::max(1.0, std::abs(e0))) return;
      roots[nroots++] = py;
      if (py > 0.0) roots[nroots++] = -py;
    };
    if (vy2 == 0.0) {
      consider(2.0 * (e_rem + std::sqrt(c)));
    } else {
      const double disc = vy2 * vy2 + 2.0 * e_rem * vy2 + c;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        consider(2.0 * (e_rem + vy2) + 2.0 * sq);
        consider(2.0 * (e_rem + vy2) - 2.0 * sq);
      }
    }
    if (nroots == 0) continue;
    double py = roots[static_cast<int>(rng.uniform() * nroots) % nroots];

    // Newton polish onto the shell.
    for (int it = 0; it < 3; ++it) {
      const double b = std::hypot(m.vx * px, m.vy * py);
      const double f = 0.5 * (x * x + y * y + px * px + py * py) - b - e0;
      const double df = b > 0.0 ? py - vy2 * py / b : py;
      if (std::abs(df) < 1e-12) break;
      py -= f / df;
    }
    PhasePoint z{x, y, px, py};
    if (std::abs(energy(m, z) - e0) > 1e-9 * std::max(1.0, std::abs(e0))) continue;
    out.push_back(z);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ASCII exports.

inline void write_section(const std::string& path,
                          const std::vector<std::vector<SectionPoint>>& sections) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_section: cannot open " + path);
  out << "# t x p_x sign seed_index\n";
  char line[160];
  for (const auto& per_seed : sections)
    for (const SectionPoint& p : per_seed) {
      std::snprintf(line, sizeof(line), "%.12g %.12g %.12g %d %d\n", p.t, p.x, p.px,
                    p.sign, p.seed);
      out << line;
    }
}

inline void write_lyapunov_series(const std::string& path, const LyapunovResult& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_lyapunov_series: cannot open " + path);
  out << "# T lambda\n";
  char line[80];
  for (const auto& [t, l] : r.series) {
    std::snprintf(line, sizeof(line), "%.12g %.12g\n", t, l);
    out << line;
  }
}

}  // namespace soqdyn::classical
