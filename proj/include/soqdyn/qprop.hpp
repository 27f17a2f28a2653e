#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "soqdyn/grid.hpp"
#include "soqdyn/model.hpp"
#include "soqdyn/rng.hpp"

namespace soqdyn {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Mode { Full, Adiabatic };
enum class WhichMinimum { Left, Right, RingRandomPhase };

/// Wave function plus its clock. Full model carries a spinor, the adiabatic
/// model a scalar lower-band amplitude.
struct QuantumState {
  ModelParams params;
  double t = 0.0;
  std::variant<ScalarField, SpinorField> field;

  Mode mode() const {
    return std::holds_alternative<SpinorField>(field) ? Mode::Full : Mode::Adiabatic;
  }
  const Grid2D& grid() const {
    return mode() == Mode::Full ? std::get<SpinorField>(field).grid()
                                : std::get<ScalarField>(field).grid();
  }
  GridPtr grid_ptr() const {
    return mode() == Mode::Full ? std::get<SpinorField>(field).up.grid_ptr()
                                : std::get<ScalarField>(field).grid_ptr();
  }
  Space space() const {
    return mode() == Mode::Full ? std::get<SpinorField>(field).space()
                                : std::get<ScalarField>(field).space();
  }
  double norm2() const {
    return mode() == Mode::Full ? std::get<SpinorField>(field).norm2()
                                : std::get<ScalarField>(field).norm2();
  }
  const ScalarField& scalar() const { return std::get<ScalarField>(field); }
  const SpinorField& spinor() const { return std::get<SpinorField>(field); }
};

struct PropagatorConfig {
  double dt = 0.0;  // 0 selects the grid stability rule
  Mode mode = Mode::Adiabatic;
  int observer_cadence = 100;
  double norm_tol = 1e-9;
};

/// Exact SO-term propagator at fixed momentum:
/// U = cos(theta) I - i sin(theta) (bhat . sigma), b = (vx px, vy py),
/// theta = |b| dt / h, with U = I at the Dirac point (analytic limit).
/// Row-major 2x2.
inline std::array<Complex, 4> spin_kick(const ModelParams& m, double px, double py,
                                        double dt) {
  const double b = zeeman_mag(m, px, py);
  if (b == 0.0) return {Complex{1.0, 0.0}, {}, {}, Complex{1.0, 0.0}};
  const double theta = b * dt / m.h;
  const double c = std::cos(theta), s = std::sin(theta);
  const double bx = m.vx * px / b, by = m.vy * py / b;
  const Complex mis{0.0, -s};
  return {Complex{c, 0.0}, mis * Complex{bx, -by}, mis * Complex{bx, by},
          Complex{c, 0.0}};
}

// ---------------------------------------------------------------------------
// Time-step rules. The default bounds the phase advance per step by the
// largest |V| anywhere on the grid; the shell rule bounds it over the
// classically accessible region instead (experiment harness override).

inline double max_momentum_scale(const Grid2D& g, const ModelParams& m, Mode mode) {
  double vmax = 0.0;
  for (int i = 0; i < g.n(); ++i)
    for (int j = 0; j < g.n(); ++j) {
      const double px = g.p(i), py = g.p(j);
      const double v = mode == Mode::Adiabatic
                           ? std::abs(adiabatic_potential(m, -1, px, py))
                           : 0.5 * (px * px + py * py) + zeeman_mag(m, px, py);
      vmax = std::max(vmax, v);
    }
  return vmax;
}

inline double stability_dt(const Grid2D& g, const ModelParams& m, Mode mode,
                           double phase_budget = 0.05) {
  const double vpos = g.extent_x() * g.extent_x();
  const double vmom = max_momentum_scale(g, m, mode);
  return phase_budget * g.h() / std::max(vpos, vmom);
}

inline double shell_dt(const ModelParams& m, double e_max, Mode mode,
                       double phase_budget = 0.1) {
  const double vmax = m.v_max();
  const double vpos = std::max(0.0, 2.0 * e_max + vmax * vmax) / 2.0;
  double vmom;
  if (mode == Mode::Adiabatic) {
    vmom = std::max(0.5 * vmax * vmax, std::max(e_max, 0.0));
  } else {
    const double pmax = accessible_momentum_radius(vmax, e_max);
    vmom = 0.5 * pmax * pmax + vmax * pmax;
  }
  return phase_budget * m.h / std::max(std::max(vpos, vmom), 1e-12);
}

// ---------------------------------------------------------------------------
// Strang split-step engine. The state lives inside FFT workspaces for the
// duration of a run; interior position kicks of a block are fused.
//
// Sign convention: the spin term is implemented as -(vx px sx + vy py sy) so
// that the helicity labels, the branch energies p^2/2 + mu |B|, and the
// Bloch-vector formulas are mutually consistent (densities are unaffected;
// see spinor_eigenstate).

class SplitStepper {
 public:
  SplitStepper(GridPtr grid, const ModelParams& params, Mode mode, double dt,
               bool imaginary_time = false, double trap_cx = 0.0,
               double trap_cy = 0.0)
      : grid_(std::move(grid)),
        params_(params),
        mode_(mode),
        dt_(dt),
        imag_(imaginary_time) {
    params_.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("stepper: dt must be > 0");
    const Grid2D& g = *grid_;
    const int n = g.n();
    up_ = std::make_unique<fft::Workspace>(n);
    if (mode_ == Mode::Full) down_ = std::make_unique<fft::Workspace>(n);

    // Position kicks, trap centered at (trap_cx, trap_cy).
    pos_half_.resize(g.size());
    pos_full_.resize(g.size());
    for (int ix = 0; ix < n; ++ix)
      for (int iy = 0; iy < n; ++iy) {
        const double rx = g.x(ix) - trap_cx, ry = g.x(iy) - trap_cy;
        const double v = 0.5 * (rx * rx + ry * ry);
        const std::size_t id = g.idx(ix, iy);
        pos_half_[id] = imag_ ? Complex{std::exp(-0.5 * v * dt_ / g.h()), 0.0}
                              : std::polar(1.0, -0.5 * v * dt_ / g.h());
        pos_full_[id] = pos_half_[id] * pos_half_[id];
      }

    // Momentum kick tables in raw FFT order, 1/n^2 DFT normalization folded in.
    const double inv_n2 = 1.0 / static_cast<double>(g.size());
    if (mode_ == Mode::Adiabatic) {
      mom_a_.resize(g.size());
      double v_min = 0.0;
      if (imag_) {
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            v_min = std::min(v_min,
                             adiabatic_potential(params_, -1, g.p_fft(i), g.p_fft(j)));
      }
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double v = adiabatic_potential(params_, -1, g.p_fft(i), g.p_fft(j));
          mom_a_[g.idx(i, j)] =
              imag_ ? Complex{inv_n2 * std::exp(-(v - v_min) * dt_ / g.h()), 0.0}
                    : std::polar(inv_n2, -v * dt_ / g.h());
        }
    } else {
      mom_a_.resize(g.size());
      mom_b_.resize(g.size());
      mom_c_.resize(g.size());
      double v_min = 0.0;
      if (imag_) {
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            v_min = std::min(v_min,
                             adiabatic_potential(params_, -1, g.p_fft(i), g.p_fft(j)));
      }
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double px = g.p_fft(i), py = g.p_fft(j);
          const double b = zeeman_mag(params_, px, py);
          const double kin = 0.5 * (px * px + py * py);
          const std::size_t id = g.idx(i, j);
          if (imag_) {
            // exp(-(p^2/2 - B.sigma) dtau/h), assembled from the two branch
            // decays to avoid cosh overflow; offset by the grid minimum of V-.
            const double em = std::exp(-(kin - b - v_min) * dt_ / g.h());
            const double ep = std::exp(-(kin + b - v_min) * dt_ / g.h());
            const double ch = 0.5 * (em + ep), sh = 0.5 * (em - ep);
            const double bx = b > 0.0 ? params_.vx * px / b : 0.0;
            const double by = b > 0.0 ? params_.vy * py / b : 0.0;
            mom_a_[id] = Complex{inv_n2 * ch, 0.0};
            mom_b_[id] = inv_n2 * sh * Complex{bx, -by};
            mom_c_[id] = inv_n2 * sh * Complex{bx, by};
          } else {
            const Complex kphase = std::polar(inv_n2, -kin * dt_ / g.h());
            if (b == 0.0) {
              mom_a_[id] = kphase;
              mom_b_[id] = mom_c_[id] = Complex{};
            } else {
              const double theta = b * dt_ / g.h();
              const double c = std::cos(theta), s = std::sin(theta);
              const double bx = params_.vx * px / b, by = params_.vy * py / b;
              const Complex is{0.0, s};
              mom_a_[id] = kphase * c;
              mom_b_[id] = kphase * (is * Complex{bx, -by});
              mom_c_[id] = kphase * (is * Complex{bx, by});
            }
          }
        }
    }
  }

  const Grid2D& grid() const { return *grid_; }
  double dt() const { return dt_; }
  int steps_done() const { return steps_; }

  void load(const QuantumState& st) {
    if (st.mode() != mode_) throw std::invalid_argument("stepper: mode mismatch");
    if (st.space() != Space::Position)
      throw std::invalid_argument("stepper: state must be in position space");
    if (!(st.grid() == *grid_)) throw std::invalid_argument("stepper: grid mismatch");
    if (mode_ == Mode::Adiabatic) {
      std::copy(st.scalar().values().begin(), st.scalar().values().end(), up_->data());
    } else {
      std::copy(st.spinor().up.values().begin(), st.spinor().up.values().end(),
                up_->data());
      std::copy(st.spinor().down.values().begin(), st.spinor().down.values().end(),
                down_->data());
    }
    t0_ = st.t;
    steps_ = 0;
    params_snapshot_ = st.params;
  }

  /// k Strang steps; interior half-kicks fused pairwise. In imaginary time
  /// the state is renormalized after every step.
  void run_block(int k) {
    if (k <= 0) return;
    apply_position(pos_half_);
    for (int s = 0; s < k; ++s) {
      momentum_step();
      apply_position(s + 1 < k ? pos_full_ : pos_half_);
      if (imag_) renormalize();
      ++steps_;
    }
  }

  double current_norm2() const {
    const double a = grid_->cell_area(Space::Position);
    double acc = sum_norm(up_->data());
    if (mode_ == Mode::Full) acc += sum_norm(down_->data());
    return acc * a;
  }

  QuantumState snapshot() const {
    QuantumState st{params_snapshot_, t0_ + steps_ * dt_, make_field()};
    return st;
  }

 private:
  std::variant<ScalarField, SpinorField> make_field() const {
    if (mode_ == Mode::Adiabatic) {
      ScalarField f(grid_, Space::Position);
      std::copy(up_->data(), up_->data() + grid_->size(), f.values().begin());
      return f;
    }
    SpinorField f = SpinorField::zero(grid_, Space::Position);
    std::copy(up_->data(), up_->data() + grid_->size(), f.up.values().begin());
    std::copy(down_->data(), down_->data() + grid_->size(), f.down.values().begin());
    return f;
  }

  double sum_norm(const Complex* v) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < grid_->size(); ++i) acc += std::norm(v[i]);
    return acc;
  }

  void apply_position(const std::vector<Complex>& table) {
    Complex* u = up_->data();
    for (std::size_t i = 0; i < grid_->size(); ++i) u[i] *= table[i];
    if (mode_ == Mode::Full) {
      Complex* d = down_->data();
      for (std::size_t i = 0; i < grid_->size(); ++i) d[i] *= table[i];
    }
  }

  void momentum_step() {
    up_->forward();
    if (mode_ == Mode::Adiabatic) {
      Complex* u = up_->data();
      for (std::size_t i = 0; i < grid_->size(); ++i) u[i] *= mom_a_[i];
    } else {
      down_->forward();
      Complex* u = up_->data();
      Complex* d = down_->data();
      for (std::size_t i = 0; i < grid_->size(); ++i) {
        const Complex uu = u[i], dd = d[i];
        u[i] = mom_a_[i] * uu + mom_b_[i] * dd;
        d[i] = mom_c_[i] * uu + mom_a_[i] * dd;
      }
    }
    up_->backward();
    if (mode_ == Mode::Full) down_->backward();
  }

  void renormalize() {
    const double nrm = current_norm2();
    if (!(nrm > 0.0)) throw NumericalError("imaginary-time state collapsed to zero");
    const double s = 1.0 / std::sqrt(nrm);
    Complex* u = up_->data();
    for (std::size_t i = 0; i < grid_->size(); ++i) u[i] *= s;
    if (mode_ == Mode::Full) {
      Complex* d = down_->data();
      for (std::size_t i = 0; i < grid_->size(); ++i) d[i] *= s;
    }
  }

  GridPtr grid_;
  ModelParams params_;
  ModelParams params_snapshot_;
  Mode mode_;
  double dt_;
  bool imag_;
  double t0_ = 0.0;
  int steps_ = 0;
  std::unique_ptr<fft::Workspace> up_, down_;
  std::vector<Complex> pos_half_, pos_full_, mom_a_, mom_b_, mom_c_;
};

// ---------------------------------------------------------------------------

/// One Strang step of the full spinor model (position space in/out).
inline QuantumState step_full(const QuantumState& st, const PropagatorConfig& cfg) {
  if (st.mode() != Mode::Full) throw std::invalid_argument("step_full: not a spinor state");
  const double dt = cfg.dt > 0.0 ? cfg.dt : stability_dt(st.grid(), st.params, Mode::Full);
  SplitStepper s(st.grid_ptr(), st.params, Mode::Full, dt);
  s.load(st);
  s.run_block(1);
  return s.snapshot();
}

/// One Strang step of the adiabatic lower-band model.
inline QuantumState step_adiabatic(const QuantumState& st, const PropagatorConfig& cfg) {
  if (st.mode() != Mode::Adiabatic)
    throw std::invalid_argument("step_adiabatic: not a scalar state");
  const double dt =
      cfg.dt > 0.0 ? cfg.dt : stability_dt(st.grid(), st.params, Mode::Adiabatic);
  SplitStepper s(st.grid_ptr(), st.params, Mode::Adiabatic, dt);
  s.load(st);
  s.run_block(1);
  return s.snapshot();
}

using Observer = std::function<void(const QuantumState&)>;

/// Repeated stepping with observer callbacks every cadence steps (step 0
/// included); snapshot count over [0, t_f] is floor(t_f/(k dt)) + 1. Norm
/// drift beyond cfg.norm_tol aborts the run.
inline QuantumState evolve(const QuantumState& st0, const PropagatorConfig& cfg,
                           double t_f, const std::vector<Observer>& observers = {}) {
  if (t_f < 0.0) throw std::invalid_argument("evolve: t_f must be >= 0");
  const double dt =
      cfg.dt > 0.0 ? cfg.dt : stability_dt(st0.grid(), st0.params, cfg.mode);
  const long n_steps = static_cast<long>(std::floor(t_f / dt + 1e-9));
  const int cadence = std::max(1, cfg.observer_cadence);

  auto notify = [&](const QuantumState& s) {
    for (const auto& ob : observers) ob(s);
  };
  notify(st0);
  if (n_steps == 0) return st0;

  SplitStepper stepper(st0.grid_ptr(), st0.params, st0.mode(), dt);
  stepper.load(st0);
  const double norm0 = stepper.current_norm2();

  long done = 0;
  while (done < n_steps) {
    const int blk = static_cast<int>(std::min<long>(cadence, n_steps - done));
    stepper.run_block(blk);
    done += blk;
    const double drift = std::abs(stepper.current_norm2() - norm0);
    if (drift > cfg.norm_tol)
      throw NumericalError("norm drift " + std::to_string(drift) +
                           " exceeds tolerance (unstable dt or grid overflow)");
    if (done % cadence == 0 && done < n_steps) notify(stepper.snapshot());
  }
  QuantumState out = stepper.snapshot();
  if (n_steps % cadence == 0) notify(out);
  return out;
}

// ---------------------------------------------------------------------------
// Quasi-ground-state preparation: imaginary-time relaxation in the shifted
// trap, seeded in the requested minimum of the dual potential. The quench of
// the trap center is modeled by preparing here and evolving in the centered
// trap.

struct PrepResult {
  QuantumState state;
  double energy = 0.0;
  std::uint64_t rng_seed = 0;
  double ring_angle = 0.0;  // azimuth of the ring seed (isotropic mode)
};

namespace detail {

/// <H> with the trap centered at (cx, cy); state must be position space.
double energy_expectation(const QuantumState& st, double cx, double cy);

}  // namespace detail

inline PrepResult prepare_quasi_ground(const ModelParams& params, Mode mode,
                                       WhichMinimum which, GridPtr grid,
                                       std::uint64_t rng_seed = 0,
                                       double converge_tol = 1e-10,
                                       long step_budget = 400000) {
  params.validate();
  const Grid2D& g = *grid;
  PrepResult res;
  res.rng_seed = rng_seed;

  double p0x = 0.0, p0y = 0.0;
  const double v = params.v_max();
  if (which == WhichMinimum::RingRandomPhase) {
    if (!params.isotropic())
      throw std::invalid_argument("prepare: ring seed requires isotropic coupling");
    SplitMix64 rng(derive_seed(rng_seed, 0x5eed));
    res.ring_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    p0x = v * std::cos(res.ring_angle);
    p0y = v * std::sin(res.ring_angle);
  } else if (v > 0.0) {
    const double sgn = which == WhichMinimum::Right ? 1.0 : -1.0;
    if (params.vy >= params.vx)
      p0y = sgn * params.vy;
    else
      p0x = sgn * params.vx;
  }

  // Gaussian seed at the shifted trap center boosted to the chosen minimum.
  const double w = 2.0 * g.h();
  auto seed_fn = [&](double x, double y) {
    const double rx = x - params.xs, ry = y - params.ys;
    return std::polar(std::exp(-(rx * rx + ry * ry) / w),
                      (p0x * x + p0y * y) / g.h());
  };
  ScalarField seed = ScalarField::from_fn(grid, Space::Position, seed_fn);
  seed.normalize();

  QuantumState st{params, 0.0, std::move(seed)};
  if (mode == Mode::Full) {
    SpinorField sp = SpinorField::zero(grid, Space::Position);
    std::array<Complex, 2> chi{Complex{1.0, 0.0}, Complex{}};
    if (v > 0.0) chi = spinor_eigenstate(params, -1, p0x, p0y);
    const ScalarField& sc = st.scalar();
    for (std::size_t i = 0; i < g.size(); ++i) {
      sp.up.values()[i] = chi[0] * sc.values()[i];
      sp.down.values()[i] = chi[1] * sc.values()[i];
    }
    st.field = std::move(sp);
  }

  // Energy span over the grid sets the imaginary-time scale.
  const double vpos_max =
      2.0 * (g.extent_x() + std::hypot(params.xs, params.ys)) *
      (g.extent_x() + std::hypot(params.xs, params.ys));
  const double vmom_span = max_momentum_scale(g, params, mode) + 0.5 * v * v;
  const double espan = std::max(vpos_max + vmom_span, 1.0);

  long used = 0;
  double e_prev = detail::energy_expectation(st, params.xs, params.ys);
  const int probe = 8;
  for (double dtau = 0.2 * g.h() / espan; dtau > 0.01 * g.h() / espan; dtau *= 0.25) {
    SplitStepper s(grid, params, mode, dtau, /*imaginary_time=*/true, params.xs,
                   params.ys);
    s.load(st);
    for (;;) {
      if (used > step_budget)
        throw NumericalError("prepare_quasi_ground: no convergence within budget");
      s.run_block(probe);
      used += probe;
      st = s.snapshot();
      const double e = detail::energy_expectation(st, params.xs, params.ys);
      const double change = std::abs(e - e_prev) / probe;
      e_prev = e;
      if (change < converge_tol * std::max(1.0, std::abs(e))) break;
    }
  }

  if (st.mode() == Mode::Full) {
    SpinorField f = st.spinor();
    f.normalize();
    st.field = std::move(f);
  } else {
    ScalarField f = st.scalar();
    f.normalize();
    st.field = std::move(f);
  }
  st.t = 0.0;
  res.energy = e_prev;
  res.state = std::move(st);
  return res;
}

namespace detail {

inline double energy_expectation(const QuantumState& st, double cx, double cy) {
  const Grid2D& g = st.grid();
  const ModelParams& m = st.params;
  if (st.space() != Space::Position)
    throw std::invalid_argument("energy_expectation: position-space state expected");

  const std::vector<double> rho = st.mode() == Mode::Full ? st.spinor().density()
                                                          : st.scalar().density();
  double e_pos = 0.0, mass = 0.0;
  for (int ix = 0; ix < g.n(); ++ix)
    for (int iy = 0; iy < g.n(); ++iy) {
      const double rx = g.x(ix) - cx, ry = g.x(iy) - cy;
      const double r = rho[g.idx(ix, iy)];
      e_pos += 0.5 * (rx * rx + ry * ry) * r;
      mass += r;
    }
  const double area = g.cell_area(Space::Position);
  e_pos *= area;
  mass *= area;

  double e_mom = 0.0;
  if (st.mode() == Mode::Adiabatic) {
    const ScalarField phi = transform(st.scalar(), Transform::ToMomentum);
    for (int i = 0; i < g.n(); ++i)
      for (int j = 0; j < g.n(); ++j)
        e_mom += adiabatic_potential(m, -1, g.p(i), g.p(j)) *
                 std::norm(phi.values()[g.idx(i, j)]);
    e_mom *= g.cell_area(Space::Momentum);
  } else {
    const SpinorField phi = transform(st.spinor(), Transform::ToMomentum);
    for (int i = 0; i < g.n(); ++i)
      for (int j = 0; j < g.n(); ++j) {
        const std::size_t id = g.idx(i, j);
        const Complex u = phi.up.values()[id], d = phi.down.values()[id];
        const double px = g.p(i), py = g.p(j);
        const double kin = 0.5 * (px * px + py * py) * (std::norm(u) + std::norm(d));
        const Complex ud = std::conj(u) * d;
        const double sx = 2.0 * ud.real(), sy = 2.0 * ud.imag();
        e_mom += kin - (m.vx * px * sx + m.vy * py * sy);
      }
    e_mom *= g.cell_area(Space::Momentum);
  }
  return (e_pos + e_mom) / std::max(mass, 1e-300);
}

}  // namespace detail

}  // namespace soqdyn
