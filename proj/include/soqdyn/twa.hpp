#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "soqdyn/classical.hpp"
#include "soqdyn/qprop.hpp"
#include "soqdyn/rng.hpp"

namespace soqdyn::twa {

/// N classical phase points sampled from a quantum state's marginals.
struct Ensemble {
  std::vector<classical::PhasePoint> points;
  std::uint64_t rng_seed = 0;
};

namespace detail {

/// Flattened-CDF cell sampler with intra-cell jitter (avoids grid-artifact
/// striping in sections).
class CellSampler {
 public:
  CellSampler(const Grid2D& g, const std::vector<double>& rho) : n_(g.n()) {
    cdf_.resize(rho.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
      acc += std::max(0.0, rho[i]);
      cdf_[i] = acc;
    }
    total_ = acc;
    if (!(total_ > 0.0)) throw std::invalid_argument("sampler: empty density");
  }

  /// Returns cell indices (i, j) for a uniform draw u in [0,1).
  std::pair<int, int> draw(double u) const {
    const double target = u * total_;
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), target);
    const std::size_t flat = std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1);
    return {static_cast<int>(flat / n_), static_cast<int>(flat % n_)};
  }

 private:
  int n_;
  double total_ = 0.0;
  std::vector<double> cdf_;
};

}  // namespace detail

/// Positions drawn from |Psi(x,y)|^2 and momenta independently from
/// |Phi(px,py)|^2 (the reference prescription; cross correlations are
/// deliberately not sampled). Deterministic given rng_seed.
inline Ensemble sample_initial(const QuantumState& st, int n_points,
                               std::uint64_t rng_seed) {
  if (n_points < 1) throw std::invalid_argument("sample_initial: N >= 1 required");
  if (st.space() != Space::Position)
    throw std::invalid_argument("sample_initial: position-space state expected");
  const Grid2D& g = st.grid();

  const std::vector<double> rho_pos =
      st.mode() == Mode::Full ? st.spinor().density() : st.scalar().density();
  std::vector<double> rho_mom;
  if (st.mode() == Mode::Full)
    rho_mom = transform(st.spinor(), Transform::ToMomentum).density();
  else
    rho_mom = transform(st.scalar(), Transform::ToMomentum).density();

  detail::CellSampler pos(g, rho_pos), mom(g, rho_mom);
  SplitMix64 rng(rng_seed);
  Ensemble ens;
  ens.rng_seed = rng_seed;
  ens.points.resize(n_points);
  for (int k = 0; k < n_points; ++k) {
    const auto [ix, iy] = pos.draw(rng.uniform());
    const double x = g.x(ix) + (rng.uniform() - 0.5) * g.dx();
    const double y = g.x(iy) + (rng.uniform() - 0.5) * g.dx();
    const auto [jx, jy] = mom.draw(rng.uniform());
    const double px = g.p(jx) + (rng.uniform() - 0.5) * g.dp();
    const double py = g.p(jy) + (rng.uniform() - 0.5) * g.dp();
    ens.points[k] = {x, y, px, py};
  }
  return ens;
}

struct PropagationResult {
  Ensemble ensemble;             // points at t_f, failed points excluded
  std::vector<int> failed;       // indices of excluded points
};

/// Every point integrated independently under the classical lower-band flow;
/// per-point failures are excluded and counted, never silently dropped.
inline PropagationResult propagate_ensemble(const ModelParams& m, const Ensemble& ens,
                                            double t_f, double tol = 1e-10) {
  PropagationResult res;
  res.ensemble.rng_seed = ens.rng_seed;
  res.ensemble.points.reserve(ens.points.size());
  const double check_dt = std::max(t_f / 16.0, 1e-3);
  for (std::size_t i = 0; i < ens.points.size(); ++i) {
    try {
      const classical::Trajectory tr =
          classical::integrate(m, ens.points[i], t_f, tol, check_dt);
      res.ensemble.points.push_back(tr.z.back());
    } catch (const std::exception&) {
      res.failed.push_back(static_cast<int>(i));
    }
  }
  return res;
}

struct EnsembleDensity {
  std::vector<double> values;  // normalized so sum * cell_area = 1
  long dropped = 0;            // points outside the grid box
};

inline EnsembleDensity ensemble_density(const Ensemble& ens, const Grid2D& g,
                                        Space space) {
  EnsembleDensity d;
  d.values.assign(g.size(), 0.0);
  const double step = space == Space::Position ? g.dx() : g.dp();
  const double lo = space == Space::Position ? -g.extent_x() : g.p(0);
  long inside = 0;
  for (const auto& z : ens.points) {
    const double a = space == Space::Position ? z.x : z.px;
    const double b = space == Space::Position ? z.y : z.py;
    const int i = static_cast<int>(std::floor((a - lo) / step + 0.5));
    const int j = static_cast<int>(std::floor((b - lo) / step + 0.5));
    if (i < 0 || i >= g.n() || j < 0 || j >= g.n()) {
      ++d.dropped;
      continue;
    }
    d.values[g.idx(i, j)] += 1.0;
    ++inside;
  }
  if (inside > 0) {
    const double norm = 1.0 / (inside * g.cell_area(space));
    for (double& v : d.values) v *= norm;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Stroboscopic ensemble moments.

struct EnsembleMoments {
  double t = 0.0;
  double mean_x = 0.0, mean_y = 0.0, mean_px = 0.0, mean_py = 0.0;
  double var_x = 0.0, var_y = 0.0, var_px = 0.0, var_py = 0.0;
  double mean_energy = 0.0;
  long alive = 0;
};

/// Time series of ensemble means/variances on a uniform sample grid.
/// Accumulation runs in fixed point order, so results are deterministic.
inline std::vector<EnsembleMoments> moment_series(const ModelParams& m,
                                                  const Ensemble& ens, double t_f,
                                                  double sample_dt, double tol = 1e-10,
                                                  std::vector<int>* failed = nullptr) {
  const int nt = static_cast<int>(std::floor(t_f / sample_dt + 1e-9)) + 1;
  std::vector<EnsembleMoments> acc(nt);
  for (int k = 0; k < nt; ++k) acc[k].t = std::min(k * sample_dt, t_f);

  for (std::size_t i = 0; i < ens.points.size(); ++i) {
    classical::Trajectory tr;
    try {
      tr = classical::integrate(m, ens.points[i], t_f, tol, sample_dt);
    } catch (const std::exception&) {
      if (failed) failed->push_back(static_cast<int>(i));
      continue;
    }
    for (int k = 0; k < nt && k < static_cast<int>(tr.z.size()); ++k) {
      const auto& z = tr.z[k];
      auto& a = acc[k];
      a.mean_x += z.x;
      a.mean_y += z.y;
      a.mean_px += z.px;
      a.mean_py += z.py;
      a.var_x += z.x * z.x;
      a.var_y += z.y * z.y;
      a.var_px += z.px * z.px;
      a.var_py += z.py * z.py;
      a.mean_energy += classical::energy(m, z);
      a.alive += 1;
    }
  }
  for (auto& a : acc) {
    if (a.alive == 0) continue;
    const double inv = 1.0 / a.alive;
    a.mean_x *= inv;
    a.mean_y *= inv;
    a.mean_px *= inv;
    a.mean_py *= inv;
    a.mean_energy *= inv;
    a.var_x = std::max(0.0, a.var_x * inv - a.mean_x * a.mean_x);
    a.var_y = std::max(0.0, a.var_y * inv - a.mean_y * a.mean_y);
    a.var_px = std::max(0.0, a.var_px * inv - a.mean_px * a.mean_px);
    a.var_py = std::max(0.0, a.var_py * inv - a.mean_py * a.mean_py);
  }
  return acc;
}

inline void write_ensemble_csv(const std::string& path,
                               const std::vector<EnsembleMoments>& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_ensemble_csv: cannot open " + path);
  out << "t mean_x mean_y mean_px mean_py var_x var_y var_px var_py\n";
  char line[400];
  for (const auto& a : series) {
    std::snprintf(line, sizeof(line),
                  "%.12g %.12g %.12g %.12g %.12g %.12g %.12g %.12g %.12g\n", a.t,
                  a.mean_x, a.mean_y, a.mean_px, a.mean_py, a.var_x, a.var_y, a.var_px,
                  a.var_py);
    out << line;
  }
}

}  // namespace soqdyn::twa
