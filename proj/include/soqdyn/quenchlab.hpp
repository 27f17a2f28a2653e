#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "soqdyn/classical.hpp"
#include "soqdyn/observables.hpp"
#include "soqdyn/qprop.hpp"
#include "soqdyn/twa.hpp"

#ifndef SOQDYN_BUILD_ID
#define SOQDYN_BUILD_ID "unknown"
#endif

namespace soqdyn::lab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Quench, Ehrenfest, Poincare, Lyapunov, Island, Twa };
enum class DtPolicy { GridRule, ShellRule };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Quench;
  ModelParams params;            // vx vy xs ys h
  int n = 256;
  double extent = 0.0;           // 0 = auto from the sizing rule
  Mode mode = Mode::Adiabatic;
  double t_f = 100.0;
  double dt = 0.0;               // 0 = auto from dt_policy
  DtPolicy dt_policy = DtPolicy::GridRule;
  int cadence = 100;             // observer cadence in steps
  int twa_n = 0;                 // TWA ensemble size (0 = no TWA twin)
  std::uint64_t seed = 1;
  std::string out = "soqdyn_out";
  std::vector<double> h_list = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  double energy = 0.0;           // shell energy for poincare/lyapunov
  int nseeds = 18;
  classical::SectionPlane plane = classical::SectionPlane::PyZero;
  double tol = 1e-10;            // classical integrator tolerance
  double island_frac = 0.25;
  double island_growth = 0.10;
  bool fftw_measure = false;
  WhichMinimum which = WhichMinimum::Right;
};

// ---------------------------------------------------------------------------
// key = value config files ('#' comments). The manifest written by every run
// uses the same format, so a manifest re-runs the bundle exactly.

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw ConfigError("config: bad numeric value for '" + key + "': " + v);
  }
}

inline long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw ConfigError("config: bad integer value for '" + key + "': " + v);
  }
}

}  // namespace detail

inline const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Quench: return "quench";
    case ExperimentKind::Ehrenfest: return "ehrenfest";
    case ExperimentKind::Poincare: return "poincare";
    case ExperimentKind::Lyapunov: return "lyapunov";
    case ExperimentKind::Island: return "island";
    case ExperimentKind::Twa: return "twa";
  }
  return "quench";
}

inline ExperimentKind kind_from_name(const std::string& s) {
  if (s == "quench") return ExperimentKind::Quench;
  if (s == "ehrenfest") return ExperimentKind::Ehrenfest;
  if (s == "poincare") return ExperimentKind::Poincare;
  if (s == "lyapunov") return ExperimentKind::Lyapunov;
  if (s == "island") return ExperimentKind::Island;
  if (s == "twa") return ExperimentKind::Twa;
  throw ConfigError("config: unknown experiment kind '" + s + "'");
}

inline void apply_kv(ExperimentConfig& c, const std::string& key,
                     const std::string& val) {
  using detail::parse_double;
  using detail::parse_long;
  if (key == "kind") c.kind = kind_from_name(val);
  else if (key == "vx") c.params.vx = parse_double(key, val);
  else if (key == "vy") c.params.vy = parse_double(key, val);
  else if (key == "xs") c.params.xs = parse_double(key, val);
  else if (key == "ys") c.params.ys = parse_double(key, val);
  else if (key == "h") c.params.h = parse_double(key, val);
  else if (key == "n") c.n = static_cast<int>(parse_long(key, val));
  else if (key == "extent") c.extent = parse_double(key, val);
  else if (key == "mode") {
    if (val == "full") c.mode = Mode::Full;
    else if (val == "adiabatic") c.mode = Mode::Adiabatic;
    else throw ConfigError("config: mode must be 'full' or 'adiabatic'");
  } else if (key == "tf") c.t_f = parse_double(key, val);
  else if (key == "dt") c.dt = parse_double(key, val);
  else if (key == "dt_policy") {
    if (val == "grid") c.dt_policy = DtPolicy::GridRule;
    else if (val == "shell") c.dt_policy = DtPolicy::ShellRule;
    else throw ConfigError("config: dt_policy must be 'grid' or 'shell'");
  } else if (key == "cadence") c.cadence = static_cast<int>(parse_long(key, val));
  else if (key == "twa_n") c.twa_n = static_cast<int>(parse_long(key, val));
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_long(key, val));
  else if (key == "out") c.out = val;
  else if (key == "h_list") {
    c.h_list.clear();
    std::stringstream ss(val);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!detail::trim(tok).empty()) c.h_list.push_back(parse_double(key, detail::trim(tok)));
  } else if (key == "energy") c.energy = parse_double(key, val);
  else if (key == "nseeds") c.nseeds = static_cast<int>(parse_long(key, val));
  else if (key == "plane") {
    if (val == "y") c.plane = classical::SectionPlane::YZero;
    else if (val == "py") c.plane = classical::SectionPlane::PyZero;
    else throw ConfigError("config: plane must be 'y' or 'py'");
  } else if (key == "tol") c.tol = parse_double(key, val);
  else if (key == "island_frac") c.island_frac = parse_double(key, val);
  else if (key == "island_growth") c.island_growth = parse_double(key, val);
  else if (key == "fftw") {
    if (val == "measure") c.fftw_measure = true;
    else if (val == "estimate") c.fftw_measure = false;
    else throw ConfigError("config: fftw must be 'estimate' or 'measure'");
  } else if (key == "which") {
    if (val == "left") c.which = WhichMinimum::Left;
    else if (val == "right") c.which = WhichMinimum::Right;
    else if (val == "ring") c.which = WhichMinimum::RingRandomPhase;
    else throw ConfigError("config: which must be 'left', 'right' or 'ring'");
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

inline std::vector<std::pair<std::string, std::string>> to_kv(
    const ExperimentConfig& c) {
  using detail::fmt_double;
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("kind", kind_name(c.kind));
  kv.emplace_back("vx", fmt_double(c.params.vx));
  kv.emplace_back("vy", fmt_double(c.params.vy));
  kv.emplace_back("xs", fmt_double(c.params.xs));
  kv.emplace_back("ys", fmt_double(c.params.ys));
  kv.emplace_back("h", fmt_double(c.params.h));
  kv.emplace_back("n", std::to_string(c.n));
  kv.emplace_back("extent", fmt_double(c.extent));
  kv.emplace_back("mode", c.mode == Mode::Full ? "full" : "adiabatic");
  kv.emplace_back("tf", fmt_double(c.t_f));
  kv.emplace_back("dt", fmt_double(c.dt));
  kv.emplace_back("dt_policy", c.dt_policy == DtPolicy::GridRule ? "grid" : "shell");
  kv.emplace_back("cadence", std::to_string(c.cadence));
  kv.emplace_back("twa_n", std::to_string(c.twa_n));
  kv.emplace_back("seed", std::to_string(c.seed));
  kv.emplace_back("out", c.out);
  std::string hl;
  for (std::size_t i = 0; i < c.h_list.size(); ++i)
    hl += (i ? "," : "") + fmt_double(c.h_list[i]);
  kv.emplace_back("h_list", hl);
  kv.emplace_back("energy", fmt_double(c.energy));
  kv.emplace_back("nseeds", std::to_string(c.nseeds));
  kv.emplace_back("plane", c.plane == classical::SectionPlane::YZero ? "y" : "py");
  kv.emplace_back("tol", fmt_double(c.tol));
  kv.emplace_back("island_frac", fmt_double(c.island_frac));
  kv.emplace_back("island_growth", fmt_double(c.island_growth));
  kv.emplace_back("fftw", c.fftw_measure ? "measure" : "estimate");
  kv.emplace_back("which", c.which == WhichMinimum::Left     ? "left"
                           : c.which == WhichMinimum::Right  ? "right"
                                                             : "ring");
  return kv;
}

inline void load_config_file(ExperimentConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: missing '=' at " + path + ":" + std::to_string(lineno));
    apply_kv(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
}

inline void write_manifest(const std::string& path, const ExperimentConfig& resolved,
                           const std::vector<std::pair<std::string, std::string>>& info) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
  out << "# soqdyn run manifest (re-runnable as --config)\n";
  out << "# build = " << SOQDYN_BUILD_ID << "\n";
  for (const auto& [k, v] : info) out << "# " << k << " = " << v << "\n";
  for (const auto& [k, v] : to_kv(resolved)) out << k << " = " << v << "\n";
}

// ---------------------------------------------------------------------------
// Grid and time-step resolution.

struct ResolvedRun {
  GridPtr grid;
  double dt = 0.0;
  double e_estimate = 0.0;
  GridSizing sizing;
};

/// Pre-quench energy estimate: trap displacement plus the dual-potential
/// minimum plus a zero-point allowance.
inline double quench_energy_estimate(const ModelParams& m) {
  const double v = m.v_max();
  return 0.5 * (m.xs * m.xs + m.ys * m.ys) - 0.5 * v * v + 2.0 * m.h;
}

inline ResolvedRun resolve_run(const ExperimentConfig& cfg) {
  cfg.params.validate();
  const ModelParams& m = cfg.params;
  ResolvedRun r;
  r.e_estimate = quench_energy_estimate(m);

  double extent = cfg.extent;
  if (extent <= 0.0) {
    r.sizing = plan_grid_extents(cfg.n, m.h, m.v_max(), r.e_estimate);
    extent = r.sizing.extent_x;
    // The initial packet must fit regardless of how the shell is balanced:
    // its center (xs, ys) in position, the chosen minimum (|p| = v_max) in
    // momentum, plus a few packet widths.
    const double width = 4.0 * std::sqrt(m.h);
    const double init_x = std::max(std::abs(m.xs), std::abs(m.ys)) + width;
    const double init_p = m.v_max() + width;
    const double area = std::numbers::pi * m.h * cfg.n / 2.0;
    const double x_hi = area / init_p;
    if (init_x > x_hi) {
      throw ConfigError(
          "grid: n = " + std::to_string(cfg.n) +
          " cannot hold the initial packet at h = " + detail::fmt_double(m.h) +
          " (need n >= " +
          std::to_string(static_cast<int>(std::ceil(2.0 * init_x * init_p /
                                                    (std::numbers::pi * m.h)))) +
          ")");
    }
    extent = std::clamp(extent, init_x, x_hi);
  }
  r.grid = make_grid(cfg.n, extent, m.h);

  if (cfg.dt > 0.0) {
    r.dt = cfg.dt;
  } else if (cfg.dt_policy == DtPolicy::GridRule) {
    r.dt = stability_dt(*r.grid, m, cfg.mode);
  } else {
    r.dt = shell_dt(m, std::max(r.e_estimate, 0.5 * m.h), cfg.mode);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Quench run: prepare in the shifted trap, evolve in the centered trap.

struct QuenchOutput {
  ExperimentConfig resolved;
  GridPtr grid;
  double dt = 0.0;
  PrepResult prep;
  double quench_energy = 0.0;
  std::vector<MomentRecord> records;
  QuantumState final_state;
  std::vector<twa::EnsembleMoments> twa_series;
  twa::Ensemble twa_final;
  long twa_failed = 0;

  QuenchOutput() : final_state{ModelParams{}, 0.0, ScalarField(make_grid(8, 1, 1), Space::Position)} {}
};

namespace detail {

inline void dump_state_densities(const std::string& dir, const std::string& tag,
                                 const QuantumState& st) {
  const Grid2D& g = st.grid();
  const std::vector<double> rho_pos =
      st.mode() == Mode::Full ? st.spinor().density() : st.scalar().density();
  write_density(dir + "/density_pos_" + tag + ".dump", g, Space::Position, rho_pos);
  std::vector<double> rho_mom;
  if (st.mode() == Mode::Full)
    rho_mom = transform(st.spinor(), Transform::ToMomentum).density();
  else
    rho_mom = transform(st.scalar(), Transform::ToMomentum).density();
  write_density(dir + "/density_mom_" + tag + ".dump", g, Space::Momentum, rho_mom);
}

inline void write_bloch_csv(const std::string& path,
                            const std::vector<MomentRecord>& recs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "t Rx Ry Rz\n";
  char line[160];
  for (const auto& r : recs) {
    std::snprintf(line, sizeof(line), "%.12g %.12g %.12g %.12g\n", r.t, r.bloch.rx,
                  r.bloch.ry, r.bloch.rz);
    out << line;
  }
}

}  // namespace detail

inline QuenchOutput run_quench(const ExperimentConfig& cfg, bool write_files = true) {
  fft::planning_mode() =
      cfg.fftw_measure ? fft::Planning::Measure : fft::Planning::Estimate;
  ResolvedRun rr = resolve_run(cfg);

  QuenchOutput out;
  out.grid = rr.grid;
  out.dt = rr.dt;
  out.prep = prepare_quasi_ground(cfg.params, cfg.mode, cfg.which, rr.grid,
                                  derive_seed(cfg.seed, 0x11));
  out.quench_energy = detail::energy_expectation(out.prep.state, 0.0, 0.0);

  PropagatorConfig pc;
  pc.dt = rr.dt;
  pc.mode = cfg.mode;
  pc.observer_cadence = cfg.cadence;

  std::vector<Observer> obs;
  obs.push_back([&](const QuantumState& s) { out.records.push_back(moments(s)); });
  out.final_state = evolve(out.prep.state, pc, cfg.t_f, obs);

  out.resolved = cfg;
  out.resolved.extent = rr.grid->extent_x();
  out.resolved.dt = rr.dt;

  if (cfg.twa_n > 0) {
    const twa::Ensemble ens =
        twa::sample_initial(out.prep.state, cfg.twa_n, derive_seed(cfg.seed, 0x22));
    const double sample_dt = cfg.cadence * rr.dt;
    std::vector<int> failed;
    out.twa_series =
        twa::moment_series(cfg.params, ens, cfg.t_f, sample_dt, cfg.tol, &failed);
    auto prop = twa::propagate_ensemble(cfg.params, ens, cfg.t_f, cfg.tol);
    out.twa_final = std::move(prop.ensemble);
    out.twa_failed = static_cast<long>(prop.failed.size());
  }

  if (write_files) {
    std::filesystem::create_directories(cfg.out);
    std::vector<std::pair<std::string, std::string>> info{
        {"resolved_dt", detail::fmt_double(rr.dt)},
        {"prep_energy_shifted_trap", detail::fmt_double(out.prep.energy)},
        {"quench_energy", detail::fmt_double(out.quench_energy)},
        {"prep_rng_seed", std::to_string(out.prep.rng_seed)},
        {"prep_ring_angle", detail::fmt_double(out.prep.ring_angle)},
        {"e_estimate", detail::fmt_double(rr.e_estimate)},
        {"extent_p", detail::fmt_double(rr.grid->extent_p())}};
    write_manifest(cfg.out + "/manifest.txt", out.resolved, info);
    write_moments_csv(cfg.out + "/moments.csv", out.records);
    detail::write_bloch_csv(cfg.out + "/bloch.csv", out.records);
    detail::dump_state_densities(cfg.out, "t0", out.prep.state);
    detail::dump_state_densities(cfg.out, "tf", out.final_state);
    if (cfg.twa_n > 0) {
      twa::write_ensemble_csv(cfg.out + "/twa_moments.csv", out.twa_series);
      const auto dp = twa::ensemble_density(out.twa_final, *rr.grid, Space::Position);
      write_density(cfg.out + "/twa_density_pos_tf.dump", *rr.grid, Space::Position,
                    dp.values);
      const auto dm = twa::ensemble_density(out.twa_final, *rr.grid, Space::Momentum);
      write_density(cfg.out + "/twa_density_mom_tf.dump", *rr.grid, Space::Momentum,
                    dm.values);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Island runs: same pipeline plus a thermalization verdict.

enum class Verdict { Regular, Thermalized };

struct IslandVerdict {
  Verdict verdict = Verdict::Thermalized;
  double occupied_fraction = 0.0;  // Dx*Dy over the accessible-area estimate
  double tail_growth = 0.0;        // relative Dx growth across the last quarter
};

/// The accessible 4D volume estimate uses uniform-box standard deviations:
/// a state equidistributed over [-a, a] has std a/sqrt(3), so the per-plane
/// area scale is (x_max * p_max)/3.
inline IslandVerdict island_verdict(const std::vector<MomentRecord>& recs,
                                    const AccessibleRegion& reg, double frac_thresh,
                                    double growth_thresh) {
  IslandVerdict v;
  if (recs.size() < 8) throw std::invalid_argument("island_verdict: too few records");
  const double xmax = std::sqrt(std::max(0.0, reg.position_radius2));
  const double ax = xmax * reg.px_abs_max / 3.0;
  const double ay = xmax * reg.py_abs_max / 3.0;
  const auto& last = recs.back();
  v.occupied_fraction = (last.area_x * last.area_y) / std::max(ax * ay, 1e-300);

  const std::size_t nrec = recs.size();
  auto mean_dx = [&](std::size_t lo, std::size_t hi) {
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += recs[i].area_x;
    return acc / std::max<std::size_t>(1, hi - lo);
  };
  const double m1 = mean_dx(nrec - nrec / 4, nrec - nrec / 8);
  const double m2 = mean_dx(nrec - nrec / 8, nrec);
  v.tail_growth = (m2 - m1) / std::max(m1, 1e-300);

  const bool small = v.occupied_fraction < frac_thresh;
  const bool flat = v.tail_growth < growth_thresh;
  v.verdict = (small && flat) ? Verdict::Regular : Verdict::Thermalized;
  return v;
}

struct IslandOutput {
  QuenchOutput quench;
  IslandVerdict verdict;
};

inline IslandOutput run_island(const ExperimentConfig& cfg, bool write_files = true) {
  IslandOutput out;
  out.quench = run_quench(cfg, write_files);
  const AccessibleRegion reg =
      accessible_region(cfg.params, out.quench.quench_energy);
  out.verdict = island_verdict(out.quench.records, reg, cfg.island_frac,
                               cfg.island_growth);
  if (write_files) {
    std::ofstream vf(cfg.out + "/verdict.txt");
    vf << (out.verdict.verdict == Verdict::Regular ? "REGULAR" : "THERMALIZED")
       << "\noccupied_fraction " << out.verdict.occupied_fraction << "\ntail_growth "
       << out.verdict.tail_growth << "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ehrenfest h-scaling experiment.

struct EhrenfestResult {
  std::vector<double> hs;
  std::vector<std::vector<std::pair<double, double>>> curves;  // (t, Dx) per h
  double lambda = 0.0;
  double spread_fit = 0.0;
  double spread_noshift = 0.0;
  bool boundary_flag = false;
  std::vector<double> onsets;  // Dx doubling times, -1 when never reached
};

namespace detail {

inline double interp_curve(const std::vector<std::pair<double, double>>& c, double t) {
  if (c.empty()) return 0.0;
  if (t <= c.front().first) return c.front().second;
  if (t >= c.back().first) return c.back().second;
  std::size_t lo = 0, hi = c.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (c[mid].first <= t ? lo : hi) = mid;
  }
  const double u = (t - c[lo].first) / (c[hi].first - c[lo].first);
  return (1.0 - u) * c[lo].second + u * c[hi].second;
}

}  // namespace detail

/// Spread S(lambda): mean over a shifted-time grid of the across-h variance
/// of Dx(t - log(h)/lambda). lambda = infinity gives the unshifted spread.
inline double ehrenfest_spread(
    const std::vector<double>& hs,
    const std::vector<std::vector<std::pair<double, double>>>& curves, double lambda) {
  const std::size_t m = hs.size();
  double t_lo = -std::numeric_limits<double>::max();
  double t_hi = std::numeric_limits<double>::max();
  std::vector<double> delta(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (std::isfinite(lambda)) delta[i] = std::log(hs[i]) / lambda;
    t_lo = std::max(t_lo, curves[i].front().first + delta[i]);
    t_hi = std::min(t_hi, curves[i].back().first + delta[i]);
  }
  if (!(t_hi > t_lo)) return std::numeric_limits<double>::max();
  const int nt = 256;
  double acc = 0.0;
  for (int k = 0; k < nt; ++k) {
    const double t = t_lo + (t_hi - t_lo) * (k + 0.5) / nt;
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double v = detail::interp_curve(curves[i], t - delta[i]);
      s1 += v;
      s2 += v * v;
    }
    acc += s2 / m - (s1 / m) * (s1 / m);
  }
  return acc / nt;
}

inline double golden_section_min(const std::function<double(double)>& f, double a,
                                 double b, int iters = 80) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters && (b - a) > 1e-8; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

inline EhrenfestResult fit_ehrenfest_lambda(
    const std::vector<double>& hs,
    const std::vector<std::vector<std::pair<double, double>>>& curves,
    double lambda_lo = 0.02, double lambda_hi = 1.0) {
  EhrenfestResult res;
  res.hs = hs;
  res.curves = curves;
  auto spread = [&](double l) { return ehrenfest_spread(hs, curves, l); };
  res.lambda = golden_section_min(spread, lambda_lo, lambda_hi);
  res.spread_fit = spread(res.lambda);
  res.spread_noshift = ehrenfest_spread(hs, curves,
                                        std::numeric_limits<double>::infinity());
  res.boundary_flag = res.lambda < lambda_lo + 0.01 * (lambda_hi - lambda_lo) ||
                      res.lambda > lambda_hi - 0.01 * (lambda_hi - lambda_lo);
  for (const auto& c : curves) {
    const double d0 = c.front().second;
    double onset = -1.0;
    for (const auto& [t, d] : c)
      if (d > 2.0 * d0) {
        onset = t;
        break;
      }
    res.onsets.push_back(onset);
  }
  return res;
}

inline EhrenfestResult run_ehrenfest(const ExperimentConfig& cfg,
                                     bool write_files = true) {
  if (cfg.h_list.size() < 3)
    throw ConfigError("ehrenfest: at least 3 h values required");
  if (cfg.mode != Mode::Adiabatic)
    throw ConfigError("ehrenfest: adiabatic mode required");

  std::vector<std::vector<std::pair<double, double>>> curves;
  std::vector<std::vector<MomentRecord>> all_records;
  if (write_files) std::filesystem::create_directories(cfg.out);

  for (double h : cfg.h_list) {
    ExperimentConfig sub = cfg;
    sub.params.h = h;
    sub.twa_n = 0;
    sub.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(h * 1024));
    QuenchOutput q = run_quench(sub, false);
    std::vector<std::pair<double, double>> curve;
    curve.reserve(q.records.size());
    for (const auto& r : q.records) curve.emplace_back(r.t, r.area_x);
    curves.push_back(std::move(curve));
    all_records.push_back(std::move(q.records));
    if (write_files) {
      char name[64];
      std::snprintf(name, sizeof(name), "/moments_h%g.csv", h);
      write_moments_csv(cfg.out + name, all_records.back());
    }
  }

  EhrenfestResult res = fit_ehrenfest_lambda(cfg.h_list, curves);
  if (write_files) {
    std::vector<std::pair<std::string, std::string>> info{
        {"lambda_fit", detail::fmt_double(res.lambda)},
        {"spread_fit", detail::fmt_double(res.spread_fit)},
        {"spread_noshift", detail::fmt_double(res.spread_noshift)},
        {"fit_boundary_flag", res.boundary_flag ? "1" : "0"}};
    write_manifest(cfg.out + "/manifest.txt", cfg, info);
    std::ofstream fit(cfg.out + "/ehrenfest_fit.txt");
    fit << "lambda " << res.lambda << "\nspread_fit " << res.spread_fit
        << "\nspread_noshift " << res.spread_noshift << "\nboundary_flag "
        << res.boundary_flag << "\n";
    for (std::size_t i = 0; i < res.hs.size(); ++i)
      fit << "onset_h" << res.hs[i] << " " << res.onsets[i] << "\n";
  }
  return res;
}

// ---------------------------------------------------------------------------
// Classical experiment wrappers.

struct PoincareOutput {
  std::vector<classical::PhasePoint> seeds;
  std::vector<std::vector<classical::SectionPoint>> sections;
};

inline PoincareOutput run_poincare(const ExperimentConfig& cfg,
                                   bool write_files = true) {
  PoincareOutput out;
  if (cfg.nseeds > 0) {
    out.seeds = classical::sample_energy_shell(cfg.params, cfg.energy, cfg.nseeds,
                                               derive_seed(cfg.seed, 0x33));
    out.sections =
        classical::poincare_section(cfg.params, out.seeds, cfg.plane, cfg.t_f, cfg.tol);
  }
  if (write_files) {
    std::filesystem::create_directories(cfg.out);
    const std::string tag = cfg.plane == classical::SectionPlane::YZero ? "y" : "py";
    classical::write_section(cfg.out + "/section_" + tag + ".txt", out.sections);
    std::ofstream sf(cfg.out + "/seeds.txt");
    sf << "# x y px py\n";
    for (const auto& z : out.seeds)
      sf << z.x << " " << z.y << " " << z.px << " " << z.py << "\n";
    write_manifest(cfg.out + "/manifest.txt", cfg, {});
  }
  return out;
}

struct LyapunovOutput {
  std::vector<classical::PhasePoint> seeds;
  std::vector<classical::LyapunovResult> results;
};

inline LyapunovOutput run_lyapunov(const ExperimentConfig& cfg,
                                   bool write_files = true) {
  LyapunovOutput out;
  if (cfg.nseeds > 0) {
    out.seeds = classical::sample_energy_shell(cfg.params, cfg.energy, cfg.nseeds,
                                               derive_seed(cfg.seed, 0x44));
    for (const auto& z : out.seeds)
      out.results.push_back(classical::max_lyapunov(cfg.params, z, cfg.t_f, 0.5, cfg.tol));
  }
  if (write_files) {
    std::filesystem::create_directories(cfg.out);
    for (std::size_t i = 0; i < out.results.size(); ++i)
      classical::write_lyapunov_series(
          cfg.out + "/lyapunov_" + std::to_string(i) + ".txt", out.results[i]);
    std::ofstream sf(cfg.out + "/lyapunov_summary.txt");
    sf << "# seed_index lambda converged\n";
    for (std::size_t i = 0; i < out.results.size(); ++i)
      sf << i << " " << out.results[i].lambda << " " << out.results[i].converged
         << "\n";
    write_manifest(cfg.out + "/manifest.txt", cfg, {});
  }
  return out;
}

/// Standalone TWA bundle: prepare, sample, propagate classically.
struct TwaOutput {
  PrepResult prep;
  std::vector<twa::EnsembleMoments> series;
  twa::Ensemble final_ensemble;
  long failed = 0;
};

inline TwaOutput run_twa(const ExperimentConfig& cfg, bool write_files = true) {
  fft::planning_mode() =
      cfg.fftw_measure ? fft::Planning::Measure : fft::Planning::Estimate;
  ResolvedRun rr = resolve_run(cfg);
  TwaOutput out;
  out.prep = prepare_quasi_ground(cfg.params, cfg.mode, cfg.which, rr.grid,
                                  derive_seed(cfg.seed, 0x11));
  const int n_pts = cfg.twa_n > 0 ? cfg.twa_n : 10000;
  const twa::Ensemble ens =
      twa::sample_initial(out.prep.state, n_pts, derive_seed(cfg.seed, 0x22));
  const double sample_dt = std::max(cfg.t_f / 512.0, 1e-3);
  std::vector<int> failed;
  out.series = twa::moment_series(cfg.params, ens, cfg.t_f, sample_dt, cfg.tol, &failed);
  auto prop = twa::propagate_ensemble(cfg.params, ens, cfg.t_f, cfg.tol);
  out.final_ensemble = std::move(prop.ensemble);
  out.failed = static_cast<long>(prop.failed.size());
  if (write_files) {
    std::filesystem::create_directories(cfg.out);
    twa::write_ensemble_csv(cfg.out + "/twa_moments.csv", out.series);
    const auto dp = twa::ensemble_density(out.final_ensemble, *rr.grid, Space::Position);
    write_density(cfg.out + "/twa_density_pos_tf.dump", *rr.grid, Space::Position,
                  dp.values);
    const auto dm = twa::ensemble_density(out.final_ensemble, *rr.grid, Space::Momentum);
    write_density(cfg.out + "/twa_density_mom_tf.dump", *rr.grid, Space::Momentum,
                  dm.values);
    std::vector<std::pair<std::string, std::string>> info{
        {"twa_failed", std::to_string(out.failed)},
        {"prep_energy_shifted_trap", detail::fmt_double(out.prep.energy)}};
    write_manifest(cfg.out + "/manifest.txt", cfg, info);
  }
  return out;
}

}  // namespace soqdyn::lab
