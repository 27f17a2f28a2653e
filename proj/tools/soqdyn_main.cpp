// Command-line front end: quench / ehrenfest / poincare / lyapunov / island /
// twa experiments with key=value config files, flag overrides, and manifests.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "soqdyn/soqdyn.hpp"

namespace {

using soqdyn::lab::ExperimentConfig;
using soqdyn::lab::ExperimentKind;

struct CliOverrides {
  std::optional<std::string> config;
  std::optional<double> vx, vy, xs, ys, h, extent, tf, dt, energy, tol;
  std::optional<double> island_frac, island_growth;
  std::optional<int> n, cadence, twa_n, nseeds;
  std::optional<long> seed;
  std::optional<std::string> mode, out, h_list, plane, dt_policy, fftw, which;
};

void add_common_flags(CLI::App* sub, CliOverrides& o) {
  sub->add_option("--config", o.config, "key=value config file; flags override it");
  sub->add_option("--vx", o.vx, "SO velocity along x");
  sub->add_option("--vy", o.vy, "SO velocity along y");
  sub->add_option("--xs", o.xs, "trap shift x before the quench");
  sub->add_option("--ys", o.ys, "trap shift y before the quench");
  sub->add_option("--h", o.h, "dimensionless Planck constant");
  sub->add_option("--n", o.n, "grid points per axis (power of two)");
  sub->add_option("--extent", o.extent, "position half-width (0 = auto)");
  sub->add_option("--mode", o.mode, "full | adiabatic");
  sub->add_option("--tf", o.tf, "propagation time");
  sub->add_option("--dt", o.dt, "time step (0 = auto from dt policy)");
  sub->add_option("--dt-policy", o.dt_policy, "grid | shell");
  sub->add_option("--cadence", o.cadence, "observer cadence in steps");
  sub->add_option("--twa-n", o.twa_n, "TWA ensemble size");
  sub->add_option("--seed", o.seed, "master RNG seed (fixes all randomness)");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--h-list", o.h_list, "comma-separated h values (ehrenfest)");
  sub->add_option("--energy", o.energy, "shell energy (poincare/lyapunov)");
  sub->add_option("--nseeds", o.nseeds, "number of shell seeds");
  sub->add_option("--plane", o.plane, "section plane: y | py");
  sub->add_option("--tol", o.tol, "classical integrator tolerance");
  sub->add_option("--island-frac", o.island_frac, "REGULAR phase-space fraction");
  sub->add_option("--island-growth", o.island_growth, "REGULAR tail-growth bound");
  sub->add_option("--fftw", o.fftw, "estimate (reproducible) | measure (fast)");
  sub->add_option("--which", o.which, "seeded minimum: left | right | ring");
}

ExperimentConfig build_config(ExperimentKind kind, const CliOverrides& o) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  if (kind == ExperimentKind::Ehrenfest) cfg.dt_policy = soqdyn::lab::DtPolicy::ShellRule;
  if (o.config) soqdyn::lab::load_config_file(cfg, *o.config);
  cfg.kind = kind;
  auto set = [&](const char* key, const auto& opt) {
    if (opt) soqdyn::lab::apply_kv(cfg, key, std::to_string(*opt));
  };
  auto setd = [&](const char* key, const std::optional<double>& opt) {
    if (opt) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", *opt);
      soqdyn::lab::apply_kv(cfg, key, buf);
    }
  };
  setd("vx", o.vx);
  setd("vy", o.vy);
  setd("xs", o.xs);
  setd("ys", o.ys);
  setd("h", o.h);
  setd("extent", o.extent);
  setd("tf", o.tf);
  setd("dt", o.dt);
  setd("energy", o.energy);
  setd("tol", o.tol);
  setd("island_frac", o.island_frac);
  setd("island_growth", o.island_growth);
  set("n", o.n);
  set("cadence", o.cadence);
  set("twa_n", o.twa_n);
  set("nseeds", o.nseeds);
  set("seed", o.seed);
  if (o.mode) soqdyn::lab::apply_kv(cfg, "mode", *o.mode);
  if (o.out) soqdyn::lab::apply_kv(cfg, "out", *o.out);
  if (o.h_list) soqdyn::lab::apply_kv(cfg, "h_list", *o.h_list);
  if (o.plane) soqdyn::lab::apply_kv(cfg, "plane", *o.plane);
  if (o.dt_policy) soqdyn::lab::apply_kv(cfg, "dt_policy", *o.dt_policy);
  if (o.fftw) soqdyn::lab::apply_kv(cfg, "fftw", *o.fftw);
  if (o.which) soqdyn::lab::apply_kv(cfg, "which", *o.which);
  return cfg;
}

int dispatch(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::Quench: {
      const auto out = soqdyn::lab::run_quench(cfg);
      std::printf("quench: E = %.6g, %zu snapshots -> %s\n", out.quench_energy,
                  out.records.size(), cfg.out.c_str());
      return 0;
    }
    case ExperimentKind::Island: {
      const auto out = soqdyn::lab::run_island(cfg);
      std::printf("island: %s (occupied %.4g, tail growth %.4g) -> %s\n",
                  out.verdict.verdict == soqdyn::lab::Verdict::Regular ? "REGULAR"
                                                                       : "THERMALIZED",
                  out.verdict.occupied_fraction, out.verdict.tail_growth,
                  cfg.out.c_str());
      return 0;
    }
    case ExperimentKind::Ehrenfest: {
      const auto res = soqdyn::lab::run_ehrenfest(cfg);
      std::printf("ehrenfest: lambda = %.4g (spread %.4g vs unshifted %.4g)%s -> %s\n",
                  res.lambda, res.spread_fit, res.spread_noshift,
                  res.boundary_flag ? " [fit at search boundary]" : "",
                  cfg.out.c_str());
      return 0;
    }
    case ExperimentKind::Poincare: {
      const auto out = soqdyn::lab::run_poincare(cfg);
      std::size_t total = 0;
      for (const auto& s : out.sections) total += s.size();
      std::printf("poincare: %zu seeds, %zu crossings -> %s\n", out.seeds.size(),
                  total, cfg.out.c_str());
      return 0;
    }
    case ExperimentKind::Lyapunov: {
      const auto out = soqdyn::lab::run_lyapunov(cfg);
      for (std::size_t i = 0; i < out.results.size(); ++i)
        std::printf("lyapunov seed %zu: lambda = %.6g%s\n", i, out.results[i].lambda,
                    out.results[i].converged ? "" : " [not converged]");
      return 0;
    }
    case ExperimentKind::Twa: {
      const auto out = soqdyn::lab::run_twa(cfg);
      std::printf("twa: %zu samples propagated, %ld failed -> %s\n",
                  out.final_ensemble.points.size(), out.failed, cfg.out.c_str());
      return 0;
    }
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"soqdyn: quench dynamics of a trapped spin-orbit-coupled 2D gas"};
  app.require_subcommand(1);

  struct SubSpec {
    const char* name;
    const char* help;
    ExperimentKind kind;
  };
  const SubSpec specs[] = {
      {"quench", "quantum quench run (moments, Bloch, density dumps)",
       ExperimentKind::Quench},
      {"ehrenfest", "Delta_x(t) h-scaling experiment with lambda fit",
       ExperimentKind::Ehrenfest},
      {"poincare", "classical Poincare sections on an energy shell",
       ExperimentKind::Poincare},
      {"lyapunov", "maximum Lyapunov exponents on an energy shell",
       ExperimentKind::Lyapunov},
      {"island", "quench run plus REGULAR/THERMALIZED verdict",
       ExperimentKind::Island},
      {"twa", "truncated Wigner ensemble run", ExperimentKind::Twa},
  };

  CliOverrides overrides[6];
  CLI::App* subs[6];
  for (int i = 0; i < 6; ++i) {
    subs[i] = app.add_subcommand(specs[i].name, specs[i].help);
    add_common_flags(subs[i], overrides[i]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    for (int i = 0; i < 6; ++i)
      if (subs[i]->parsed()) return dispatch(build_config(specs[i].kind, overrides[i]));
    return 2;
  } catch (const soqdyn::lab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
