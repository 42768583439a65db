// Command-line driver: spectral analysis, golden-rule evaluation, normal-form
// dumps, NLKG simulation, and decay-rate reports over CSV files.
#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "nlkg/io.hpp"

using namespace nlkg;

namespace {

int exit_code_for(const DomainError& e) {
  if (e.code() == "spectral-assumption-violated") return 2;
  if (e.code() == "borderline-resonance") return 3;
  if (e.code() == "truncation-overflow") return 4;
  if (e.code() == "blowup-detected") return 5;
  if (e.code() == "missing-file") return 6;
  return 1;
}

struct Ctx {
  Config cfg;
  RunConfig rc;
  std::string out_dir = ".";
  bool snapshots = false;

  std::string path(const std::string& name) const { return out_dir + "/" + name; }
};

SpectralData spectral_of(const Ctx& ctx) {
  Tridiag T = assemble_hamiltonian(ctx.rc.grid, ctx.rc.potential);
  SpectralData sd = eigendecompose(T, ctx.rc.grid, ctx.rc.potential);
  Vec v = potential_on_grid(ctx.rc.grid, ctx.rc.potential);
  if (!potential_tail_decay_ok(ctx.rc.grid, v))
    std::fprintf(stderr, "warning: potential tail decays slower than <r>^-5 (V1)\n");
  return sd;
}

int window_of(const Ctx& ctx, const SpectralData& sd) {
  int n_req = ctx.rc.n_requested;
  if (n_req > 0) return n_req;
  return classify_window(sd.omega, sd.m, ctx.rc.nf.tol_res);
}

int cmd_spectrum(const Ctx& ctx) {
  SpectralData sd = spectral_of(ctx);
  int N = window_of(ctx, sd);
  atomic_write(ctx.path("spectrum.csv"), spectrum_csv(ctx.cfg, sd));
  std::printf("unique bound state, omega=%s, N=%d window\n", format_double(sd.omega).c_str(),
              N);
  return 0;
}

int cmd_fgr(const Ctx& ctx) {
  SpectralData sd = spectral_of(ctx);
  int N = window_of(ctx, sd);
  NormalFormResult nf = normal_form_recursion(sd, ctx.rc.sim.lambda, N, ctx.rc.nf);
  atomic_write(ctx.path("golden_rule.csv"), golden_rule_csv(ctx.cfg, nf.golden));
  std::printf("N=%d omega=%s gamma=%s (kernel %s, resolvent %s, spread %s%s)\n", N,
              format_double(sd.omega).c_str(), format_double(nf.golden.gamma).c_str(),
              format_double(nf.golden.gamma_kernel).c_str(),
              format_double(nf.golden.gamma_resolvent).c_str(),
              format_double(nf.golden.spread).c_str(),
              nf.golden.spread_flag ? ", flagged" : "");
  if (3.0 * sd.omega > sd.m) {
    double g = gamma_sw(sd, ctx.rc.nf.delta);
    std::printf("cubic resonance constant Gamma=%s\n", format_double(g).c_str());
  }
  return 0;
}

int cmd_normalform(const Ctx& ctx) {
  SpectralData sd = spectral_of(ctx);
  int N = window_of(ctx, sd);
  NormalFormResult nf = normal_form_recursion(sd, ctx.rc.sim.lambda, N, ctx.rc.nf);
  atomic_write(ctx.path("z_terms.csv"), z_terms_csv(ctx.cfg, nf));
  atomic_write(ctx.path("phi_res.txt"), phi_res_text(nf, sd));
  atomic_write(ctx.path("golden_rule.csv"), golden_rule_csv(ctx.cfg, nf.golden));
  std::printf("normal-form: OK (%zu Z terms, gamma=%s)\n", nf.z.terms.size(),
              format_double(nf.golden.gamma).c_str());
  for (const auto& line : nf.steps_log) std::printf("%s\n", line.c_str());
  return 0;
}

int cmd_simulate(const Ctx& ctx) {
  SpectralData sd = spectral_of(ctx);
  SimRun run = simulate(sd, ctx.rc.sim);
  EnvelopeSeries series = build_series(run, sd, ctx.rc.fit_sigma);
  Config echo = ctx.cfg;
  echo.set("run.t_reflect", format_double(run.t_reflect));
  atomic_write(ctx.path("trajectory.csv"), trajectory_csv(echo, series));
  if (ctx.snapshots) {
    for (size_t j = 0; j < run.samples.size(); ++j) {
      char name[64];
      std::snprintf(name, sizeof(name), "snapshots/state_%06zu.txt", j);
      atomic_write(ctx.path(name), snapshot_text(run.samples[j], sd));
    }
  }
  std::printf("simulated T=%s (%zu samples, t_reflect=%s)\n",
              format_double(ctx.rc.sim.horizon).c_str(), run.samples.size(),
              format_double(run.t_reflect).c_str());
  return 0;
}

struct LoadedRun {
  std::map<std::string, std::vector<double>> traj;
  double t_reflect = 0.0;
  bool have_golden = false;
  double gamma = 0.0;
  int N = 1;
};

LoadedRun load_run(const Ctx& ctx) {
  LoadedRun lr;
  const std::string tpath = ctx.path("trajectory.csv");
  lr.traj = read_csv_columns(tpath);
  require(lr.traj.count("t") && lr.traj.count("abs_xi"), "missing-file",
          "trajectory.csv lacks the expected columns");
  // t_reflect echoed into the header when the trajectory was produced
  {
    std::ifstream in(tpath);
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("# run.t_reflect = ", 0) == 0)
        lr.t_reflect = std::stod(line.substr(18));
      if (!line.empty() && line[0] != '#') break;
    }
  }
  if (lr.t_reflect == 0.0) lr.t_reflect = lr.traj["t"].back();
  if (std::filesystem::exists(ctx.path("golden_rule.csv"))) {
    auto g = read_csv_columns(ctx.path("golden_rule.csv"));
    if (g.count("gamma") && !g["gamma"].empty()) {
      lr.have_golden = true;
      lr.gamma = g["gamma"][0];
      lr.N = static_cast<int>(g["N"][0]);
    }
  }
  return lr;
}

std::vector<FitReportRow> build_fit_rows(const Ctx& ctx, const LoadedRun& lr) {
  const auto& t = lr.traj.at("t");
  const auto& axi = lr.traj.at("abs_xi");
  std::vector<FitReportRow> rows;
  double t_end = std::min(lr.t_reflect, t.back());
  double t0 = t.front() + 1.0;
  int N = lr.have_golden ? lr.N : 1;
  if (lr.have_golden && lr.gamma > 0.0 && axi.front() > 0.0) {
    auto w = resonance_window(axi.front(), lr.gamma, N, lr.t_reflect, t.back());
    t0 = w.first;
    t_end = w.second;
  }
  // short runs: fall back to the late three quarters of the record
  auto ensure_window = [&](double w0, double w1) {
    int count = 0;
    for (double tv : t)
      if (tv >= w0 && tv <= w1) ++count;
    if (count >= 20 && w1 > w0) return std::make_pair(w0, w1);
    double f0 = t.front() + 0.25 * (t.back() - t.front());
    std::fprintf(stderr,
                 "note: fit window [%g, %g] too sparse, falling back to [%g, %g]\n", w0, w1,
                 f0, t.back());
    return std::make_pair(f0, t.back());
  };
  std::tie(t0, t_end) = ensure_window(t0, t_end);

  auto add_loglog = [&](const std::string& name, const std::vector<double>& vals,
                        double predicted, double w0, double w1) {
    FitResult f = fit_decay(t, vals, w0, w1);
    FitReportRow row;
    row.quantity = name;
    row.t0 = w0;
    row.t1 = w1;
    row.slope = f.slope;
    row.stderr_slope = f.stderr_slope;
    row.predicted = predicted;
    row.ratio = (predicted != 0.0) ? f.slope / predicted : 0.0;
    rows.push_back(row);
  };

  add_loglog("abs_xi", axi, -1.0 / (4.0 * N), t0, t_end);
  add_loglog("eta_L8", lr.traj.at("eta_L8"), -3.0 / (4.0 * N), t0, t_end);

  // theta: transient excluded at the bootstrap split |xi0|^{-4N(1-delta0)}
  {
    double tb = std::pow(std::max(axi.front(), 1e-12), -4.0 * N * (1.0 - ctx.rc.delta0));
    auto [w0, w1] = ensure_window(std::max(t0, tb), t_end);
    (void)w1;
    std::vector<double> th = lr.traj.at("theta");
    for (auto& x : th) x = std::abs(x);
    FitResult f = fit_decay(t, th, w0, t_end);
    FitReportRow row;
    row.quantity = "theta";
    row.t0 = w0;
    row.t1 = t_end;
    row.slope = f.slope;
    row.stderr_slope = f.stderr_slope;
    row.predicted = 1.0 - 1.0 / (2.0 * N);
    row.ratio = row.slope / row.predicted;
    rows.push_back(row);
  }

  // linear growth of |xi|^{-4N} against the golden-rule prediction 4 N gamma
  if (lr.have_golden) {
    std::vector<double> xs, ys;
    for (size_t j = 0; j < t.size(); ++j) {
      if (t[j] < t0 || t[j] > t_end || axi[j] <= 0.0) continue;
      xs.push_back(t[j]);
      ys.push_back(std::pow(axi[j], -4.0 * N));
    }
    FitResult f = fit_linear(xs, ys);
    FitReportRow row;
    row.quantity = "xi_inv4N_rate";
    row.t0 = t0;
    row.t1 = t_end;
    row.slope = f.slope;
    row.stderr_slope = f.stderr_slope;
    row.predicted = 4.0 * N * lr.gamma;
    row.ratio = (row.predicted != 0.0) ? f.slope / row.predicted : 0.0;
    rows.push_back(row);
  }
  return rows;
}

int cmd_fit(const Ctx& ctx) {
  LoadedRun lr = load_run(ctx);
  std::vector<FitReportRow> rows = build_fit_rows(ctx, lr);
  atomic_write(ctx.path("fit_report.csv"), fit_report_csv(ctx.cfg, rows));
  for (const auto& r : rows)
    std::printf("%s: slope=%s stderr=%s window=[%s, %s]\n", r.quantity.c_str(),
                format_double(r.slope).c_str(), format_double(r.stderr_slope).c_str(),
                format_double(r.t0).c_str(), format_double(r.t1).c_str());
  return 0;
}

int cmd_report(const Ctx& ctx) {
  LoadedRun lr = load_run(ctx);
  std::vector<FitReportRow> rows = build_fit_rows(ctx, lr);
  for (const auto& r : rows)
    require(std::isfinite(r.ratio) && std::isfinite(r.slope), "io-error",
            "non-finite entries in the report");
  atomic_write(ctx.path("report.csv"), fit_report_csv(ctx.cfg, rows));
  std::printf("quantity        measured    predicted   ratio\n");
  for (const auto& r : rows)
    std::printf("%-15s %-11.4g %-11.4g %.3f\n", r.quantity.c_str(), r.slope, r.predicted,
                r.ratio);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metastable bound-state decay toolkit for the radial cubic Klein-Gordon equation"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  double seed_override = -1.0;
  bool allow_boundary = false, snapshots = false;
  app.add_option("--config", config_path, "sectioned key=value configuration file");
  app.add_option("--out-dir", out_dir, "output directory for CSV files");
  app.add_option("--seed", seed_override, "override [seed] seed");
  app.add_flag("--allow-boundary", allow_boundary, "permit horizons past the reflection time");
  app.add_flag("--snapshots", snapshots, "write per-stride state snapshots");

  auto* c_spectrum = app.add_subcommand("spectrum", "eigenvalues, bound state, window class");
  auto* c_fgr = app.add_subcommand("fgr", "golden-rule coefficient report");
  auto* c_normalform = app.add_subcommand("normalform", "normal-form dump and generators");
  auto* c_simulate = app.add_subcommand("simulate", "integrate the radial NLKG");
  auto* c_fit = app.add_subcommand("fit", "fit decay exponents from trajectory.csv");
  auto* c_report = app.add_subcommand("report", "measured vs predicted exponent report");

  CLI11_PARSE(app, argc, argv);

  try {
    Ctx ctx;
    ctx.cfg = config_path.empty() ? Config::defaults() : Config::parse_file(config_path);
    if (seed_override >= 0.0) ctx.cfg.set("seed.seed", format_double(seed_override));
    ctx.rc = make_run_config(ctx.cfg);
    ctx.rc.sim.allow_boundary = allow_boundary;
    ctx.out_dir = out_dir;
    ctx.snapshots = snapshots;

    if (c_spectrum->parsed()) return cmd_spectrum(ctx);
    if (c_fgr->parsed()) return cmd_fgr(ctx);
    if (c_normalform->parsed()) return cmd_normalform(ctx);
    if (c_simulate->parsed()) return cmd_simulate(ctx);
    if (c_fit->parsed()) return cmd_fit(ctx);
    if (c_report->parsed()) return cmd_report(ctx);
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error [%s]: %s\n", e.code().c_str(), e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
