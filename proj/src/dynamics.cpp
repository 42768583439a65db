#include "nlkg/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "nlkg/fgr.hpp"

namespace nlkg {

namespace {

void rotate_coeffs(const SpectralData& sd, Vec& c, Vec& d, double tau) {
  for (int k = 0; k < c.size(); ++k) {
    double s = sd.sqrt_e[k];
    double cs = std::cos(s * tau), sn = std::sin(s * tau);
    double ck = c[k], dk = d[k];
    c[k] = ck * cs + dk * sn / s;
    d[k] = -ck * s * sn + dk * cs;
  }
}

Vec cubic_kick_accel(const SimState& st, double lambda, const RadialGrid& grid) {
  Vec a(grid.n);
  for (int i = 0; i < grid.n; ++i) {
    double w = st.w[i];
    a[i] = lambda * w * w * w / (grid.r[i] * grid.r[i]);
  }
  return a;
}

}  // namespace

SimState linear_propagate(const SpectralData& sd, const SimState& state, double tau) {
  require(std::isfinite(tau), "invalid-argument", "linear_propagate: tau must be finite");
  if (tau == 0.0) return state;
  Vec c = sd.coeffs(state.w);
  Vec d = sd.coeffs(state.w_t);
  rotate_coeffs(sd, c, d, tau);
  SimState out;
  out.w = sd.from_coeffs(c);
  out.w_t = sd.from_coeffs(d);
  out.t = state.t + tau;
  return out;
}

SimState step_nlkg(const SimState& state, double dt, double lambda, const SpectralData& sd,
                   Scheme scheme) {
  require(std::abs(dt) * sd.sqrt_e[sd.grid.n - 1] <= 1.0, "invalid-argument",
          "stability margin dt * max sqrt(E) <= 1 violated");
  if (scheme == Scheme::Strang) {
    SimState half = linear_propagate(sd, state, dt / 2.0);
    half.w_t += dt * cubic_kick_accel(half, lambda, sd.grid);
    SimState out = linear_propagate(sd, half, dt / 2.0);
    return out;
  }
  // velocity-Verlet with the finite-difference linear part
  Tridiag T = assemble_hamiltonian(sd.grid, sd.potential);
  SimState out = state;
  Vec acc = -T.apply(out.w) + cubic_kick_accel(out, lambda, sd.grid);
  out.w_t += 0.5 * dt * acc;
  out.w += dt * out.w_t;
  acc = -T.apply(out.w) + cubic_kick_accel(out, lambda, sd.grid);
  out.w_t += 0.5 * dt * acc;
  out.t += dt;
  return out;
}

double energy(const SimState& state, const SpectralData& sd, double lambda) {
  Vec c = sd.coeffs(state.w);
  Vec d = sd.coeffs(state.w_t);
  double quad = 0.0;
  for (int k = 0; k < c.size(); ++k)
    quad += d[k] * d[k] + sd.eigenvalues[k] * c[k] * c[k];
  quad *= 0.5;
  Vec w2 = profile_power(sd.grid, state.w, 2);
  double quartic = integral_r3(sd.grid, {&w2, &w2});
  return quad - (lambda / 4.0) * quartic;
}

double reflection_time(const SpectralData& sd, const Vec& data_profile) {
  double total = data_profile.squaredNorm();
  if (total == 0.0) return sd.grid.r_max;
  double acc = 0.0;
  int i = 0;
  for (; i < sd.grid.n; ++i) {
    acc += data_profile[i] * data_profile[i];
    if (acc >= (1.0 - 1e-6) * total) break;
  }
  double support = sd.grid.r[std::min(i, sd.grid.n - 1)];
  return std::max(sd.grid.r_max - support, 0.0);
}

ProbeResult dispersive_decay_probe(const SpectralData& sd, const CVec& psi, double p_prime,
                                   std::optional<double> sigma, double horizon, int samples) {
  require(p_prime == 4.0 || p_prime == 8.0 || p_prime == 2.0, "invalid-argument",
          "probe supports p' in {2, 4, 8}");
  CVec pc = project(sd, psi, SpectralPart::Continuous);
  CVec c = sd.coeffs(pc);
  // fold B^{-1/2} into the coefficients
  for (int k = 0; k < c.size(); ++k)
    c[k] *= (sd.is_discrete(k)) ? 0.0 : std::pow(sd.eigenvalues[k], -0.25);

  ProbeResult out;
  double t_ref = reflection_time(sd, Vec(pc.cwiseAbs()));
  out.boundary_contaminated = horizon > t_ref;

  Vec weight;
  if (sigma) {
    weight.resize(sd.grid.n);
    for (int i = 0; i < sd.grid.n; ++i)
      weight[i] = std::pow(1.0 + sd.grid.r[i] * sd.grid.r[i], -0.5 * (*sigma));
  }
  for (int j = 0; j < samples; ++j) {
    double t = std::exp(std::log(1.0) + (std::log(horizon) - std::log(1.0)) * j / (samples - 1.0));
    CVec ct(c.size());
    for (int k = 0; k < c.size(); ++k)
      ct[k] = c[k] * std::exp(Complex(0.0, -sd.sqrt_e[k] * t));
    CVec v = sd.from_coeffs(ct);
    if (sigma) v = v.cwiseProduct(weight.cast<Complex>());
    out.times.push_back(t);
    out.values.push_back(lp_norm(v, p_prime, sd.grid));
  }
  out.fit = fit_loglog(out.times, out.values, 1.0, horizon);
  return out;
}

ProbeResult singular_resolvent_probe(const SpectralData& sd, double lambda_res,
                                     const CVec& psi, int l, double sigma, double horizon,
                                     int samples) {
  require(lambda_res > sd.m, "invalid-argument",
          "resolvent probe needs Lambda inside the continuous spectrum");
  require(l >= 0 && l <= 2, "invalid-argument", "resolvent power l in {0, 1, 2}");
  Vec weight(sd.grid.n);
  for (int i = 0; i < sd.grid.n; ++i)
    weight[i] = std::pow(1.0 + sd.grid.r[i] * sd.grid.r[i], -0.5 * sigma);

  CVec inner = psi.cwiseProduct(weight.cast<Complex>());
  CVec c = sd.coeffs(project(sd, inner, SpectralPart::Continuous));
  // The box realization of +i0 spreads the line over a few levels; the decay
  // is then faithful up to t ~ 0.3/eps, before the Lorentzian damping and the
  // discreteness of the spectrum take over.
  double spacing = local_level_spacing(sd, lambda_res);
  double eps = 2.0 * spacing;
  double t_cap = horizon;
  if (l >= 1) t_cap = std::min(horizon, 0.3 / eps);
  for (int k = 0; k < c.size(); ++k) {
    if (sd.is_discrete(k)) {
      c[k] = 0.0;
      continue;
    }
    Complex den(sd.sqrt_e[k] - lambda_res, eps);
    for (int rep = 0; rep < l; ++rep) c[k] /= den;
  }

  ProbeResult out;
  out.boundary_contaminated = horizon > reflection_time(sd, Vec(inner.cwiseAbs()));
  for (int j = 0; j < samples; ++j) {
    double t = std::exp(std::log(t_cap) * j / (samples - 1.0));
    CVec ct(c.size());
    for (int k = 0; k < c.size(); ++k)
      ct[k] = c[k] * std::exp(Complex(0.0, sd.sqrt_e[k] * t));
    CVec v = sd.from_coeffs(ct).cwiseProduct(weight.cast<Complex>());
    out.times.push_back(t);
    out.values.push_back(std::sqrt(4.0 * M_PI) * v.norm() * std::sqrt(sd.grid.dr));
  }
  out.fit = fit_loglog(out.times, out.values, 1.0, t_cap);
  return out;
}

SimRun simulate(const SpectralData& sd, const SimConfig& cfg) {
  require(cfg.dt > 0.0 && cfg.horizon > 0.0, "invalid-argument", "dt and horizon must be positive");
  require(cfg.stride >= 1, "invalid-argument", "stride must be positive");
  require(cfg.dt * sd.sqrt_e[sd.grid.n - 1] <= 1.0, "invalid-argument",
          "stability margin dt * max sqrt(E) <= 1 violated");

  // initial data: a0 * phi + c0 * (unit-norm continuum seed), at rest
  SimState st;
  st.t = 0.0;
  st.w = cfg.a0 * sd.phi;
  if (cfg.c0 != 0.0) {
    require(std::abs(cfg.c0) <= cfg.C0 * std::abs(cfg.a0) + 1e-300, "invalid-argument",
            "continuous seed exceeds the data-class cap C0 ||P_d data||");
    Vec seed(sd.grid.n);
    for (int i = 0; i < sd.grid.n; ++i) {
      double r = sd.grid.r[i];
      seed[i] = r * std::exp(-(r * r) / (cfg.seed_width * cfg.seed_width));
    }
    Vec pc = project(sd, seed, SpectralPart::Continuous);
    st.w += cfg.c0 / (pc.norm() * std::sqrt(sd.grid.dr)) * pc;
  }
  st.w_t = Vec::Zero(sd.grid.n);

  SimRun run;
  run.config = cfg;
  run.t_reflect = reflection_time(sd, st.w);
  require(cfg.allow_boundary || cfg.horizon <= run.t_reflect + 1e-9, "boundary-contaminated",
          "horizon exceeds the reflection time; pass allow_boundary to override");

  const int nsteps = static_cast<int>(std::llround(cfg.horizon / cfg.dt));
  run.samples.push_back(st);
  run.energies.push_back(energy(st, sd, cfg.lambda));

  if (cfg.scheme == Scheme::Leapfrog) {
    for (int s = 1; s <= nsteps; ++s) {
      st = step_nlkg(st, cfg.dt, cfg.lambda, sd, Scheme::Leapfrog);
      if (!st.w.allFinite() || !st.w_t.allFinite() ||
          lp_norm(st.w, 0.0, sd.grid) > cfg.blowup_sup)
        throw DomainError("blowup-detected", "sup |u| exceeded the blow-up guard");
      if (s % cfg.stride == 0 || s == nsteps) {
        run.samples.push_back(st);
        run.energies.push_back(energy(st, sd, cfg.lambda));
      }
    }
    return run;
  }

  // Strang with merged half-steps between samples
  auto guard = [&](const SimState& state) {
    if (!state.w.allFinite() || !state.w_t.allFinite() ||
        lp_norm(state.w, 0.0, sd.grid) > cfg.blowup_sup)
      throw DomainError("blowup-detected", "sup |u| exceeded the blow-up guard");
  };
  Vec c = sd.coeffs(st.w), d = sd.coeffs(st.w_t);
  rotate_coeffs(sd, c, d, cfg.dt / 2.0);
  st.w = sd.from_coeffs(c);
  st.w_t = sd.from_coeffs(d);
  for (int s = 1; s <= nsteps; ++s) {
    st.w_t += cfg.dt * cubic_kick_accel(st, cfg.lambda, sd.grid);
    guard(st);
    const bool boundary = (s % cfg.stride == 0) || (s == nsteps);
    const double tau = boundary ? cfg.dt / 2.0 : cfg.dt;
    c = sd.coeffs(st.w);
    d = sd.coeffs(st.w_t);
    rotate_coeffs(sd, c, d, tau);
    st.w = sd.from_coeffs(c);
    st.w_t = sd.from_coeffs(d);
    st.t = s * cfg.dt;
    if (boundary) {
      guard(st);
      run.samples.push_back(st);
      run.energies.push_back(energy(st, sd, cfg.lambda));
      if (s < nsteps) {
        c = sd.coeffs(st.w);
        d = sd.coeffs(st.w_t);
        rotate_coeffs(sd, c, d, cfg.dt / 2.0);
        st.w = sd.from_coeffs(c);
        st.w_t = sd.from_coeffs(d);
      }
    }
  }
  return run;
}

}  // namespace nlkg
