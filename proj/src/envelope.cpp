#include "nlkg/envelope.hpp"

#include <algorithm>
#include <cmath>

#include "nlkg/fgr.hpp"

namespace nlkg {

ModePair extract_modes(const SimState& state, const SpectralData& sd) {
  const double dr = sd.grid.dr;
  const double om = sd.omega;
  ModePair m;
  m.t = state.t;
  double q = sd.phi.dot(state.w) * dr;
  double p = sd.phi.dot(state.w_t) * dr;
  m.xi = Complex(q * std::sqrt(om), p / std::sqrt(om)) / std::sqrt(2.0);
  Vec a = project(sd, state.w, SpectralPart::Continuous);
  Vec b = project(sd, state.w_t, SpectralPart::Continuous);
  CVec fa = apply_B_power(sd, 0.5, CVec(a.cast<Complex>()), SpectralPart::Continuous);
  CVec fb = apply_B_power(sd, -0.5, CVec(b.cast<Complex>()), SpectralPart::Continuous);
  m.f = (fa + Complex(0, 1) * fb) / std::sqrt(2.0);
  return m;
}

SimState reconstruct_state(const ModePair& m, const SpectralData& sd) {
  const double om = sd.omega;
  double q = std::sqrt(2.0 / om) * m.xi.real();
  double p = std::sqrt(2.0 * om) * m.xi.imag();
  CVec re = m.f.real().cast<Complex>();
  CVec im = m.f.imag().cast<Complex>();
  SimState st;
  st.t = m.t;
  st.w = q * sd.phi +
         std::sqrt(2.0) * apply_B_power(sd, -0.5, re, SpectralPart::Continuous).real();
  st.w_t = p * sd.phi +
           std::sqrt(2.0) * apply_B_power(sd, 0.5, im, SpectralPart::Continuous).real();
  return st;
}

namespace {

void push_observables(EnvelopeSeries& out, const ModePair& m, const SimState& st,
                      const SpectralData& sd, const Vec& weight, double energy_value) {
  out.times.push_back(m.t);
  out.abs_xi.push_back(std::abs(m.xi));
  Vec eta = project(sd, st.w, SpectralPart::Continuous);
  out.eta_l8.push_back(lp_norm(eta, 8.0, sd.grid));
  out.pc_l2.push_back(lp_norm(eta, 2.0, sd.grid));
  CVec fl = apply_B_power(sd, -0.5, m.f, SpectralPart::Continuous);
  out.f_l8.push_back(lp_norm(fl, 8.0, sd.grid));
  CVec fw = apply_B_power(sd, 0.5, m.f, SpectralPart::Continuous);
  fw = fw.cwiseProduct(weight.cast<Complex>());
  out.f_wl4.push_back(lp_norm(fw, 4.0, sd.grid));
  out.energy.push_back(energy_value);
}

void unwrap_theta(EnvelopeSeries& s, const std::vector<Complex>& xis, double omega) {
  s.theta.resize(s.times.size());
  double prev = 0.0;
  for (size_t j = 0; j < s.times.size(); ++j) {
    if (std::abs(xis[j]) == 0.0) {
      s.theta[j] = prev;
      continue;
    }
    double raw = -std::arg(xis[j]) - omega * s.times[j];
    if (j == 0) {
      // principal branch at the start
      s.theta[j] = std::remainder(raw, 2.0 * M_PI);
    } else {
      double d = std::remainder(raw - prev, 2.0 * M_PI);
      s.theta[j] = prev + d;
    }
    prev = s.theta[j];
  }
}

Vec make_weight(const SpectralData& sd, double sigma) {
  Vec w(sd.grid.n);
  for (int i = 0; i < sd.grid.n; ++i)
    w[i] = std::pow(1.0 + sd.grid.r[i] * sd.grid.r[i], -0.5 * sigma);
  return w;
}

}  // namespace

EnvelopeSeries build_series(const SimRun& run, const SpectralData& sd, double sigma) {
  EnvelopeSeries out;
  Vec weight = make_weight(sd, sigma);
  std::vector<Complex> xis;
  for (size_t j = 0; j < run.samples.size(); ++j) {
    ModePair m = extract_modes(run.samples[j], sd);
    xis.push_back(m.xi);
    push_observables(out, m, run.samples[j], sd, weight, run.energies[j]);
  }
  unwrap_theta(out, xis, sd.omega);
  return out;
}

EnvelopeSeries build_series_normal(const SimRun& run, const SpectralData& sd,
                                   const NormalFormResult& nf, double sigma, int max_samples,
                                   double rtol) {
  EnvelopeSeries out;
  Vec weight = make_weight(sd, sigma);
  std::vector<Complex> xis;
  FlowOptions fopt;
  fopt.rtol = rtol;
  fopt.atol = rtol * 1e-3;
  size_t step = std::max<size_t>(1, run.samples.size() / std::max(max_samples, 2));
  for (size_t j = 0; j < run.samples.size(); j += step) {
    ModePair m = extract_modes(run.samples[j], sd);
    PhasePoint z{m.xi, m.f};
    PhasePoint zn = to_normal_coordinates(nf, sd, z, fopt);
    ModePair mn{zn.xi, zn.f, m.t};
    SimState st = reconstruct_state(mn, sd);
    st.t = m.t;
    xis.push_back(mn.xi);
    push_observables(out, mn, st, sd, weight, run.energies[j]);
  }
  unwrap_theta(out, xis, sd.omega);
  return out;
}

EnvelopeSeries smooth_series(const EnvelopeSeries& s, int half_window) {
  require(half_window >= 1, "invalid-argument", "half_window must be positive");
  const int n = static_cast<int>(s.times.size());
  EnvelopeSeries out;
  auto avg = [&](const std::vector<double>& v, int c, bool square) {
    double acc = 0.0;
    for (int j = c - half_window; j <= c + half_window; ++j)
      acc += square ? v[j] * v[j] : v[j];
    acc /= (2 * half_window + 1);
    return square ? std::sqrt(acc) : acc;
  };
  for (int c = half_window; c + half_window < n; ++c) {
    out.times.push_back(s.times[c]);
    out.abs_xi.push_back(avg(s.abs_xi, c, true));
    out.eta_l8.push_back(avg(s.eta_l8, c, false));
    out.f_l8.push_back(avg(s.f_l8, c, false));
    out.f_wl4.push_back(avg(s.f_wl4, c, false));
    out.pc_l2.push_back(avg(s.pc_l2, c, false));
    out.energy.push_back(s.energy[c]);
    out.theta.push_back(s.theta[c]);
  }
  return out;
}

double envelope_closed_form(double abs_xi0, double gamma, int N, double t) {
  double x = 4.0 * N * gamma * std::pow(abs_xi0, 4 * N) * t;
  return abs_xi0 * std::pow(1.0 + x, -1.0 / (4.0 * N));
}

EnvelopeSolveResult envelope_ode_solve(double abs_xi0, double gamma, int N, double horizon,
                                       const std::function<double(double, double)>& forcing,
                                       double rtol, int samples) {
  require(gamma >= 0.0, "invalid-argument", "gamma must be nonnegative");
  require(N >= 1 && horizon > 0.0, "invalid-argument", "bad envelope parameters");
  EnvelopeSolveResult out;
  auto rhs = [&](double t, double r) {
    double v = -2.0 * gamma * std::pow(r, 2 * N + 1);
    if (forcing) v += forcing(t, r);
    return v;
  };
  // Dormand-Prince 5(4), dense sampling on a log-spaced grid
  static const double A[7][6] = {
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static const double B5[7] = {35.0 / 384, 0.0,           500.0 / 1113, 125.0 / 192,
                               -2187.0 / 6784, 11.0 / 84, 0.0};
  static const double B4[7] = {5179.0 / 57600,  0.0,          7571.0 / 16695, 393.0 / 640,
                               -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};
  static const double C[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};

  // t = 0 plus a log-spaced sample grid from horizon*1e-4 to horizon
  std::vector<double> want(samples);
  want[0] = 0.0;
  for (int j = 1; j < samples; ++j)
    want[j] = horizon * std::pow(1e-4, 1.0 - j / (samples - 1.0));

  double t = 0.0, r = abs_xi0 * abs_xi0, h = std::min(1e-3, horizon * 1e-6);
  size_t next = 0;
  auto record = [&](double tv, double rv) {
    out.times.push_back(tv);
    out.r.push_back(rv);
  };
  int guard = 0;
  while (next < want.size()) {
    if (t >= want[next] * (1.0 - 1e-14) - 1e-300) {
      record(want[next], r);
      ++next;
      continue;
    }
    require(++guard < 5000000, "flow-stalled", "envelope integrator failed to advance");
    double h_try = std::min(h, want[next] - t);
    double ks[7];
    ks[0] = rhs(t, r);
    for (int i = 1; i < 7; ++i) {
      double ri = r;
      for (int j = 0; j < i; ++j) ri += h_try * A[i][j] * ks[j];
      ks[i] = rhs(t + C[i] * h_try, std::max(ri, 0.0));
    }
    double r5 = r, err = 0.0;
    for (int i = 0; i < 7; ++i) {
      r5 += h_try * B5[i] * ks[i];
      err += h_try * (B5[i] - B4[i]) * ks[i];
    }
    double sc = 1e-14 + rtol * std::max(std::abs(r), std::abs(r5));
    double e = std::abs(err) / sc;
    if (e <= 1.0) {
      t += h_try;
      r = r5;
      if (r < 0.0) {
        r = 0.0;
        out.clipped = true;
      }
    }
    double fac = (e > 0.0) ? 0.9 * std::pow(e, -0.2) : 5.0;
    h = h_try * std::clamp(fac, 0.2, 5.0);
    if (h < 1e-300) h = 1e-300;
  }
  return out;
}

double BarrierPair::upper(double t) const {
  double s = 1.0 + 4.0 * N * gamma * r0 * t;
  return (r0 + c_upper * std::pow(s, -0.5 * delta)) / s;
}

double BarrierPair::lower(double t) const {
  double s = 1.0 + 4.0 * N * gamma * r0 * t;
  return (r0 - c_lower * std::pow(s, -delta)) / s;
}

BarrierPair comparison_bounds(double r0, double gamma, int N, double q0, double delta) {
  require(r0 > 0.0 && gamma > 0.0 && N >= 1, "invalid-argument", "bad barrier parameters");
  require(q0 >= 0.0 && delta > 0.0 && delta < 1.0, "invalid-argument", "bad barrier parameters");
  BarrierPair bp;
  bp.r0 = r0;
  bp.gamma = gamma;
  bp.q0 = q0;
  bp.delta = delta;
  bp.N = N;
  const double alpha = (4.0 * N - 1.0) / (4.0 * N);
  if (q0 == 0.0) {
    bp.c_upper = 0.0;
    bp.c_lower = 0.0;
    return bp;
  }
  // minimal C with 4 N gamma C^2 >= 8 N q0 (r0^alpha + C^alpha), by bisection
  auto gap = [&](double c) {
    return 4.0 * N * gamma * c * c -
           8.0 * N * q0 * (std::pow(r0, alpha) + std::pow(c, alpha));
  };
  double hi = 1.0;
  while (gap(hi) < 0.0) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (gap(mid) >= 0.0 ? hi : lo) = mid;
  }
  bp.c_upper = hi;

  // lower barrier: minimal C with (1-delta) gamma r0 C >= gamma C^2 + q0 r0^alpha
  double disc = std::pow((1.0 - delta) * r0, 2) - 4.0 * q0 * std::pow(r0, alpha) / gamma;
  require(disc >= 0.0, "hypothesis-violated",
          "forcing amplitude too large for the lower comparison barrier");
  bp.c_lower = 0.5 * ((1.0 - delta) * r0 - std::sqrt(disc));
  return bp;
}

CVec main_term_f(Complex xi, const CVec& phi_res, const SpectralData& sd, int N) {
  const double lam = (2 * N + 1) * sd.omega;
  require(lam > sd.m, "weak-resonance", "main term needs (2N+1) omega above threshold");
  double spacing = local_level_spacing(sd, lam);
  ResolventQuery q;
  q.lambda = lam;
  q.sign = -1;
  q.eps_ladder = {8.0 * spacing, 4.0 * spacing, 2.0 * spacing};
  q.target = phi_res.conjugate();
  ResolventResult rr = resolvent_apply(sd, q);
  Complex amp = -std::pow(xi, 2 * N + 1);
  return amp * rr.limit;
}

FitResult fit_decay(const std::vector<double>& t, const std::vector<double>& v, double t0,
                    double t1) {
  require(t1 > t0, "empty-window", "fit window is empty");
  int count = 0;
  for (size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t0 && t[i] <= t1) ++count;
  require(count >= 20, "empty-window", "fit window holds fewer than 20 samples");
  return fit_loglog(t, v, t0, t1);
}

FitResult theta_growth(const EnvelopeSeries& series, double t0, double t1) {
  std::vector<double> mag(series.theta.size());
  for (size_t i = 0; i < series.theta.size(); ++i) mag[i] = std::abs(series.theta[i]);
  return fit_decay(series.times, mag, t0, t1);
}

std::pair<double, double> resonance_window(double abs_xi0, double gamma, int N,
                                           double t_reflect, double horizon) {
  double rate = gamma * std::pow(abs_xi0, 4 * N);
  require(rate > 0.0, "invalid-argument", "resonance window needs gamma, xi0 > 0");
  return {5e-2 / rate, std::min(t_reflect, horizon)};
}

ConvolutionCheck convolution_check(ConvKernel kernel, double delta, double alpha, double xi0,
                                   int N, double t_min, double t_max, int nt, int panels) {
  if (kernel == ConvKernel::MinPower) {
    require(delta > 0.0 && delta < 1.0, "invalid-argument", "delta out of range");
    require(alpha >= 0.0 && alpha <= 1.0 + delta, "invalid-argument", "alpha out of range");
  } else {
    require(alpha > 1.0, "invalid-argument", "the inverse-sqrt bound needs alpha > 1");
  }
  require(xi0 > 0.0 && N >= 1 && t_min > 0.0 && t_max > t_min, "invalid-argument",
          "bad convolution parameters");

  const double eps0 = std::pow(xi0, 4 * N);
  auto kern = [&](double u) {
    if (kernel == ConvKernel::MinPower)
      return std::min(std::pow(u, -(1.0 + delta)), std::pow(u, -(1.0 - delta)));
    return 1.0 / std::sqrt(u);
  };
  auto g = [&](double s) { return std::pow(1.0 + eps0 * eps0 * s * s, -0.5 * alpha); };
  auto head_integral = [&](double u) {
    // int_0^u of the kernel
    if (kernel == ConvKernel::MinPower) {
      if (u <= 1.0) return std::pow(u, delta) / delta;
      return 1.0 / delta + (1.0 - std::pow(u, -delta)) / delta;
    }
    return 2.0 * std::sqrt(u);
  };

  // 8-point Gauss-Legendre
  static const double gx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                               -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                               0.7966664774136267,  0.9602898564975363};
  static const double gw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                               0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                               0.2223810344533745, 0.1012285362903763};

  ConvolutionCheck out;
  for (int j = 0; j < nt; ++j) {
    double t = t_min * std::pow(t_max / t_min, j / (nt - 1.0));
    // integral over u = t - s in (0, t] with a graded geometric mesh
    double u_min = t * 1e-12;
    double acc = head_integral(u_min) * g(t);
    double ratio_geom = std::pow(t / u_min, 1.0 / panels);
    double a = u_min;
    for (int pnl = 0; pnl < panels; ++pnl) {
      double b = a * ratio_geom;
      double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      for (int q = 0; q < 8; ++q) {
        double u = mid + half * gx[q];
        acc += gw[q] * half * kern(u) * g(t - u);
      }
      a = b;
    }
    double bound = (kernel == ConvKernel::MinPower)
                       ? std::pow(1.0 + eps0 * eps0 * t * t, -0.5 * alpha)
                       : std::pow(xi0, -2.0 * N) *
                             std::pow(1.0 + eps0 * eps0 * t * t, -0.25);
    out.times.push_back(t);
    out.ratios.push_back(acc / bound);
    out.max_ratio = std::max(out.max_ratio, acc / bound);
  }
  return out;
}

}  // namespace nlkg
