#include "nlkg/normal_form.hpp"

#include <cmath>
#include <sstream>

namespace nlkg {

namespace {

double binom(int n, int k) {
  double v = 1.0;
  for (int j = 1; j <= k; ++j) v = v * (n - k + j) / j;
  return v;
}

}  // namespace

HamiltonianPoly step0_hamiltonian(const SpectralData& sd, double lambda, int d_max) {
  require(lambda == 1.0 || lambda == -1.0, "invalid-argument", "lambda must be +-1");
  const double omega = sd.omega;
  const RadialGrid& grid = sd.grid;
  HamiltonianPoly p;
  p.d_max = d_max;

  // scalar quartic block: -(lambda/4) a^4 int phi^4 dx, a = (xi+xibar)/sqrt(2w)
  const Vec& phi = sd.phi;
  double i4 = integral_r3(grid, {&phi, &phi, &phi, &phi});
  for (int mu = 0; mu <= 4; ++mu) {
    AlgebraTerm t;
    t.mu = mu;
    t.nu = 4 - mu;
    t.coeff = -(lambda / 4.0) * binom(4, mu) * i4 / (4.0 * omega * omega);
    p.terms.push_back(std::move(t));
  }

  // f-linear cubic block: -lambda a^3 int phi^3 U dx
  {
    Complex unit(1.0, 0.0);
    Vec phi3 = profile_power(grid, phi, 3);
    CVec x = apply_B_power(sd, -0.5, CVec(phi3.cast<Complex>()), SpectralPart::Continuous);
    Kernel kx = make_kernel(std::move(x), unit);
    for (int mu = 0; mu <= 3; ++mu) {
      for (bool conj_side : {false, true}) {
        AlgebraTerm t;
        t.mu = mu;
        t.nu = 3 - mu;
        t.coeff = unit * Complex(-lambda * binom(3, mu) /
                                     (std::pow(2.0 * omega, 1.5) * std::sqrt(2.0)),
                                 0.0);
        LinearFactor lf;
        lf.kernel = kx;
        lf.conjugated = conj_side;
        t.linear.push_back(std::move(lf));
        p.terms.push_back(std::move(t));
      }
    }
  }

  // field blocks d = 2, 3, 4 with kernels phi^2, phi, 1 (as w-profiles)
  {
    Complex c2(1.0, 0.0), c3(1.0, 0.0), c4(1.0, 0.0);
    Kernel k2 = make_kernel(CVec(profile_power(grid, phi, 2).cast<Complex>()), c2);
    Kernel k3 = make_kernel(CVec(phi.cast<Complex>()), c3);
    Kernel k4 = make_kernel(CVec(grid.r.cast<Complex>()), c4);

    for (int mu = 0; mu <= 2; ++mu) {
      AlgebraTerm t;
      t.mu = mu;
      t.nu = 2 - mu;
      t.coeff = c2 * Complex(-(lambda / 4.0) * binom(4, 2) * binom(2, mu) / (2.0 * omega), 0.0);
      FieldFactor ff;
      ff.kernel = k2;
      ff.u_power = 2;
      t.field = std::move(ff);
      p.terms.push_back(std::move(t));
    }
    for (int mu = 0; mu <= 1; ++mu) {
      AlgebraTerm t;
      t.mu = mu;
      t.nu = 1 - mu;
      t.coeff = c3 * Complex(-lambda / std::sqrt(2.0 * omega), 0.0);
      FieldFactor ff;
      ff.kernel = k3;
      ff.u_power = 3;
      t.field = std::move(ff);
      p.terms.push_back(std::move(t));
    }
    {
      AlgebraTerm t;
      t.coeff = c4 * Complex(-lambda / 4.0, 0.0);
      FieldFactor ff;
      ff.kernel = k4;
      ff.u_power = 4;
      t.field = std::move(ff);
      p.terms.push_back(std::move(t));
    }
  }

  canonicalize(p);
  return p;
}

HomologicalSplit solve_homological(const HamiltonianPoly& k, KernelOps& ops, double tol_res) {
  const SpectralData& sd = ops.spectral();
  const double omega = sd.omega, m = sd.m;
  const double tol = tol_res * m;
  HomologicalSplit out;
  out.z_part.d_max = out.chi.d_max = k.d_max;

  for (const auto& t : k.terms) {
    require(!t.field && t.linear.size() <= 1, "invalid-argument",
            "homological input must contain only scalar and f-linear monomials");
    const double detune = omega * (t.mu - t.nu);
    if (t.linear.empty()) {
      if (t.mu == t.nu) {
        out.z_part.terms.push_back(t);
        continue;
      }
      std::ostringstream mono;
      mono << "xi^" << t.mu << " xibar^" << t.nu;
      require(std::abs(detune) >= tol, "small-divisor",
              "near-resonant scalar divisor at " + mono.str());
      AlgebraTerm c = t;
      c.coeff *= Complex(0.0, 1.0) / detune;
      out.chi.terms.push_back(std::move(c));
      continue;
    }

    const bool conj_branch = t.linear[0].conjugated;
    // resonance test (normal-form membership): f branch omega(mu-nu) < -m,
    // conjugate branch omega(mu-nu) > m
    const double boundary = conj_branch ? m : -m;
    std::ostringstream mono;
    mono << "xi^" << t.mu << " xibar^" << t.nu << (conj_branch ? " fbar" : " f");
    require(std::abs(detune - boundary) >= tol, "small-divisor",
            "divisor at the continuous threshold for " + mono.str());
    const bool resonant = conj_branch ? (detune > m) : (detune < -m);
    if (resonant) {
      out.z_part.terms.push_back(t);
      continue;
    }
    // chi kernel: f branch  +i (B - omega(nu-mu))^{-1} Phi,
    //             fbar branch -i (B - omega(mu-nu))^{-1} Phi
    const double c_res = conj_branch ? detune : -detune;
    if (c_res > m) {
      out.notes.push_back("resolvent argument above threshold for " + mono.str());
    }
    AlgebraTerm c = t;
    c.coeff *= conj_branch ? Complex(0.0, -1.0) : Complex(0.0, 1.0);
    c.linear[0].kernel = ops.resolvent(t.linear[0].kernel, c_res, c.coeff);
    out.chi.terms.push_back(std::move(c));
  }
  canonicalize(out.z_part);
  canonicalize(out.chi);
  return out;
}

bool is_normal_form(const HamiltonianPoly& z, double omega, double m) {
  for (const auto& t : z.terms) {
    if (t.field) return false;
    if (t.linear.empty()) {
      if (t.mu != t.nu) return false;
      continue;
    }
    if (t.linear.size() != 1) return false;
    const double detune = omega * (t.mu - t.nu);
    if (t.linear[0].conjugated) {
      if (!(detune > m)) return false;
    } else {
      if (!(detune < -m)) return false;
    }
  }
  return true;
}

namespace {

// heads: scalar monomials of total degree deg, f-linear monomials of total
// degree deg (mu + nu = deg - 1)
HamiltonianPoly select_heads(const HamiltonianPoly& r, int deg) {
  HamiltonianPoly k;
  k.d_max = r.d_max;
  for (const auto& t : r.terms) {
    if (t.field || t.linear.size() > 1) continue;
    if (t.degree() != deg) continue;
    k.terms.push_back(t);
  }
  canonicalize(k);
  return k;
}

HamiltonianPoly remove_heads(const HamiltonianPoly& r, int deg) {
  HamiltonianPoly k;
  k.d_max = r.d_max;
  k.remainder_norm = r.remainder_norm;
  for (const auto& t : r.terms) {
    bool head = !t.field && t.linear.size() <= 1 && t.degree() == deg;
    if (!head) k.terms.push_back(t);
  }
  canonicalize(k);
  return k;
}

}  // namespace

NormalFormResult normal_form_recursion(const SpectralData& sd, double lambda, int N,
                                       const NormalFormOptions& opt) {
  require(N >= 1, "invalid-argument", "N must be a positive integer");
  const double omega = sd.omega, m = sd.m;
  require((2 * N - 1) * omega < m && m < (2 * N + 1) * omega, "frequency-window",
          "need (2N-1) omega < m < (2N+1) omega");
  require(std::abs(m - (2 * N + 1) * omega) >= opt.tol_res * m, "borderline-resonance",
          "m = (2N+1) omega is outside the theory's scope");
  int d_max = opt.d_max > 0 ? opt.d_max : 2 * N + 4;
  require(d_max >= 2 * N + 4, "truncation-overflow",
          "d_max must reach 2N+4 to hold the recursion");

  NormalFormResult res;
  res.N = N;
  res.lambda = lambda;
  KernelOps ops(sd);

  HamiltonianPoly r = step0_hamiltonian(sd, lambda, d_max);
  HamiltonianPoly z_acc;
  z_acc.d_max = d_max;

  for (int step = 0; step < 2 * N; ++step) {
    const int head_deg = 2 * step + 4;
    HamiltonianPoly k = select_heads(r, head_deg);
    HomologicalSplit split = solve_homological(k, ops, opt.tol_res);

    HamiltonianPoly r_new = remove_heads(r, head_deg);
    // exp(ad_chi) applied to H_L + Z + R; the H_L part enters through
    // {chi, H_L} = Z_step - K, whose series starts at 1/2!.
    HamiltonianPoly acc = add(z_acc, r);
    HamiltonianPoly cur = acc;
    double kfact = 1.0;
    for (int kk = 1; kk <= 24 && !cur.terms.empty(); ++kk) {
      cur = poisson_bracket(split.chi, cur, ops);
      kfact *= kk;
      r_new = add(r_new, scale(cur, Complex(1.0 / kfact, 0.0)));
    }
    HamiltonianPoly base = add(split.z_part, scale(k, Complex(-1.0, 0.0)));
    cur = base;
    kfact = 1.0;
    for (int kk = 1; kk <= 24 && !cur.terms.empty(); ++kk) {
      cur = poisson_bracket(split.chi, cur, ops);
      kfact *= (kk + 1);
      r_new = add(r_new, scale(cur, Complex(1.0 / kfact, 0.0)));
    }

    z_acc = add(z_acc, split.z_part);
    r = r_new;
    require(r.remainder_norm <= opt.remainder_budget, "truncation-overflow",
            "discarded-term mass exceeded the configured budget");

    // the processed degree must be clear of scalar/f-linear heads now
    HamiltonianPoly leftovers = select_heads(r, head_deg);
    require(max_coeff(leftovers) <= 1e-10 * std::max(1.0, max_coeff(z_acc)),
            "normal-form-internal", "head terms survived the homological step");

    std::ostringstream log;
    log << "step " << step << ": heads " << k.terms.size() << ", Z += "
        << split.z_part.terms.size() << ", chi " << split.chi.terms.size()
        << ", remainder terms " << r.terms.size() << ", discarded mass "
        << r.remainder_norm;
    res.steps_log.push_back(log.str());
    res.steps.push_back(NormalFormStep{std::move(k), std::move(split.z_part),
                                       std::move(split.chi)});
  }

  require(is_normal_form(z_acc, omega, m), "normal-form-internal",
          "resulting Z fails the normal-form classification");

  res.z = std::move(z_acc);
  res.remainder = std::move(r);

  // Phi_{0,2N+1}: the f-linear Z coefficient at (mu, nu) = (0, 2N+1)
  CVec phi_res = CVec::Zero(sd.grid.n);
  for (const auto& t : res.z.terms) {
    if (t.mu == 0 && t.nu == 2 * N + 1 && t.linear.size() == 1 && !t.linear[0].conjugated &&
        !t.field)
      phi_res += t.coeff * (*t.linear[0].kernel.vec);
  }
  res.phi_res = std::move(phi_res);
  res.golden = gamma_coefficient(sd, res.phi_res, N, opt.delta, opt.tol_res);
  return res;
}

namespace {

struct FlowState {
  Complex xi;
  CVec f;
};

FlowState axpy(const FlowState& a, double h, const FlowState& d) {
  return {a.xi + h * d.xi, a.f + h * d.f};
}

double flow_norm(const FlowState& s, double dr) {
  return std::sqrt(std::norm(s.xi) + s.f.squaredNorm() * dr);
}

}  // namespace

PhasePoint lie_transform_flow(const HamiltonianPoly& chi, const PhasePoint& z0,
                              const SpectralData& sd, int direction, const FlowOptions& opt) {
  require(direction == 1 || direction == -1, "invalid-argument", "direction must be +-1");
  if (chi.terms.empty() && !chi.is_hl) return z0;

  auto rhs = [&](const FlowState& s) -> FlowState {
    PhasePoint z{s.xi, s.f};
    FlowState d;
    d.xi = Complex(0.0, -1.0) * eval_partial_xibar(chi, z, sd);
    d.f = Complex(0.0, -1.0) * eval_grad_fbar(chi, z, sd);
    return d;
  };

  // Dormand-Prince 5(4)
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
  static const double B4[7] = {5179.0 / 57600,  0.0,        7571.0 / 16695, 393.0 / 640,
                               -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};
  static const double C[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
  (void)C;

  FlowState y{z0.xi, z0.f};
  const double dr = sd.grid.dr;
  double t = 0.0;
  const double t_end = static_cast<double>(direction);
  double h = 0.05 * direction;
  int guard = 0;
  while (std::abs(t - t_end) > 1e-15) {
    require(++guard < 100000, "flow-stalled", "adaptive flow failed to advance");
    if ((direction > 0 && t + h > t_end) || (direction < 0 && t + h < t_end)) h = t_end - t;
    FlowState ks[7];
    ks[0] = rhs(y);
    // oversized trial steps are rejected, not treated as domain exits
    bool wild = false;
    for (int i = 1; i < 7 && !wild; ++i) {
      FlowState yi = y;
      for (int j = 0; j < i; ++j) yi = axpy(yi, h * A[i][j], ks[j]);
      if (flow_norm(yi, dr) > 2.0 * opt.ball_radius) {
        wild = true;
        break;
      }
      ks[i] = rhs(yi);
    }
    if (wild) {
      h *= 0.25;
      if (std::abs(h) < 1e-12)
        throw DomainError("domain-exit", "flow left the configured ball");
      continue;
    }
    FlowState y5 = y, err{Complex(0, 0), CVec::Zero(y.f.size())};
    for (int i = 0; i < 7; ++i) {
      y5 = axpy(y5, h * B5[i], ks[i]);
      err = axpy(err, h * (B5[i] - B4[i]), ks[i]);
    }
    double scale_n = opt.atol + opt.rtol * std::max(flow_norm(y, dr), flow_norm(y5, dr));
    double e = flow_norm(err, dr) / scale_n;
    if (e <= 1.0) {
      t += h;
      y = y5;
      if (flow_norm(y, dr) > opt.ball_radius)
        throw DomainError("domain-exit", "flow left the configured ball");
    }
    double fac = (e > 0.0) ? 0.9 * std::pow(e, -0.2) : 5.0;
    fac = std::clamp(fac, 0.2, 5.0);
    h *= fac;
    if (std::abs(h) < 1e-12) h = (direction > 0 ? 1e-12 : -1e-12);
  }
  return PhasePoint{y.xi, y.f};
}

PhasePoint from_normal_coordinates(const NormalFormResult& nf, const SpectralData& sd,
                                   const PhasePoint& z, const FlowOptions& opt) {
  PhasePoint cur = z;
  for (auto it = nf.steps.rbegin(); it != nf.steps.rend(); ++it)
    cur = lie_transform_flow(it->chi, cur, sd, +1, opt);
  return cur;
}

PhasePoint to_normal_coordinates(const NormalFormResult& nf, const SpectralData& sd,
                                 const PhasePoint& z, const FlowOptions& opt) {
  PhasePoint cur = z;
  for (const auto& step : nf.steps) cur = lie_transform_flow(step.chi, cur, sd, -1, opt);
  return cur;
}

}  // namespace nlkg
