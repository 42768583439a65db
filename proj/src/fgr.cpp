#include "nlkg/fgr.hpp"

#include <algorithm>
#include <cmath>

namespace nlkg {

namespace {

// Estimated order p and extrapolated limit from a refinement sequence
// g(h_i) with h strictly decreasing; assumes g = g0 + c h^p.
struct Extrap {
  double value = 0.0;
  double order = 0.0;
  bool diverging = false;
};

Extrap richardson(const std::vector<double>& h, const std::vector<double>& g) {
  Extrap out;
  const size_t n = g.size();
  if (n == 0) return out;
  out.value = g.back();
  if (n < 2) return out;
  const double rho = h[n - 2] / h[n - 1];
  // effective order from |g_i - g_{i+1}| ~ h_i^p: least squares over the ladder
  double p = 1.0;
  {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (size_t i = 0; i + 1 < n; ++i) {
      double d = std::abs(g[i] - g[i + 1]);
      if (d == 0.0) continue;
      double x = std::log(h[i]), y = std::log(d);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
      ++cnt;
    }
    if (cnt >= 2) p = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  }
  out.order = p;
  if (p < 0.25) {
    out.diverging = true;
    return out;
  }
  p = std::clamp(p, 0.5, 4.0);
  out.value = g[n - 1] + (g[n - 1] - g[n - 2]) / (std::pow(rho, p) - 1.0);
  return out;
}

}  // namespace

double local_level_spacing(const SpectralData& sd, double lambda) {
  // nearest continuum mode to lambda in sqrt(E)
  int best = -1;
  double bd = 1e300;
  const int n = static_cast<int>(sd.sqrt_e.size());
  for (int k = 0; k < n; ++k) {
    if (sd.is_discrete(k)) continue;
    double d = std::abs(sd.sqrt_e[k] - lambda);
    if (d < bd) {
      bd = d;
      best = k;
    }
  }
  require(best >= 0, "invalid-argument", "no continuum modes");
  int lo = std::max(best - 1, 0), hi = std::min(best + 1, n - 1);
  while (lo > 0 && sd.is_discrete(lo)) --lo;
  if (sd.is_discrete(lo)) lo = best;
  return (sd.sqrt_e[hi] - sd.sqrt_e[lo]) / std::max(hi - lo, 1);
}

ResolventResult resolvent_apply(const SpectralData& sd, const ResolventQuery& q) {
  require(q.target.allFinite(), "invalid-argument", "resolvent_apply: non-finite target");
  require(q.sign == 1 || q.sign == -1, "invalid-argument", "resolvent sign must be +-1");
  bool has_positive = false;
  for (size_t i = 0; i < q.eps_ladder.size(); ++i) {
    if (q.eps_ladder[i] > 0.0) has_positive = true;
    if (i > 0)
      require(q.eps_ladder[i] < q.eps_ladder[i - 1], "invalid-argument",
              "eps ladder must be strictly decreasing");
  }
  if (has_positive)
    require(q.eps_ladder.size() >= 3, "invalid-argument",
            "singular resolvent needs an eps ladder with at least 3 rungs");

  CVec c = sd.coeffs(project(sd, q.target, SpectralPart::Continuous));
  const int n = static_cast<int>(c.size());
  std::vector<double> lads = q.eps_ladder;
  if (lads.empty()) lads.push_back(0.0);

  ResolventResult res;
  std::vector<double> probe;  // Im<target, result> drives the order estimate
  std::vector<double> h;
  for (double eps : lads) {
    CVec out = CVec::Zero(n);
    for (int k = 0; k < n; ++k) {
      if (sd.is_discrete(k) || c[k] == Complex(0, 0)) continue;
      Complex den(sd.sqrt_e[k] - q.lambda, -q.sign * eps);
      out[k] = c[k] / den;
    }
    res.per_eps.push_back(sd.from_coeffs(out));
    if (eps > 0.0) {
      h.push_back(eps);
      probe.push_back((q.target.conjugate().cwiseProduct(res.per_eps.back())).sum().imag() *
                      sd.grid.dr);
    }
  }

  if (h.size() >= 2) {
    Extrap ex = richardson(h, probe);
    res.order_estimate = ex.order;
    double p = std::clamp(ex.diverging ? 1.0 : ex.order, 0.5, 4.0);
    const size_t nl = res.per_eps.size();
    double rho = h[h.size() - 2] / h[h.size() - 1];
    double fac = 1.0 / (std::pow(rho, p) - 1.0);
    res.limit = res.per_eps[nl - 1] + (res.per_eps[nl - 1] - res.per_eps[nl - 2]) * fac;
  } else {
    res.limit = res.per_eps.back();
  }

  // warn when lambda hugs a box eigenvalue more closely than the ladder floor
  double closest = 1e300;
  for (int k = 0; k < n; ++k)
    if (!sd.is_discrete(k)) closest = std::min(closest, std::abs(sd.sqrt_e[k] - q.lambda));
  double floor_eps = lads.back();
  if (closest < 1e-9 && floor_eps < local_level_spacing(sd, q.lambda))
    res.ill_conditioned = true;
  return res;
}

DeltaEstimate spectral_delta(const SpectralData& sd, const CVec& phi_vec, double lambda,
                             const DeltaOptions& opt) {
  DeltaEstimate est;
  if (lambda <= sd.m) {
    est.below_threshold = true;
    return est;
  }
  CVec c = sd.coeffs(project(sd, phi_vec, SpectralPart::Continuous));
  const int n = static_cast<int>(c.size());
  Vec w(n);
  for (int k = 0; k < n; ++k) w[k] = std::norm(c[k]);
  if (w.maxCoeff() == 0.0) return est;

  const double spacing = local_level_spacing(sd, lambda);

  // (a) Gaussian kernel ladder
  std::vector<double> sig, g;
  for (double mult : opt.sigma_over_spacing) {
    double s = mult * spacing;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      if (sd.is_discrete(k) || w[k] == 0.0) continue;
      double x = (sd.sqrt_e[k] - lambda) / s;
      acc += w[k] * std::exp(-0.5 * x * x) / (s * std::sqrt(2.0 * M_PI));
    }
    sig.push_back(s);
    g.push_back(acc);
  }
  est.kernel_ladder = g;
  Extrap ex = richardson(sig, g);
  if (ex.diverging) {
    // Ladder grows like 1/sigma: the weight near lambda is a resolved isolated
    // line; report its density against the local spacing.
    int best = -1;
    double bd = 1e300;
    for (int k = 0; k < n; ++k) {
      if (sd.is_discrete(k)) continue;
      double d = std::abs(sd.sqrt_e[k] - lambda);
      if (d < bd) {
        bd = d;
        best = k;
      }
    }
    est.line_resolved = true;
    est.kernel = w[best] / local_level_spacing(sd, sd.sqrt_e[best]);
  } else {
    est.kernel = std::max(ex.value, 0.0);
  }

  // (b) Plemelj route through the eps-regularized resolvent
  std::vector<double> hh, gg;
  for (double mult : opt.eps_over_spacing) {
    double eps = mult * spacing;
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      if (sd.is_discrete(k) || w[k] == 0.0) continue;
      double d = sd.sqrt_e[k] - lambda;
      acc += w[k] * eps / (d * d + eps * eps);
    }
    hh.push_back(eps);
    gg.push_back(acc / M_PI);
  }
  Extrap exr = richardson(hh, gg);
  est.resolvent = std::max(exr.diverging ? gg.back() : exr.value, 0.0);
  return est;
}

GoldenRuleReport gamma_coefficient(const SpectralData& sd, const CVec& phi_res, int N,
                                   const DeltaOptions& opt, double tol_res) {
  require(N >= 1, "invalid-argument", "N must be a positive integer");
  GoldenRuleReport rep;
  rep.N = N;
  rep.omega = sd.omega;
  rep.m = sd.m;
  rep.lambda_res = (2 * N + 1) * sd.omega;
  rep.options = opt;
  require(std::abs(sd.m - rep.lambda_res) >= tol_res * sd.m, "borderline-resonance",
          "m = (2N+1) omega is outside the theory's scope");
  require((2 * N - 1) * sd.omega < sd.m && sd.m < rep.lambda_res, "frequency-window",
          "need (2N-1) omega < m < (2N+1) omega");
  DeltaEstimate de = spectral_delta(sd, phi_res, rep.lambda_res, opt);
  rep.gamma_kernel = (2 * N + 1) * de.kernel;
  rep.gamma_resolvent = (2 * N + 1) * de.resolvent;
  rep.gamma = 0.5 * (rep.gamma_kernel + rep.gamma_resolvent);
  double mx = std::max(std::abs(rep.gamma_kernel), std::abs(rep.gamma_resolvent));
  rep.spread = (mx > 0.0) ? std::abs(rep.gamma_kernel - rep.gamma_resolvent) / mx : 0.0;
  rep.spread_flag = rep.spread > 0.05;
  return rep;
}

double gamma_sw(const SpectralData& sd, const DeltaOptions& opt) {
  const double lam = 3.0 * sd.omega;
  require(lam > sd.m, "weak-resonance",
          "3 omega <= m: the cubic resonance condition has no continuum support");
  Vec phi3 = profile_power(sd.grid, sd.phi, 3);
  CVec pc = project(sd, CVec(phi3.cast<Complex>()), SpectralPart::Continuous);
  DeltaEstimate de = spectral_delta(sd, pc, lam, opt);
  return (M_PI / lam) * de.kernel;
}

}  // namespace nlkg
