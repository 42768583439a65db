#pragma once

#include <vector>

#include "nlkg/spectral.hpp"
#include "nlkg/types.hpp"

namespace nlkg {

// Regularized resolvent (B - Lambda -/+ i eps)^{-1} P_c applied to a target,
// with an eps ladder and extrapolation to the limiting-absorption boundary
// value.  sign = +1 selects +i0 (the t < 0 prescription), -1 selects -i0.
struct ResolventQuery {
  double lambda = 0.0;
  int sign = -1;                    // -1 -> -i0, +1 -> +i0
  std::vector<double> eps_ladder;   // strictly decreasing positive; may be empty
                                    // or {0} for the nonsingular case
  CVec target;
};

struct ResolventResult {
  std::vector<CVec> per_eps;
  CVec limit;
  double order_estimate = 0.0;  // Richardson order seen on <target, result>
  bool ill_conditioned = false; // Lambda hugs an eigenvalue below the ladder floor
};

ResolventResult resolvent_apply(const SpectralData& sd, const ResolventQuery& q);

// <Phi, delta(B - Lambda) conj(Phi)> estimated two ways: a Gaussian-kernel
// ladder over the box modes (primary) and the Plemelj imaginary part of the
// -i0 resolvent (cross-check).  Exactly zero below the continuous threshold.
struct DeltaEstimate {
  double kernel = 0.0;      // ladder-extrapolated kernel value (primary)
  double resolvent = 0.0;   // pi^{-1} Im <Phi,(B-Lambda-i0)^{-1} conj(Phi)>
  bool below_threshold = false;
  bool line_resolved = false;  // ladder diverged like 1/sigma: isolated line,
                               // reported as |c_k|^2 / local spacing
  std::vector<double> kernel_ladder;  // raw g(sigma) values, widest first
};

struct DeltaOptions {
  std::vector<double> sigma_over_spacing = {8.0, 4.0, 2.0};
  std::vector<double> eps_over_spacing = {8.0, 4.0, 2.0};
};

DeltaEstimate spectral_delta(const SpectralData& sd, const CVec& phi_vec, double lambda,
                             const DeltaOptions& opt = {});

// Local spacing of sqrt(E) near lambda over the continuum modes.
double local_level_spacing(const SpectralData& sd, double lambda);

struct GoldenRuleReport {
  int N = 1;
  double omega = 0.0;
  double m = 0.0;
  double lambda_res = 0.0;  // (2N+1) omega
  double gamma_kernel = 0.0;
  double gamma_resolvent = 0.0;
  double gamma = 0.0;  // mean of the two
  double spread = 0.0; // relative disagreement
  bool spread_flag = false;  // > 5%
  DeltaOptions options;
};

// gamma = (2N+1) <Phi, delta(B-(2N+1) omega) conj(Phi)>.  Requires the
// frequency window (2N-1) omega < m < (2N+1) omega; the borderline
// m = (2N+1) omega is rejected.
GoldenRuleReport gamma_coefficient(const SpectralData& sd, const CVec& phi_res, int N,
                                   const DeltaOptions& opt = {}, double tol_res = 1e-6);

// N = 1 constant of the cubic resonance condition:
//   Gamma = (pi / 3 omega) <P_c phi^3, delta(B - 3 omega) P_c phi^3>.
// Requires 3 omega > m; otherwise the weak-resonance error is thrown.
double gamma_sw(const SpectralData& sd, const DeltaOptions& opt = {});

}  // namespace nlkg
