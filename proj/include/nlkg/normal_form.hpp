#pragma once

#include <string>
#include <vector>

#include "nlkg/fgr.hpp"
#include "nlkg/term_algebra.hpp"

namespace nlkg {

// Exact multinomial expansion of the interaction Hamiltonian
//   H_P = -(lambda/4) int ((xi + conj(xi)) phi / sqrt(2 omega) + U)^4 dx
// into the term class: scalar quartic, f-linear cubic block with kernel
// proportional to B^{-1/2} P_c(phi^3), and field factors with d = 2, 3, 4.
HamiltonianPoly step0_hamiltonian(const SpectralData& sd, double lambda, int d_max);

struct HomologicalSplit {
  HamiltonianPoly z_part;
  HamiltonianPoly chi;
  std::vector<std::string> notes;
};

// Per-monomial solve of {H_L, chi} + Z = K.  K may contain only scalar and
// f-linear monomials.  Scalar mu = nu and f-linear resonant monomials
// (omega(mu-nu) < -m for the f branch, > m for the conjugate branch) land in
// Z; everything else divides into chi.  Near-resonant divisors raise the
// small-divisor error naming the monomial.
HomologicalSplit solve_homological(const HamiltonianPoly& k, KernelOps& ops,
                                   double tol_res = 1e-6);

// Definition of normal form: action monomials |xi|^{2 mu} plus f-linear
// monomials with omega(mu-nu) < -m (f branch) or > m (conjugate branch).
bool is_normal_form(const HamiltonianPoly& z, double omega, double m);

struct NormalFormOptions {
  int d_max = 0;          // 0 selects 2N+4
  double tol_res = 1e-6;  // relative to m
  double remainder_budget = 1e300;  // coefficient-mass proxy; off by default
  DeltaOptions delta;
};

struct NormalFormStep {
  HamiltonianPoly k;       // frozen heads fed to the homological equation
  HamiltonianPoly z_step;  // resonant part kept
  HamiltonianPoly chi;     // generator
};

struct NormalFormResult {
  int N = 1;
  double lambda = -1.0;
  HamiltonianPoly z;                  // Z^{(2N)}
  std::vector<NormalFormStep> steps;  // r = 0 .. 2N-1
  HamiltonianPoly remainder;
  CVec phi_res;  // Phi_{0,2N+1} with the coefficient folded in
  GoldenRuleReport golden;
  std::vector<std::string> steps_log;
};

// Runs the inductive scheme for r = 0..2N-1: freeze the xi-independent heads,
// solve the homological equation, push the Hamiltonian through the Lie series
// of the generator, truncate at d_max.  Requires the frequency window
// (2N-1) omega < m < (2N+1) omega and d_max >= 2N+4.
NormalFormResult normal_form_recursion(const SpectralData& sd, double lambda, int N,
                                       const NormalFormOptions& opt = {});

struct FlowOptions {
  double rtol = 1e-10;
  double atol = 1e-13;
  double ball_radius = 2.0;
};

// Time-(+-1) flow of the generator's Hamiltonian vector field
// (xi' = -i d chi/d conj(xi), f' = -i grad_{conj(f)} chi), integrated
// adaptively; exits with the domain-exit error if the trajectory leaves the
// configured ball.
PhasePoint lie_transform_flow(const HamiltonianPoly& chi, const PhasePoint& z,
                              const SpectralData& sd, int direction,
                              const FlowOptions& opt = {});

// T = phi_1 o ... o phi_{2N} maps normal coordinates to the original ones.
PhasePoint from_normal_coordinates(const NormalFormResult& nf, const SpectralData& sd,
                                   const PhasePoint& z, const FlowOptions& opt = {});
PhasePoint to_normal_coordinates(const NormalFormResult& nf, const SpectralData& sd,
                                 const PhasePoint& z, const FlowOptions& opt = {});

}  // namespace nlkg
