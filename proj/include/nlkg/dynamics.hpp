#pragma once

#include <optional>
#include <vector>

#include "nlkg/fit.hpp"
#include "nlkg/spectral.hpp"

namespace nlkg {

struct SimState {
  Vec w;    // w = r u
  Vec w_t;  // time derivative
  double t = 0.0;
};

enum class Scheme { Strang, Leapfrog };

struct SimConfig {
  double lambda = -1.0;
  double dt = 0.02;
  double horizon = 100.0;
  Scheme scheme = Scheme::Strang;
  int stride = 50;        // record every stride steps
  double a0 = 0.5;        // bound-state amplitude
  double c0 = 0.0;        // continuous seed amplitude (L2 size of P_c data)
  double C0 = 1.0;        // data-class cap ||P_c data|| <= C0 ||P_d data||
  double seed_width = 2.0;
  double blowup_sup = 50.0;  // guard on sup |u|
  bool allow_boundary = false;
};

// Exact linear propagation in the eigenbasis:
// c_k(t) = c_k cos(sqrt(E_k) tau) + d_k sin(sqrt(E_k) tau)/sqrt(E_k).
SimState linear_propagate(const SpectralData& sd, const SimState& state, double tau);

// One step of the nonlinear flow w_tt = -H w + lambda w^3/r^2.
// Strang: exact linear half-steps around the cubic kick.  Leapfrog:
// velocity-Verlet with the finite-difference linear part.
SimState step_nlkg(const SimState& state, double dt, double lambda, const SpectralData& sd,
                   Scheme scheme = Scheme::Strang);

// E = 1/2 sum(d_k^2 + E_k c_k^2) - (lambda/4) int u^4 (3D radial measure).
double energy(const SimState& state, const SpectralData& sd, double lambda);

// Time before boundary reflections can contaminate observables near the well.
double reflection_time(const SpectralData& sd, const Vec& data_profile);

struct ProbeResult {
  FitResult fit;
  std::vector<double> times;
  std::vector<double> values;
  bool boundary_contaminated = false;
};

// Evolves P_c psi linearly and fits the log-log decay of
// ||<x>^{-sigma} B^{-1/2} e^{-iBt} P_c psi||_{L^{p'}} over t in [1, horizon].
ProbeResult dispersive_decay_probe(const SpectralData& sd, const CVec& psi, double p_prime,
                                   std::optional<double> sigma, double horizon,
                                   int samples = 64);

// Evolves <x>^{-sigma} e^{iBt} (B-Lambda+i0)^{-l} P_c <x>^{-sigma} psi in the
// eigenbasis and fits the L^2 decay.
ProbeResult singular_resolvent_probe(const SpectralData& sd, double lambda_res,
                                     const CVec& psi, int l, double sigma, double horizon,
                                     int samples = 64);

struct SimRun {
  std::vector<SimState> samples;   // stride-sampled states (includes t = 0)
  std::vector<double> energies;    // per sample
  double t_reflect = 0.0;
  SimConfig config;
};

// Integrates the radial NLKG from the configured initial data recipe
// (w0 = a0 phi + c0 * normalized P_c seed, w_t0 = 0).
SimRun simulate(const SpectralData& sd, const SimConfig& cfg);

}  // namespace nlkg
