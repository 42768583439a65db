#pragma once

#include <functional>
#include <vector>

#include "nlkg/dynamics.hpp"
#include "nlkg/normal_form.hpp"

namespace nlkg {

struct ModePair {
  Complex xi;
  CVec f;  // continuous-part complex variable
  double t = 0.0;
};

// xi = (q sqrt(omega) + i p / sqrt(omega)) / sqrt(2) with q = <phi, w>,
// p = <phi, w_t>; f = (B^{1/2} P_c w + i B^{-1/2} P_c w_t) / sqrt(2).
ModePair extract_modes(const SimState& state, const SpectralData& sd);
SimState reconstruct_state(const ModePair& modes, const SpectralData& sd);

struct EnvelopeSeries {
  std::vector<double> times;
  std::vector<double> abs_xi;
  std::vector<double> theta;       // unwrapped, with omega t removed
  std::vector<double> eta_l8;      // ||P_c u||_L8
  std::vector<double> f_l8;        // ||B^{-1/2} f||_L8
  std::vector<double> f_wl4;       // ||<x>^{-sigma} B^{1/2} f||_L4
  std::vector<double> pc_l2;       // ||P_c u||_L2
  std::vector<double> energy;
};

EnvelopeSeries build_series(const SimRun& run, const SpectralData& sd, double sigma = 3.0);

// Same observables, with every sample pushed through the inverse of the
// normal-form transformation first (the reduced law lives there).
EnvelopeSeries build_series_normal(const SimRun& run, const SpectralData& sd,
                                   const NormalFormResult& nf, double sigma = 3.0,
                                   int max_samples = 150, double rtol = 1e-7);

// Centered moving average over 2*half_window+1 samples (edges trimmed);
// |xi| is averaged through |xi|^2.  Removes the multiple-of-omega beats so
// the secular envelope is what gets fitted.
EnvelopeSeries smooth_series(const EnvelopeSeries& s, int half_window);

// |xi(t)| of the unforced reduced law.
double envelope_closed_form(double abs_xi0, double gamma, int N, double t);

struct EnvelopeSolveResult {
  std::vector<double> times;
  std::vector<double> r;  // |xi|^2
  bool clipped = false;   // forcing drove r to zero
};

// Adaptive integration of r' = -2 gamma r^{2N+1} + forcing(t, r), r = |xi|^2.
EnvelopeSolveResult envelope_ode_solve(double abs_xi0, double gamma, int N, double horizon,
                                       const std::function<double(double, double)>& forcing = {},
                                       double rtol = 1e-11, int samples = 400);

// Closed-form comparison barriers for r = |xi|^{4N} under the forcing
// hypothesis |R_xi| <= Q0 (1 + 4 N gamma r0 t)^{-(4N+1)/(4N)-delta}.
struct BarrierPair {
  double r0 = 0.0, gamma = 0.0, q0 = 0.0, delta = 0.1;
  int N = 1;
  double c_upper = 0.0;  // minimal admissible upper-barrier constant
  double c_lower = 0.0;  // minimal admissible lower-barrier constant
  double upper(double t) const;
  double lower(double t) const;
};

BarrierPair comparison_bounds(double r0, double gamma, int N, double q0, double delta);

// M_f = -xi^{2N+1} (B - (2N+1) omega - i0)^{-1} conj(Phi_res).
CVec main_term_f(Complex xi, const CVec& phi_res, const SpectralData& sd, int N);

// OLS power-law fit over [t0, t1]; requires at least 20 samples in window.
FitResult fit_decay(const std::vector<double>& t, const std::vector<double>& v, double t0,
                    double t1);

// Fitted growth exponent of |theta(t)| over [t0, t1].
FitResult theta_growth(const EnvelopeSeries& series, double t0, double t1);

// Resonance-dominated fit window [5e-2/(gamma |xi0|^{4N}), min(t_reflect, horizon)].
std::pair<double, double> resonance_window(double abs_xi0, double gamma, int N,
                                           double t_reflect, double horizon);

enum class ConvKernel {
  MinPower,     // min(u^{-(1+delta)}, u^{-(1-delta)})
  InverseSqrt,  // u^{-1/2}
};

struct ConvolutionCheck {
  std::vector<double> times;
  std::vector<double> ratios;  // integral / claimed bound
  double max_ratio = 0.0;
};

// Quadrature of int_0^t kernel(t-s) <xi0^{4N} s>^{-alpha} ds against the
// claimed bound (<xi0^{4N} t>^{-alpha} for MinPower with 0 <= alpha <= 1+delta;
// xi0^{-2N} <xi0^{4N} t>^{-1/2} for InverseSqrt with alpha > 1).
ConvolutionCheck convolution_check(ConvKernel kernel, double delta, double alpha, double xi0,
                                   int N, double t_min, double t_max, int nt = 30,
                                   int panels = 48);

}  // namespace nlkg
