#pragma once

#include <memory>
#include <vector>

#include "nlkg/grid.hpp"
#include "nlkg/types.hpp"

namespace nlkg {

// Symmetric tridiagonal matrix of H = -d^2/dr^2 + m^2 + V(r) with Dirichlet
// conditions at r = 0 and r = r_max.
struct Tridiag {
  Vec diag;  // 2/dr^2 + m^2 + V(r_i)
  Vec sub;   // -1/dr^2, length n-1

  Vec apply(const Vec& x) const;
  CVec apply(const CVec& x) const;
};

Tridiag assemble_hamiltonian(const RadialGrid& grid, const PotentialSpec& pot);

// Number of eigenvalues of T strictly below x (Sturm count).
int sturm_count(const Tridiag& T, double x);

enum class SpectralPart { All, Discrete, Continuous };

// Full spectral data of the discretized operator.  Eigenvectors are stored
// orthonormal in the grid inner product <u,v> = sum u_i v_i dr; the unique
// bound state phi carries the sign convention phi(r_1) > 0.
class SpectralData {
 public:
  RadialGrid grid;
  PotentialSpec potential;
  Vec eigenvalues;   // E_1 <= ... <= E_n  (energy^2)
  Vec sqrt_e;        // sqrt(E_k), the spectrum of B
  Mat vectors;       // columns = eigenvectors, dr-orthonormal
  std::vector<int> discrete;  // indices with E_k < m^2
  double omega = 0.0;         // sqrt of the unique discrete eigenvalue
  Vec phi;                    // bound-state profile, dr-normalized
  double m = 0.0;

  double continuous_threshold() const { return m * m; }

  // <v_k, x> in the dr metric, all modes.
  Vec coeffs(const Vec& x) const;
  CVec coeffs(const CVec& x) const;
  Vec from_coeffs(const Vec& c) const;
  CVec from_coeffs(const CVec& c) const;

  bool is_discrete(int k) const;
};

// Diagonalizes the tridiagonal operator (bisection + inverse iteration) and
// validates assumption (V4): exactly one strictly positive eigenvalue below
// the continuous threshold m^2.  Throws DomainError("spectral-assumption-violated")
// otherwise; the message carries |D| and the offending eigenvalues.
SpectralData eigendecompose(const Tridiag& T, const RadialGrid& grid, const PotentialSpec& pot);

// B^s v = sum_k E_k^{s/2} <v_k, v> v_k over the selected spectral part.
Vec apply_B_power(const SpectralData& sd, double s, const Vec& v,
                  SpectralPart part = SpectralPart::All);
CVec apply_B_power(const SpectralData& sd, double s, const CVec& v,
                   SpectralPart part = SpectralPart::All);

// P_d v = <phi, v> phi ; P_c v = v - P_d v.
Vec project(const SpectralData& sd, const Vec& v, SpectralPart part);
CVec project(const SpectralData& sd, const CVec& v, SpectralPart part);

// L^p norm of the radial function u = w/r with the 3D measure:
//   (4 pi sum |w_i/r_i|^p r_i^2 dr)^{1/p};  p = inf -> max |w_i/r_i|.
// Supported p: 1, 2, 4, 8 and infinity (p <= 0 selects infinity).
double lp_norm(const Vec& w, double p, const RadialGrid& grid);
double lp_norm(const CVec& w, double p, const RadialGrid& grid);

// Pointwise product of radial functions given as w-profiles: (a*b)_i = a_i b_i / r_i.
Vec profile_product(const RadialGrid& grid, const Vec& a, const Vec& b);

// w-profile of u^p for u = w/r, i.e. w^p / r^{p-1}.
Vec profile_power(const RadialGrid& grid, const Vec& w, int p);

// Integral over R^3 of a product of P radial functions given as w-profiles:
//   sum_i (prod_j a_j,i) / r_i^{P-2} dr   (solid-angle factor omitted; the
// grid inner product carries the same convention so the Hamiltonian flow is
// coherent).
double integral_r3(const RadialGrid& grid, const std::vector<const Vec*>& factors);

// Transcendental-equation oracle for the square-well ground state: solves
// sqrt(V0-b) * cot(a*sqrt(V0-b)) = -sqrt(b) for the binding energy b = m^2 - omega^2
// of the j-th s-wave bound state (j = 0 is the ground state).  Returns nullopt
// when no such state exists.
std::optional<double> square_well_binding_energy(double V0, double a, int j = 0);

}  // namespace nlkg
