#pragma once

#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "nlkg/spectral.hpp"
#include "nlkg/types.hpp"

namespace nlkg {

// Shared immutable kernel vector with a content hash.  Kernels are stored with
// a canonical phase (largest entry real positive); the phase moves into the
// term coefficient, so numerically equal kernels merge across construction
// sites.  Linear-factor kernels live in the continuous subspace; field kernels
// are plain w-profiles.
struct Kernel {
  std::shared_ptr<const CVec> vec;
  uint64_t hash = 0;
  double scale = 0.0;  // max-abs entry, for the relative quantization
};

Kernel make_kernel(CVec v, Complex& coeff);

// One monomial of the interaction algebra:
//   coeff * xi^mu * conj(xi)^nu * prod_j int A_j f dx (or conj(f))
//         * [ int Psi(x) U(x)^d dx ],   U = B^{-1/2}(f + conj(f))/sqrt(2).
struct LinearFactor {
  Kernel kernel;
  bool conjugated = false;  // false: pairs with f, true: with conj(f)
};

struct FieldFactor {
  Kernel kernel;  // Psi as a w-profile
  int u_power = 2;  // d in {2, 3, 4}
};

struct AlgebraTerm {
  Complex coeff;
  int mu = 0, nu = 0;
  std::vector<LinearFactor> linear;
  std::optional<FieldFactor> field;

  int degree() const {
    return mu + nu + static_cast<int>(linear.size()) + (field ? field->u_power : 0);
  }
};

struct HamiltonianPoly {
  std::vector<AlgebraTerm> terms;
  double remainder_norm = 0.0;  // coefficient mass discarded above d_max
  int d_max = 8;
  bool is_hl = false;  // marker for H_L = omega |xi|^2 + <conj(f), B f>

  bool empty() const { return terms.empty() && !is_hl; }
};

// The quadratic Hamiltonian as a bracketable marker object.
HamiltonianPoly make_hl(int d_max = 8);

// Sorts factors, merges coefficient-equal monomials, drops exact zeros.
void canonicalize(HamiltonianPoly& p);

// Largest |coeff| over the terms (0 for empty).
double max_coeff(const HamiltonianPoly& p);

HamiltonianPoly add(const HamiltonianPoly& a, const HamiltonianPoly& b);
HamiltonianPoly scale(const HamiltonianPoly& a, Complex c);

// Formal conjugate: mu <-> nu, factors conjugated, coefficients conjugated.
HamiltonianPoly formal_conjugate(const HamiltonianPoly& p);

// True when p equals its formal conjugate termwise within tol (relative to the
// largest coefficient).
bool is_real_poly(const HamiltonianPoly& p, double tol = 1e-10);

struct PhasePoint {
  Complex xi;
  CVec f;  // continuous-part complex variable, P_c f = f
};

// Numeric evaluation of the algebra by grid quadrature.
Complex evaluate_hamiltonian(const HamiltonianPoly& p, const PhasePoint& z,
                             const SpectralData& sd);

// dH/d(conj(xi)) and the L^2 gradient w.r.t. conj(f) at z; these drive the
// Hamiltonian vector field (xi' = -i dH/dxibar, f' = -i grad_fbar H).
Complex eval_partial_xibar(const HamiltonianPoly& p, const PhasePoint& z,
                           const SpectralData& sd);
CVec eval_grad_fbar(const HamiltonianPoly& p, const PhasePoint& z, const SpectralData& sd);

// Operator applications with per-kernel memoization shared across bracket
// evaluations.  All results are continuum-projected.
class KernelOps {
 public:
  explicit KernelOps(const SpectralData& sd) : sd_(sd) {}
  const SpectralData& spectral() const { return sd_; }

  // B^{-1/2} P_c
  Kernel half_inverse(const Kernel& k, Complex& coeff);
  // B P_c
  Kernel b_apply(const Kernel& k, Complex& coeff);
  // (B - c)^{-1} P_c for c below the continuous spectrum
  Kernel resolvent(const Kernel& k, double c, Complex& coeff);

 private:
  struct Cached {
    Kernel kernel;
    Complex phase;
  };
  const SpectralData& sd_;
  std::unordered_map<uint64_t, Cached> half_inv_cache_;
  std::unordered_map<uint64_t, Cached> b_cache_;
};

// {A, B} = i (dA/dxi dB/dxibar - dA/dxibar dB/dxi)
//        + i <grad_f A, grad_fbar B> - i <grad_fbar A, grad_f B>,
// expanded in the closed term class.  Terms pushed past d_max accumulate into
// remainder_norm.  Pairs where both sides carry a field factor are outside the
// closed class and are rejected; the normal-form flow never produces them
// (generators are scalar + f-linear).
HamiltonianPoly poisson_bracket(const HamiltonianPoly& a, const HamiltonianPoly& b,
                                const SpectralData& sd);
HamiltonianPoly poisson_bracket(const HamiltonianPoly& a, const HamiltonianPoly& b,
                                KernelOps& ops);

}  // namespace nlkg
