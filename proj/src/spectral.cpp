#include "nlkg/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nlkg {

Vec Tridiag::apply(const Vec& x) const {
  const int n = static_cast<int>(diag.size());
  Vec y(n);
  for (int i = 0; i < n; ++i) {
    double acc = diag[i] * x[i];
    if (i > 0) acc += sub[i - 1] * x[i - 1];
    if (i + 1 < n) acc += sub[i] * x[i + 1];
    y[i] = acc;
  }
  return y;
}

CVec Tridiag::apply(const CVec& x) const {
  const int n = static_cast<int>(diag.size());
  CVec y(n);
  for (int i = 0; i < n; ++i) {
    Complex acc = diag[i] * x[i];
    if (i > 0) acc += sub[i - 1] * x[i - 1];
    if (i + 1 < n) acc += sub[i] * x[i + 1];
    y[i] = acc;
  }
  return y;
}

Tridiag assemble_hamiltonian(const RadialGrid& grid, const PotentialSpec& pot) {
  Vec v = potential_on_grid(grid, pot);
  Tridiag T;
  const double inv_dr2 = 1.0 / (grid.dr * grid.dr);
  T.diag = Vec::Constant(grid.n, 2.0 * inv_dr2 + pot.mass * pot.mass) + v;
  T.sub = Vec::Constant(grid.n - 1, -inv_dr2);
  return T;
}

int sturm_count(const Tridiag& T, double x) {
  const int n = static_cast<int>(T.diag.size());
  int cnt = 0;
  double q = T.diag[0] - x;
  if (q < 0) ++cnt;
  for (int i = 1; i < n; ++i) {
    double e2 = T.sub[i - 1] * T.sub[i - 1];
    if (q == 0.0) q = 1e-300;
    q = T.diag[i] - x - e2 / q;
    if (q < 0) ++cnt;
  }
  return cnt;
}

namespace {

// All eigenvalues by bisection.  The Sturm recurrences for every index run in
// lockstep so each sweep over the matrix refines all n midpoints at once.
Vec eigenvalues_bisection(const Tridiag& T) {
  const int n = static_cast<int>(T.diag.size());
  double lo = 1e300, hi = -1e300;
  for (int i = 0; i < n; ++i) {
    double rad = (i > 0 ? std::abs(T.sub[i - 1]) : 0.0) +
                 (i + 1 < n ? std::abs(T.sub[i]) : 0.0);
    lo = std::min(lo, T.diag[i] - rad);
    hi = std::max(hi, T.diag[i] + rad);
  }
  const double scale = std::max(std::abs(lo), std::abs(hi));
  Eigen::ArrayXd a = Eigen::ArrayXd::Constant(n, lo);
  Eigen::ArrayXd b = Eigen::ArrayXd::Constant(n, hi);
  Eigen::ArrayXd e2(n > 1 ? n - 1 : 0);
  for (int i = 0; i + 1 < n; ++i) e2[i] = T.sub[i] * T.sub[i];
  Eigen::ArrayXd mid(n), q(n);
  Eigen::ArrayXi cnt(n), idx(n);
  for (int k = 0; k < n; ++k) idx[k] = k;
  const double tol = 16.0 * std::numeric_limits<double>::epsilon() * scale;
  while ((b - a).maxCoeff() > tol) {
    mid = 0.5 * (a + b);
    q = T.diag[0] - mid;
    cnt = (q < 0.0).cast<int>();
    for (int i = 1; i < n; ++i) {
      q = (q == 0.0).select(1e-300, q);
      q = T.diag[i] - mid - e2[i - 1] / q;
      cnt += (q < 0.0).cast<int>();
    }
    a = (cnt > idx).select(a, mid);
    b = (cnt > idx).select(mid, b);
  }
  return (0.5 * (a + b)).matrix();
}

// One inverse-iteration eigenvector for a converged eigenvalue, via LU of
// (T - lambda I) with partial pivoting (three-band U, multipliers reused).
struct TinvitWork {
  Vec u, v, w, mult;
  std::vector<unsigned char> swapped;
};

void factor_shifted(const Tridiag& T, double lambda, TinvitWork& wk) {
  const int n = static_cast<int>(T.diag.size());
  wk.u.resize(n);
  wk.v.resize(n);
  wk.w.resize(n);
  wk.mult.resize(n);
  wk.swapped.assign(n, 0);
  double p = T.diag[0] - lambda;
  double qv = (n > 1) ? T.sub[0] : 0.0;
  double rv = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    double nb = T.sub[i];  // leading entry of the next row
    if (std::abs(nb) > std::abs(p)) {
      wk.swapped[i] = 1;
      wk.u[i] = nb;
      wk.v[i] = T.diag[i + 1] - lambda;
      wk.w[i] = (i + 2 < n) ? T.sub[i + 1] : 0.0;
      double m = p / nb;
      wk.mult[i] = m;
      p = qv - m * wk.v[i];
      qv = rv - m * wk.w[i];
      rv = 0.0;
    } else {
      if (p == 0.0) p = 1e-300;
      wk.u[i] = p;
      wk.v[i] = qv;
      wk.w[i] = rv;
      double m = nb / p;
      wk.mult[i] = m;
      p = T.diag[i + 1] - lambda - m * qv;
      qv = ((i + 2 < n) ? T.sub[i + 1] : 0.0) - m * rv;
      rv = 0.0;
    }
  }
  wk.u[n - 1] = (p == 0.0) ? 1e-300 : p;
  wk.v[n - 1] = 0.0;
  wk.w[n - 1] = 0.0;
}

void solve_shifted(const TinvitWork& wk, Vec& x) {
  const int n = static_cast<int>(wk.u.size());
  for (int i = 0; i + 1 < n; ++i) {
    if (wk.swapped[i]) std::swap(x[i], x[i + 1]);
    x[i + 1] -= wk.mult[i] * x[i];
  }
  x[n - 1] /= wk.u[n - 1];
  if (n >= 2) x[n - 2] = (x[n - 2] - wk.v[n - 2] * x[n - 1]) / wk.u[n - 2];
  for (int i = n - 3; i >= 0; --i)
    x[i] = (x[i] - wk.v[i] * x[i + 1] - wk.w[i] * x[i + 2]) / wk.u[i];
}

Mat eigenvectors_inverse_iteration(const Tridiag& T, const Vec& ev) {
  const int n = static_cast<int>(T.diag.size());
  Mat Z(n, n);
  TinvitWork wk;
  double norm_T = 0.0;
  for (int i = 0; i < n; ++i) {
    norm_T = std::max(norm_T, std::abs(T.diag[i]) +
                                  (i > 0 ? std::abs(T.sub[i - 1]) : 0.0) +
                                  (i + 1 < n ? std::abs(T.sub[i]) : 0.0));
  }
  Vec x(n);
  const double growth_ok = 0.01 / (norm_T * std::numeric_limits<double>::epsilon());
  auto seed_vector = [&](uint64_t key) {
    uint64_t s = key * 6364136223846793005ULL + 1442695040888963407ULL;
    for (int i = 0; i < n; ++i) {
      s ^= s << 13;
      s ^= s >> 7;
      s ^= s << 17;
      x[i] = static_cast<double>(static_cast<int64_t>(s >> 11)) * 0x1p-52;
    }
    x /= x.norm();
  };
  const double eps = std::numeric_limits<double>::epsilon();
  for (int k = 0; k < n; ++k) {
    factor_shifted(T, ev[k], wk);
    seed_vector(static_cast<uint64_t>(k) + 1);
    for (int it = 0; it < 6; ++it) {
      solve_shifted(wk, x);
      double nx = x.norm();
      if (nx == 0.0) {
        seed_vector(static_cast<uint64_t>(k) + 101 * (it + 1));
        continue;
      }
      x /= nx;
      if (nx >= growth_ok) break;
    }
    // genuinely clustered eigenvalues: force distinctness against the neighbor
    if (k > 0 && ev[k] - ev[k - 1] < 1e3 * eps * norm_T) {
      x -= Z.col(k - 1).dot(x) * Z.col(k - 1);
      double nx = x.norm();
      if (nx < 0.1) {
        seed_vector(static_cast<uint64_t>(k) + 7777);
        for (int it = 0; it < 3; ++it) {
          solve_shifted(wk, x);
          x /= x.norm();
        }
        x -= Z.col(k - 1).dot(x) * Z.col(k - 1);
        nx = x.norm();
      }
      x /= nx;
    }
    Z.col(k) = x;
  }

  // Cross-contamination between inverse-iteration vectors scales like
  // eps|T| / |E_i - E_j|, so a Gram-Schmidt sweep restricted to
  // eigenvalue-close pairs restores orthonormality at working precision.
  const double dist_tol = eps * norm_T / 1e-13;
  for (int k = 1; k < n; ++k) {
    int j0 = k;
    while (j0 > 0 && ev[k] - ev[j0 - 1] < dist_tol) --j0;
    if (j0 < k) {
      for (int j = j0; j < k; ++j) Z.col(k) -= Z.col(j).dot(Z.col(k)) * Z.col(j);
      Z.col(k) /= Z.col(k).norm();
    }
  }
  for (int k = 0; k < n; ++k) {
    int imax = 0;
    Z.col(k).cwiseAbs().maxCoeff(&imax);
    if (Z(imax, k) < 0.0) Z.col(k) = -Z.col(k);
  }
  return Z;
}

}  // namespace

Vec SpectralData::coeffs(const Vec& x) const {
  return (vectors.transpose() * x) * grid.dr;
}
CVec SpectralData::coeffs(const CVec& x) const {
  return (vectors.transpose() * x) * grid.dr;
}
Vec SpectralData::from_coeffs(const Vec& c) const { return vectors * c; }
CVec SpectralData::from_coeffs(const CVec& c) const { return vectors * c; }

bool SpectralData::is_discrete(int k) const {
  return std::binary_search(discrete.begin(), discrete.end(), k);
}

SpectralData eigendecompose(const Tridiag& T, const RadialGrid& grid,
                            const PotentialSpec& pot) {
  SpectralData sd;
  sd.grid = grid;
  sd.potential = pot;
  sd.m = pot.mass;
  sd.eigenvalues = eigenvalues_bisection(T);
  Mat Z = eigenvectors_inverse_iteration(T, sd.eigenvalues);
  // dr-orthonormal columns
  sd.vectors = Z / std::sqrt(grid.dr);

  const double thresh = pot.mass * pot.mass;
  for (int k = 0; k < grid.n; ++k)
    if (sd.eigenvalues[k] < thresh) sd.discrete.push_back(k);

  if (sd.discrete.size() != 1 || sd.eigenvalues[0] <= 0.0) {
    std::ostringstream msg;
    msg << "spectral assumption (V4) violated: |D| = " << sd.discrete.size()
        << " (need exactly one strictly positive eigenvalue below m^2 = " << thresh
        << ")";
    if (!sd.discrete.empty()) {
      msg << "; offending eigenvalues:";
      for (int k : sd.discrete) msg << ' ' << sd.eigenvalues[k];
    }
    throw DomainError("spectral-assumption-violated", msg.str());
  }

  sd.sqrt_e = sd.eigenvalues.cwiseSqrt();
  sd.omega = sd.sqrt_e[sd.discrete[0]];
  sd.phi = sd.vectors.col(sd.discrete[0]);
  if (sd.phi[0] < 0.0) {
    sd.phi = -sd.phi;
    sd.vectors.col(sd.discrete[0]) = sd.phi;
  }

  // residual check: ||H v_k - E_k v_k|| <= 1e-8 |E_k|
  for (int k = 0; k < grid.n; ++k) {
    Vec hv = T.apply(Vec(sd.vectors.col(k)));
    double res = (hv - sd.eigenvalues[k] * sd.vectors.col(k)).norm() * std::sqrt(grid.dr);
    if (res > 1e-8 * std::abs(sd.eigenvalues[k]))
      throw DomainError("eigensolver-failed",
                        "eigenvector residual out of tolerance at k=" + std::to_string(k));
  }
  return sd;
}

namespace {

template <typename VecT>
VecT apply_B_power_impl(const SpectralData& sd, double s, const VecT& v, SpectralPart part) {
  require(v.allFinite(), "invalid-argument", "apply_B_power: non-finite input");
  VecT c = sd.coeffs(v);
  for (int k = 0; k < c.size(); ++k) {
    bool disc = sd.is_discrete(k);
    bool keep = (part == SpectralPart::All) || (part == SpectralPart::Discrete && disc) ||
                (part == SpectralPart::Continuous && !disc);
    if (!keep) {
      c[k] = 0.0;
    } else if (s != 0.0) {
      c[k] *= std::pow(sd.eigenvalues[k], 0.5 * s);
    }
  }
  return sd.from_coeffs(c);
}

}  // namespace

Vec apply_B_power(const SpectralData& sd, double s, const Vec& v, SpectralPart part) {
  return apply_B_power_impl(sd, s, v, part);
}
CVec apply_B_power(const SpectralData& sd, double s, const CVec& v, SpectralPart part) {
  return apply_B_power_impl(sd, s, v, part);
}

Vec project(const SpectralData& sd, const Vec& v, SpectralPart part) {
  Vec pd = (sd.phi.dot(v) * sd.grid.dr) * sd.phi;
  return (part == SpectralPart::Discrete) ? pd : Vec(v - pd);
}
CVec project(const SpectralData& sd, const CVec& v, SpectralPart part) {
  Complex a = (sd.phi.cast<Complex>().dot(v)) * sd.grid.dr;  // conjugate-linear, phi real
  CVec pd = a * sd.phi.cast<Complex>();
  return (part == SpectralPart::Discrete) ? pd : CVec(v - pd);
}

namespace {

template <typename VecT>
double lp_norm_impl(const VecT& w, double p, const RadialGrid& grid) {
  require(w.size() == grid.n, "invalid-argument", "lp_norm: size mismatch");
  if (p <= 0.0 || std::isinf(p)) {
    double mx = 0.0;
    for (int i = 0; i < grid.n; ++i) mx = std::max(mx, std::abs(w[i]) / grid.r[i]);
    return mx;
  }
  require(p == 1.0 || p == 2.0 || p == 4.0 || p == 8.0, "invalid-argument",
          "lp_norm: supported p are 1, 2, 4, 8, inf");
  double acc = 0.0;
  for (int i = 0; i < grid.n; ++i) {
    double u = std::abs(w[i]) / grid.r[i];
    acc += std::pow(u, p) * grid.r[i] * grid.r[i];
  }
  acc *= 4.0 * M_PI * grid.dr;
  return std::pow(acc, 1.0 / p);
}

}  // namespace

double lp_norm(const Vec& w, double p, const RadialGrid& grid) {
  return lp_norm_impl(w, p, grid);
}
double lp_norm(const CVec& w, double p, const RadialGrid& grid) {
  return lp_norm_impl(w, p, grid);
}

Vec profile_product(const RadialGrid& grid, const Vec& a, const Vec& b) {
  return a.cwiseProduct(b).cwiseQuotient(grid.r);
}

Vec profile_power(const RadialGrid& grid, const Vec& w, int p) {
  Vec out = w;
  for (int j = 1; j < p; ++j) out = profile_product(grid, out, w);
  return out;
}

double integral_r3(const RadialGrid& grid, const std::vector<const Vec*>& factors) {
  require(!factors.empty(), "invalid-argument", "integral_r3: no factors");
  const int P = static_cast<int>(factors.size());
  double acc = 0.0;
  for (int i = 0; i < grid.n; ++i) {
    double prod = 1.0;
    for (const Vec* f : factors) prod *= (*f)[i];
    acc += prod * std::pow(grid.r[i], 2 - P);
  }
  return acc * grid.dr;
}

std::optional<double> square_well_binding_energy(double V0, double a, int j) {
  if (V0 <= 0.0 || a <= 0.0) return std::nullopt;
  const double k_min = (2 * j + 1) * M_PI / (2.0 * a);
  if (std::sqrt(V0) <= k_min) return std::nullopt;  // j-th state does not bind
  const double k_max = std::min((j + 1) * M_PI / a, std::sqrt(V0));
  auto h = [&](double k) {
    double b = V0 - k * k;
    return k * std::cos(k * a) / std::sin(k * a) + std::sqrt(std::max(b, 0.0));
  };
  double lo = k_min * (1.0 + 1e-13), hi = k_max * (1.0 - 1e-13);
  if (h(lo) < 0.0 || h(hi) > 0.0) return std::nullopt;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (h(mid) > 0.0 ? lo : hi) = mid;
  }
  double k = 0.5 * (lo + hi);
  return V0 - k * k;
}

}  // namespace nlkg
