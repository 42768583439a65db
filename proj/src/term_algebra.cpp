#include "nlkg/term_algebra.hpp"

#include <algorithm>
#include <cmath>

namespace nlkg {

namespace {

constexpr uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(uint64_t& h, uint64_t x) {
  h ^= x;
  h *= kFnvPrime;
}

uint64_t hash_quantized(const CVec& v, double scale) {
  uint64_t h = kFnvOffset;
  int expo = 0;
  std::frexp(scale, &expo);
  fnv_mix(h, static_cast<uint64_t>(static_cast<int64_t>(expo)));
  const double q = scale * 1e-13;
  for (int i = 0; i < v.size(); ++i) {
    fnv_mix(h, static_cast<uint64_t>(static_cast<int64_t>(std::nearbyint(v[i].real() / q))));
    fnv_mix(h, static_cast<uint64_t>(static_cast<int64_t>(std::nearbyint(v[i].imag() / q))));
  }
  return h;
}

uint64_t term_key(const AlgebraTerm& t) {
  uint64_t h = kFnvOffset;
  fnv_mix(h, static_cast<uint64_t>(t.mu));
  fnv_mix(h, static_cast<uint64_t>(t.nu) << 20);
  for (const auto& lf : t.linear) {
    fnv_mix(h, lf.conjugated ? 0x9e3779b97f4a7c15ULL : 0x2545f4914f6cdd1dULL);
    fnv_mix(h, lf.kernel.hash);
  }
  if (t.field) {
    fnv_mix(h, 0xabcdef1234567890ULL + static_cast<uint64_t>(t.field->u_power));
    fnv_mix(h, t.field->kernel.hash);
  }
  return h;
}

double kernel_norm(const Kernel& k, double dr) { return k.vec->norm() * std::sqrt(dr); }

double term_magnitude(const AlgebraTerm& t, double dr) {
  double m = std::abs(t.coeff);
  for (const auto& lf : t.linear) m *= kernel_norm(lf.kernel, dr);
  if (t.field) m *= kernel_norm(t.field->kernel, dr);
  return m;
}

void sort_factors(AlgebraTerm& t) {
  std::sort(t.linear.begin(), t.linear.end(), [](const LinearFactor& a, const LinearFactor& b) {
    if (a.conjugated != b.conjugated) return !a.conjugated;
    return a.kernel.hash < b.kernel.hash;
  });
}

// real bilinear pairing sum a_i b_i dr (no conjugation)
Complex bilinear(const CVec& a, const CVec& b, double dr) {
  return a.cwiseProduct(b).sum() * dr;
}

}  // namespace

Kernel make_kernel(CVec v, Complex& coeff) {
  Kernel k;
  int imax = 0;
  double scale = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    double a = std::abs(v[i]);
    if (a > scale) {
      scale = a;
      imax = i;
    }
  }
  k.scale = scale;
  if (scale == 0.0) {
    k.vec = std::make_shared<const CVec>(std::move(v));
    k.hash = 0;
    return k;
  }
  Complex ph = v[imax] / std::abs(v[imax]);
  if (ph != Complex(1.0, 0.0)) {
    v *= std::conj(ph);
    coeff *= ph;
  }
  k.hash = hash_quantized(v, scale);
  k.vec = std::make_shared<const CVec>(std::move(v));
  return k;
}

HamiltonianPoly make_hl(int d_max) {
  HamiltonianPoly p;
  p.d_max = d_max;
  p.is_hl = true;
  return p;
}

void canonicalize(HamiltonianPoly& p) {
  std::unordered_map<uint64_t, size_t> seen;
  std::vector<AlgebraTerm> out;
  out.reserve(p.terms.size());
  for (auto& t : p.terms) {
    if (t.coeff == Complex(0.0, 0.0)) continue;
    bool zero_factor = false;
    for (const auto& lf : t.linear) zero_factor |= (lf.kernel.scale == 0.0);
    if (t.field && t.field->kernel.scale == 0.0) zero_factor = true;
    if (zero_factor) continue;
    sort_factors(t);
    uint64_t key = term_key(t);
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, out.size());
      out.push_back(std::move(t));
    } else {
      out[it->second].coeff += t.coeff;
    }
  }
  std::erase_if(out, [](const AlgebraTerm& t) { return t.coeff == Complex(0.0, 0.0); });
  std::sort(out.begin(), out.end(), [](const AlgebraTerm& a, const AlgebraTerm& b) {
    if (a.degree() != b.degree()) return a.degree() < b.degree();
    if (a.mu != b.mu) return a.mu < b.mu;
    if (a.nu != b.nu) return a.nu < b.nu;
    return term_key(a) < term_key(b);
  });
  p.terms = std::move(out);
}

double max_coeff(const HamiltonianPoly& p) {
  double m = 0.0;
  for (const auto& t : p.terms) m = std::max(m, std::abs(t.coeff));
  return m;
}

HamiltonianPoly add(const HamiltonianPoly& a, const HamiltonianPoly& b) {
  require(!a.is_hl && !b.is_hl, "invalid-argument", "cannot add the H_L marker");
  HamiltonianPoly out = a;
  out.d_max = std::min(a.d_max, b.d_max);
  out.remainder_norm = a.remainder_norm + b.remainder_norm;
  out.terms.insert(out.terms.end(), b.terms.begin(), b.terms.end());
  canonicalize(out);
  return out;
}

HamiltonianPoly scale(const HamiltonianPoly& a, Complex c) {
  HamiltonianPoly out = a;
  for (auto& t : out.terms) t.coeff *= c;
  out.remainder_norm *= std::abs(c);
  return out;
}

HamiltonianPoly formal_conjugate(const HamiltonianPoly& p) {
  HamiltonianPoly out;
  out.d_max = p.d_max;
  out.remainder_norm = p.remainder_norm;
  for (const auto& t : p.terms) {
    AlgebraTerm c;
    c.coeff = std::conj(t.coeff);
    c.mu = t.nu;
    c.nu = t.mu;
    for (const auto& lf : t.linear) {
      LinearFactor nf;
      nf.conjugated = !lf.conjugated;
      nf.kernel = make_kernel(lf.kernel.vec->conjugate(), c.coeff);
      c.linear.push_back(std::move(nf));
    }
    if (t.field) {
      FieldFactor ff;
      ff.u_power = t.field->u_power;
      ff.kernel = make_kernel(t.field->kernel.vec->conjugate(), c.coeff);
      c.field = std::move(ff);
    }
    out.terms.push_back(std::move(c));
  }
  canonicalize(out);
  return out;
}

bool is_real_poly(const HamiltonianPoly& p, double tol) {
  HamiltonianPoly a = p;
  canonicalize(a);
  HamiltonianPoly c = formal_conjugate(p);
  double scale_c = std::max(max_coeff(a), 1e-300);
  std::unordered_map<uint64_t, Complex> map;
  for (const auto& t : c.terms) map[term_key(t)] += t.coeff;
  for (const auto& t : a.terms) {
    auto it = map.find(term_key(t));
    Complex other = (it == map.end()) ? Complex(0, 0) : it->second;
    if (std::abs(t.coeff - other) > tol * scale_c) return false;
    if (it != map.end()) map.erase(it);
  }
  for (const auto& [k, v] : map)
    if (std::abs(v) > tol * scale_c) return false;
  return true;
}

namespace {

Vec u_field(const PhasePoint& z, const SpectralData& sd) {
  CVec re = z.f.real().cast<Complex>();
  CVec u = apply_B_power(sd, -0.5, re, SpectralPart::Continuous);
  return std::sqrt(2.0) * u.real();
}

Complex factor_value(const LinearFactor& lf, const PhasePoint& z, double dr) {
  if (lf.conjugated) return bilinear(*lf.kernel.vec, z.f.conjugate(), dr);
  return bilinear(*lf.kernel.vec, z.f, dr);
}

Complex field_value(const FieldFactor& ff, const Vec& u, const RadialGrid& grid) {
  Complex acc(0.0, 0.0);
  const int d = ff.u_power;
  for (int i = 0; i < grid.n; ++i) {
    acc += (*ff.kernel.vec)[i] * std::pow(u[i], d) / std::pow(grid.r[i], d - 1);
  }
  return acc * grid.dr;
}

}  // namespace

Complex evaluate_hamiltonian(const HamiltonianPoly& p, const PhasePoint& z,
                             const SpectralData& sd) {
  require(std::isfinite(z.xi.real()) && std::isfinite(z.xi.imag()) && z.f.allFinite(),
          "invalid-argument", "evaluate: non-finite phase point");
  if (p.is_hl) {
    CVec bf = apply_B_power(sd, 1.0, z.f, SpectralPart::Continuous);
    return sd.omega * std::norm(z.xi) + bilinear(z.f.conjugate(), bf, sd.grid.dr);
  }
  const double dr = sd.grid.dr;
  Vec u;
  bool have_u = false;
  Complex total(0.0, 0.0);
  for (const auto& t : p.terms) {
    Complex v = t.coeff;
    for (int j = 0; j < t.mu; ++j) v *= z.xi;
    for (int j = 0; j < t.nu; ++j) v *= std::conj(z.xi);
    for (const auto& lf : t.linear) v *= factor_value(lf, z, dr);
    if (t.field) {
      if (!have_u) {
        u = u_field(z, sd);
        have_u = true;
      }
      v *= field_value(*t.field, u, sd.grid);
    }
    total += v;
  }
  return total;
}

Complex eval_partial_xibar(const HamiltonianPoly& p, const PhasePoint& z,
                           const SpectralData& sd) {
  if (p.is_hl) return sd.omega * z.xi;
  const double dr = sd.grid.dr;
  Vec u;
  bool have_u = false;
  Complex total(0.0, 0.0);
  for (const auto& t : p.terms) {
    if (t.nu == 0) continue;
    Complex v = t.coeff * static_cast<double>(t.nu);
    for (int j = 0; j < t.mu; ++j) v *= z.xi;
    for (int j = 0; j < t.nu - 1; ++j) v *= std::conj(z.xi);
    for (const auto& lf : t.linear) v *= factor_value(lf, z, dr);
    if (t.field) {
      if (!have_u) {
        u = u_field(z, sd);
        have_u = true;
      }
      v *= field_value(*t.field, u, sd.grid);
    }
    total += v;
  }
  return total;
}

CVec eval_grad_fbar(const HamiltonianPoly& p, const PhasePoint& z, const SpectralData& sd) {
  if (p.is_hl) return apply_B_power(sd, 1.0, z.f, SpectralPart::Continuous);
  const double dr = sd.grid.dr;
  const RadialGrid& grid = sd.grid;
  Vec u;
  bool have_u = false;
  CVec grad = CVec::Zero(grid.n);
  for (const auto& t : p.terms) {
    Complex base = t.coeff;
    for (int j = 0; j < t.mu; ++j) base *= z.xi;
    for (int j = 0; j < t.nu; ++j) base *= std::conj(z.xi);
    std::vector<Complex> fvals(t.linear.size());
    for (size_t j = 0; j < t.linear.size(); ++j) fvals[j] = factor_value(t.linear[j], z, dr);
    Complex fieldval(1.0, 0.0);
    if (t.field) {
      if (!have_u) {
        u = u_field(z, sd);
        have_u = true;
      }
      fieldval = field_value(*t.field, u, grid);
    }
    // conjugated linear factors contribute their kernel
    for (size_t j = 0; j < t.linear.size(); ++j) {
      if (!t.linear[j].conjugated) continue;
      Complex v = base * fieldval;
      for (size_t l = 0; l < t.linear.size(); ++l)
        if (l != j) v *= fvals[l];
      grad += v * (*t.linear[j].kernel.vec);
    }
    // field factor: grad_fbar int Psi U^d dx = (d/sqrt(2)) B^{-1/2} P_c (Psi U^{d-1})
    if (t.field) {
      Complex v = base;
      for (size_t l = 0; l < t.linear.size(); ++l) v *= fvals[l];
      const int d = t.field->u_power;
      CVec integrand(grid.n);
      for (int i = 0; i < grid.n; ++i)
        integrand[i] =
            (*t.field->kernel.vec)[i] * std::pow(u[i], d - 1) / std::pow(grid.r[i], d - 1);
      CVec applied = apply_B_power(sd, -0.5, integrand, SpectralPart::Continuous);
      grad += v * (static_cast<double>(d) / std::sqrt(2.0)) * applied;
    }
  }
  return grad;
}

Kernel KernelOps::half_inverse(const Kernel& k, Complex& coeff) {
  auto it = half_inv_cache_.find(k.hash);
  if (it != half_inv_cache_.end()) {
    coeff *= it->second.phase;
    return it->second.kernel;
  }
  Complex phase(1.0, 0.0);
  CVec applied = apply_B_power(sd_, -0.5, *k.vec, SpectralPart::Continuous);
  Kernel out = make_kernel(std::move(applied), phase);
  coeff *= phase;
  half_inv_cache_.emplace(k.hash, Cached{out, phase});
  return out;
}

Kernel KernelOps::b_apply(const Kernel& k, Complex& coeff) {
  auto it = b_cache_.find(k.hash);
  if (it != b_cache_.end()) {
    coeff *= it->second.phase;
    return it->second.kernel;
  }
  Complex phase(1.0, 0.0);
  CVec applied = apply_B_power(sd_, 1.0, *k.vec, SpectralPart::Continuous);
  Kernel out = make_kernel(std::move(applied), phase);
  coeff *= phase;
  b_cache_.emplace(k.hash, Cached{out, phase});
  return out;
}

Kernel KernelOps::resolvent(const Kernel& k, double c, Complex& coeff) {
  CVec cc = sd_.coeffs(project(sd_, *k.vec, SpectralPart::Continuous));
  for (int j = 0; j < cc.size(); ++j) {
    if (sd_.is_discrete(j)) {
      cc[j] = 0.0;
      continue;
    }
    cc[j] /= (sd_.sqrt_e[j] - c);
  }
  CVec applied = sd_.from_coeffs(cc);
  Kernel out = make_kernel(std::move(applied), coeff);
  return out;
}

namespace {

// gradient slot of a term: a constant kernel (from a linear factor) or the
// U-dependent field derivative
struct Slot {
  bool is_field = false;
  size_t linear_index = 0;
};

std::vector<Slot> slots_for(const AlgebraTerm& t, bool conjugated) {
  std::vector<Slot> out;
  for (size_t j = 0; j < t.linear.size(); ++j)
    if (t.linear[j].conjugated == conjugated) out.push_back({false, j});
  if (t.field) out.push_back({true, 0});
  return out;
}

AlgebraTerm strip_slot(const AlgebraTerm& t, const Slot& s) {
  AlgebraTerm rest = t;
  if (s.is_field) {
    rest.field.reset();
  } else {
    rest.linear.erase(rest.linear.begin() + static_cast<long>(s.linear_index));
  }
  return rest;
}

// merged product of two stripped terms
bool merge_rests(const AlgebraTerm& a, const AlgebraTerm& b, AlgebraTerm& out) {
  if (a.field && b.field) return false;
  out.mu = a.mu + b.mu;
  out.nu = a.nu + b.nu;
  out.linear = a.linear;
  out.linear.insert(out.linear.end(), b.linear.begin(), b.linear.end());
  out.field = a.field ? a.field : b.field;
  out.coeff = a.coeff * b.coeff;
  return true;
}

void emit(HamiltonianPoly& poly, AlgebraTerm t, double dr) {
  if (t.coeff == Complex(0.0, 0.0)) return;
  if (t.degree() > poly.d_max) {
    poly.remainder_norm += term_magnitude(t, dr);
    return;
  }
  poly.terms.push_back(std::move(t));
}

// {H_L, T}: i omega (nu - mu) T, plus +i T[A -> B A] per conjugated factor and
// -i T[A -> B A] per plain factor.
void hl_bracket_into(HamiltonianPoly& out, const HamiltonianPoly& p, KernelOps& ops) {
  const double dr = ops.spectral().grid.dr;
  const double omega = ops.spectral().omega;
  for (const auto& t : p.terms) {
    require(!t.field, "unsupported-bracket",
            "{H_L, .} of a field-carrying term leaves the closed term class");
    if (t.nu != t.mu) {
      AlgebraTerm s = t;
      s.coeff *= Complex(0.0, omega * (t.nu - t.mu));
      emit(out, std::move(s), dr);
    }
    for (size_t j = 0; j < t.linear.size(); ++j) {
      AlgebraTerm s = t;
      Complex sign = t.linear[j].conjugated ? Complex(0.0, 1.0) : Complex(0.0, -1.0);
      s.coeff *= sign;
      s.linear[j].kernel = ops.b_apply(t.linear[j].kernel, s.coeff);
      emit(out, std::move(s), dr);
    }
  }
}

}  // namespace

HamiltonianPoly poisson_bracket(const HamiltonianPoly& a, const HamiltonianPoly& b,
                                KernelOps& ops) {
  const SpectralData& sd = ops.spectral();
  const double dr = sd.grid.dr;
  HamiltonianPoly out;
  out.d_max = std::min(a.d_max, b.d_max);
  if (a.is_hl && b.is_hl) return out;
  if (a.is_hl) {
    hl_bracket_into(out, b, ops);
    canonicalize(out);
    return out;
  }
  if (b.is_hl) {
    HamiltonianPoly tmp;
    tmp.d_max = out.d_max;
    hl_bracket_into(tmp, a, ops);
    out = scale(tmp, Complex(-1.0, 0.0));
    out.d_max = std::min(a.d_max, b.d_max);
    canonicalize(out);
    return out;
  }

  for (const auto& ta : a.terms) {
    for (const auto& tb : b.terms) {
      // xi part: i (dxi a)(dxibar b) - i (dxibar a)(dxi b)
      if (ta.mu > 0 && tb.nu > 0) {
        AlgebraTerm pa = ta, pb = tb;
        pa.mu -= 1;
        pb.nu -= 1;
        AlgebraTerm prod;
        require(merge_rests(pa, pb, prod), "unsupported-bracket",
                "bracket of two field-carrying terms leaves the closed term class");
        prod.coeff *=
            Complex(0.0, 1.0) * static_cast<double>(ta.mu) * static_cast<double>(tb.nu);
        emit(out, std::move(prod), dr);
      }
      if (ta.nu > 0 && tb.mu > 0) {
        AlgebraTerm pa = ta, pb = tb;
        pa.nu -= 1;
        pb.mu -= 1;
        AlgebraTerm prod;
        require(merge_rests(pa, pb, prod), "unsupported-bracket",
                "bracket of two field-carrying terms leaves the closed term class");
        prod.coeff *=
            Complex(0.0, -1.0) * static_cast<double>(ta.nu) * static_cast<double>(tb.mu);
        emit(out, std::move(prod), dr);
      }

      // f parts: +i <grad_f a, grad_fbar b> - i <grad_fbar a, grad_f b>
      for (int pass = 0; pass < 2; ++pass) {
        const bool a_conj = (pass == 1);
        Complex isign = a_conj ? Complex(0.0, -1.0) : Complex(0.0, 1.0);
        for (const Slot& sa : slots_for(ta, a_conj)) {
          for (const Slot& sb : slots_for(tb, !a_conj)) {
            require(!(sa.is_field && sb.is_field), "unsupported-bracket",
                    "bracket of two field-carrying terms leaves the closed term class");
            AlgebraTerm ra = strip_slot(ta, sa);
            AlgebraTerm rb = strip_slot(tb, sb);
            AlgebraTerm prod;
            require(merge_rests(ra, rb, prod), "unsupported-bracket",
                    "bracket of two field-carrying terms leaves the closed term class");
            prod.coeff *= isign;
            if (!sa.is_field && !sb.is_field) {
              prod.coeff *= bilinear(*ta.linear[sa.linear_index].kernel.vec,
                                     *tb.linear[sb.linear_index].kernel.vec, dr);
              emit(out, std::move(prod), dr);
            } else {
              const AlgebraTerm& ft = sa.is_field ? ta : tb;
              const Kernel& const_k = sa.is_field ? tb.linear[sb.linear_index].kernel
                                                  : ta.linear[sa.linear_index].kernel;
              const int d = ft.field->u_power;
              prod.coeff *= static_cast<double>(d) / std::sqrt(2.0);
              Kernel half = ops.half_inverse(const_k, prod.coeff);
              CVec psi_new = half.vec->cwiseProduct(*ft.field->kernel.vec)
                                 .cwiseQuotient(sd.grid.r.cast<Complex>());
              if (d - 1 >= 2) {
                FieldFactor ff;
                ff.u_power = d - 1;
                ff.kernel = make_kernel(std::move(psi_new), prod.coeff);
                prod.field = std::move(ff);
                emit(out, std::move(prod), dr);
              } else {
                // d - 1 == 1: int Psi' U dx splits into two linear factors
                Complex cf = prod.coeff / std::sqrt(2.0);
                Kernel lin = ops.half_inverse(make_kernel(std::move(psi_new), cf), cf);
                for (bool conj_side : {false, true}) {
                  AlgebraTerm split = prod;
                  split.coeff = cf;
                  LinearFactor nf;
                  nf.kernel = lin;
                  nf.conjugated = conj_side;
                  split.linear.push_back(std::move(nf));
                  emit(out, std::move(split), dr);
                }
              }
            }
          }
        }
      }
    }
  }
  out.remainder_norm += a.remainder_norm * max_coeff(b) + b.remainder_norm * max_coeff(a);
  canonicalize(out);
  return out;
}

HamiltonianPoly poisson_bracket(const HamiltonianPoly& a, const HamiltonianPoly& b,
                                const SpectralData& sd) {
  KernelOps ops(sd);
  return poisson_bracket(a, b, ops);
}

}  // namespace nlkg
