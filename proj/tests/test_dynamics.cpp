#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nlkg/dynamics.hpp"

using namespace nlkg;

namespace {

SpectralData medium_well(int n = 256, double r_max = 60.0) {
  PotentialSpec p;
  p.kind = PotentialKind::Gaussian;
  p.amplitude = 3.4;
  p.width = 1.7;
  p.mass = 1.0;
  RadialGrid g = build_grid(r_max, n);
  return eigendecompose(assemble_hamiltonian(g, p), g, p);
}

double state_diff(const SimState& a, const SimState& b, double dr) {
  return std::sqrt(((a.w - b.w).squaredNorm() + (a.w_t - b.w_t).squaredNorm()) * dr);
}

}  // namespace

TEST_CASE("linear propagation: identity, eigenmode, exact energy") {
  SpectralData sd = medium_well();
  SimState st;
  st.w = sd.phi;
  st.w_t = Vec::Zero(sd.grid.n);
  st.t = 0.0;

  SimState id = linear_propagate(sd, st, 0.0);
  CHECK(state_diff(id, st, sd.grid.dr) == 0.0);

  double tau = 7.3;
  SimState ev = linear_propagate(sd, st, tau);
  Vec expect = std::cos(sd.omega * tau) * sd.phi;
  CHECK((ev.w - expect).norm() * std::sqrt(sd.grid.dr) < 1e-12);

  double e0 = energy(st, sd, 0.0);
  CHECK(e0 == doctest::Approx(0.5 * sd.omega * sd.omega).epsilon(1e-12));
  for (double t : {1.0, 13.7, 40.0}) {
    SimState s2 = linear_propagate(sd, st, t);
    CHECK(std::abs(energy(s2, sd, 0.0) - e0) < 1e-13 * std::max(1.0, std::abs(e0)));
  }

  // zero state has zero energy; the quartic term lowers energy for lambda=+1
  SimState z;
  z.w = Vec::Zero(sd.grid.n);
  z.w_t = Vec::Zero(sd.grid.n);
  CHECK(energy(z, sd, 0.0) == 0.0);
  CHECK(energy(st, sd, 1.0) < energy(st, sd, 0.0));
  CHECK(energy(st, sd, -1.0) > energy(st, sd, 0.0));
}

TEST_CASE("lambda = 0 stepping reduces to the exact linear flow") {
  SpectralData sd = medium_well();
  SimState st;
  st.w = 0.3 * sd.phi;
  st.w_t = Vec::Zero(sd.grid.n);
  Vec bump(sd.grid.n);
  for (int i = 0; i < sd.grid.n; ++i)
    bump[i] = sd.grid.r[i] * std::exp(-sd.grid.r[i] * sd.grid.r[i] / 9.0);
  st.w += 0.05 * project(sd, bump, SpectralPart::Continuous);

  // one step agrees at working precision; a hundred steps accumulate only
  // the basis-roundtrip roundoff
  SimState a1 = step_nlkg(st, 0.01, 0.0, sd, Scheme::Strang);
  SimState b1 = linear_propagate(sd, st, 0.01);
  CHECK(state_diff(a1, b1, sd.grid.dr) < 1e-12);
  SimState a = st;
  for (int s = 0; s < 100; ++s) a = step_nlkg(a, 0.01, 0.0, sd, Scheme::Strang);
  SimState b = linear_propagate(sd, st, 1.0);
  CHECK(state_diff(a, b, sd.grid.dr) < 1e-9);
}

TEST_CASE("Strang stepping is time reversible") {
  SpectralData sd = medium_well();
  SimState st;
  st.w = 0.4 * sd.phi;
  st.w_t = Vec::Zero(sd.grid.n);
  SimState cur = st;
  const double dt = 1e-3;
  const int nsteps = 500;
  for (int s = 0; s < nsteps; ++s) cur = step_nlkg(cur, dt, -1.0, sd, Scheme::Strang);
  for (int s = 0; s < nsteps; ++s) cur = step_nlkg(cur, -dt, -1.0, sd, Scheme::Strang);
  CHECK(state_diff(cur, st, sd.grid.dr) < 1e-8);
}

TEST_CASE("second-order convergence of the splitting") {
  SpectralData sd = medium_well(200, 40.0);
  SimState st;
  st.w = 0.5 * sd.phi;
  st.w_t = Vec::Zero(sd.grid.n);
  auto terminal = [&](double dt, Scheme sc) {
    SimState cur = st;
    int ns = static_cast<int>(std::llround(4.0 / dt));
    for (int s = 0; s < ns; ++s) cur = step_nlkg(cur, dt, -1.0, sd, sc);
    return cur;
  };
  for (Scheme sc : {Scheme::Strang, Scheme::Leapfrog}) {
    SimState ref = terminal(1.0 / 1024, sc);
    double e1 = state_diff(terminal(1.0 / 64, sc), ref, sd.grid.dr);
    double e2 = state_diff(terminal(1.0 / 128, sc), ref, sd.grid.dr);
    CHECK(e1 / e2 >= 3.6);
  }
}

TEST_CASE("energy conservation over a long small-data run") {
  SpectralData sd = medium_well(200, 50.0);
  SimConfig cfg;
  cfg.lambda = -1.0;
  cfg.a0 = 0.05;
  cfg.dt = 1e-3;
  cfg.horizon = 100.0;
  cfg.stride = 2000;
  cfg.allow_boundary = true;  // linear-scale horizon; small data radiates little
  SimRun run = simulate(sd, cfg);
  double e0 = run.energies.front();
  for (double e : run.energies) CHECK(std::abs(e - e0) < 1e-6 * std::abs(e0));

  // H1 x L2 control: the quadratic norm stays bounded by its initial size
  double q0 = 0.0;
  for (size_t i = 0; i < run.samples.size(); ++i) {
    double q = energy(run.samples[i], sd, 0.0);
    if (i == 0) q0 = q;
    CHECK(q <= 1.5 * q0);
  }
}

TEST_CASE("simulate: trivial data and validation") {
  SpectralData sd = medium_well(200, 50.0);
  SimConfig cfg;
  cfg.a0 = 0.0;
  cfg.c0 = 0.0;
  cfg.horizon = 5.0;
  cfg.dt = 0.01;
  cfg.stride = 100;
  SimRun run = simulate(sd, cfg);
  for (const auto& s : run.samples) CHECK(s.w.norm() == 0.0);

  cfg.c0 = 0.5;  // violates c0 <= C0 * a0
  cfg.C0 = 1.0;
  CHECK_THROWS_AS(static_cast<void>(simulate(sd, cfg)), DomainError);

  cfg.a0 = 0.5;
  cfg.c0 = 0.1;
  cfg.horizon = 200.0;  // beyond the reflection time
  CHECK_THROWS_WITH_AS(static_cast<void>(simulate(sd, cfg)),
                       doctest::Contains("reflection"), DomainError);
}

TEST_CASE("dispersive decay exponents of the linear flow") {
  SpectralData sd = medium_well(1400, 220.0);
  CVec psi(sd.grid.n);
  for (int i = 0; i < sd.grid.n; ++i) {
    double r = sd.grid.r[i];
    psi[i] = r * std::exp(-r * r / 4.0);
  }
  double horizon = 180.0;

  ProbeResult p8 = dispersive_decay_probe(sd, psi, 8.0, std::nullopt, horizon);
  CHECK_FALSE(p8.boundary_contaminated);
  CHECK(p8.fit.slope == doctest::Approx(-9.0 / 8.0).epsilon(0.15));

  ProbeResult p4 = dispersive_decay_probe(sd, psi, 4.0, std::nullopt, horizon);
  CHECK(p4.fit.slope < -0.4);  // between the wave floor -1/2 and the KG rate

  ProbeResult w2 = dispersive_decay_probe(sd, psi, 2.0, 3.0, horizon);
  CHECK(w2.fit.slope == doctest::Approx(-1.5).epsilon(0.20));
}

TEST_CASE("singular resolvent probe decays at the expected rate") {
  SpectralData sd = medium_well(1400, 220.0);
  CVec psi(sd.grid.n);
  for (int i = 0; i < sd.grid.n; ++i) {
    double r = sd.grid.r[i];
    psi[i] = r * std::exp(-r * r / 4.0);
  }
  double horizon = 180.0;
  ProbeResult l1 = singular_resolvent_probe(sd, 1.3 * sd.m, psi, 1, 3.3, horizon);
  CHECK(l1.fit.slope <= -1.0);
  ProbeResult l0 = singular_resolvent_probe(sd, 1.3 * sd.m, psi, 0, 3.3, horizon);
  CHECK(l0.fit.slope == doctest::Approx(-1.5).epsilon(0.20));
  CHECK_THROWS_AS(
      static_cast<void>(singular_resolvent_probe(sd, 0.5 * sd.m, psi, 1, 3.3, horizon)),
      DomainError);
}
