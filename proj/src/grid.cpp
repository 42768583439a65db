#include "nlkg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace nlkg {

RadialGrid build_grid(double r_max, int n) {
  require(r_max > 0.0, "invalid-argument", "build_grid: r_max must be positive");
  require(n >= 16, "invalid-argument", "build_grid: need at least 16 interior nodes");
  RadialGrid g;
  g.r_max = r_max;
  g.n = n;
  g.dr = r_max / (n + 1);
  g.r.resize(n);
  for (int i = 0; i < n; ++i) g.r[i] = (i + 1) * g.dr;
  return g;
}

double PotentialSpec::eval(double r) const {
  switch (kind) {
    case PotentialKind::SquareWell:
      return (r < radius) ? -depth : 0.0;
    case PotentialKind::Gaussian:
      return -amplitude * std::exp(-(r * r) / (width * width));
    case PotentialKind::Tabulated: {
      if (table_r.empty() || r <= table_r.front() || r >= table_r.back()) {
        if (!table_r.empty() && r <= table_r.front()) return table_v.front();
        return 0.0;
      }
      auto it = std::upper_bound(table_r.begin(), table_r.end(), r);
      size_t j = static_cast<size_t>(it - table_r.begin());
      double t = (r - table_r[j - 1]) / (table_r[j] - table_r[j - 1]);
      return (1.0 - t) * table_v[j - 1] + t * table_v[j];
    }
  }
  return 0.0;
}

PotentialSpec load_potential_table(const std::string& path, double mass) {
  std::ifstream in(path);
  require(in.good(), "io-error", "cannot open potential table: " + path);
  PotentialSpec p;
  p.kind = PotentialKind::Tabulated;
  p.mass = mass;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double r, v;
    if (ss >> r >> v) {
      p.table_r.push_back(r);
      p.table_v.push_back(v);
    }
  }
  require(p.table_r.size() >= 2, "io-error", "potential table needs at least two rows");
  require(std::is_sorted(p.table_r.begin(), p.table_r.end()), "io-error",
          "potential table radii must be increasing");
  return p;
}

Vec potential_on_grid(const RadialGrid& grid, const PotentialSpec& pot) {
  require(pot.mass > 0.0, "invalid-argument", "potential mass must be positive");
  Vec v(grid.n);
  if (pot.kind == PotentialKind::SquareWell) {
    // cell-average the jump: midpoint sampling of a discontinuous V is only
    // first-order accurate in dr, cell averaging restores second order
    for (int i = 0; i < grid.n; ++i) {
      double lo = grid.r[i] - 0.5 * grid.dr, hi = grid.r[i] + 0.5 * grid.dr;
      double inside = std::clamp(pot.radius - lo, 0.0, hi - lo);
      v[i] = -pot.depth * inside / (hi - lo);
    }
  } else {
    for (int i = 0; i < grid.n; ++i) v[i] = pot.eval(grid.r[i]);
  }
  require(v.allFinite(), "invalid-argument", "potential has non-finite samples");
  return v;
}

bool potential_tail_decay_ok(const RadialGrid& grid, const Vec& v, double delta_min) {
  // Fit log|V| against log<r> on the last quarter of the grid; an all-zero
  // tail (compact support) passes.  Near-roundoff samples are skipped.
  int start = (3 * grid.n) / 4;
  double vmax = v.cwiseAbs().maxCoeff();
  if (vmax == 0.0) return true;
  double floor_v = std::max(vmax * 1e-14, 1e-300);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int i = start; i < grid.n; ++i) {
    double av = std::abs(v[i]);
    if (av <= floor_v) continue;
    double x = std::log(std::hypot(1.0, grid.r[i]));
    double y = std::log(av);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++cnt;
  }
  if (cnt < 4) return true;  // tail numerically zero
  double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  return -slope > delta_min;
}

}  // namespace nlkg
