#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nlkg/types.hpp"

namespace nlkg {

// Uniform radial grid on (0, r_max) with Dirichlet ends.  Profiles live on the
// interior nodes r_i = i*dr, i = 1..n; the substitution w = r*u is implied
// throughout, so a vector over the nodes is the w-profile of a radial function.
struct RadialGrid {
  double r_max = 0.0;
  int n = 0;
  double dr = 0.0;
  Vec r;  // nodes, strictly increasing

  double inner(const Vec& a, const Vec& b) const { return a.dot(b) * dr; }
};

RadialGrid build_grid(double r_max, int n);

enum class PotentialKind { SquareWell, Gaussian, Tabulated };

// Radial potential V(r).  Square well: V = -depth on r < radius.
// Gaussian: V = -amplitude * exp(-(r/width)^2).  Tabulated: linear
// interpolation of a two-column (r, V) table, zero outside its range.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::SquareWell;
  double depth = 4.0;    // square well depth (> 0 means attractive)
  double radius = 1.0;   // square well radius
  double amplitude = 3.4;
  double width = 1.7;
  std::vector<double> table_r, table_v;
  double mass = 1.0;  // m > 0

  double eval(double r) const;
};

PotentialSpec load_potential_table(const std::string& path, double mass);

// Samples V on the grid nodes.
Vec potential_on_grid(const RadialGrid& grid, const PotentialSpec& pot);

// Checks |V(r)| <= C <r>^-delta with delta > 5 on the tail of the grid.
// A tail that is exactly zero (compact support) passes trivially.
bool potential_tail_decay_ok(const RadialGrid& grid, const Vec& v, double delta_min = 5.0);

}  // namespace nlkg
