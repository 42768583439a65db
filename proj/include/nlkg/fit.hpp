#pragma once

#include <cmath>
#include <vector>

#include "nlkg/types.hpp"

namespace nlkg {

struct FitResult {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int samples = 0;
};

// Ordinary least squares y = a + b x.
inline FitResult fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  FitResult out;
  const int n = static_cast<int>(x.size());
  require(n >= 2, "empty-window", "fit needs at least two samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  require(denom > 0, "empty-window", "degenerate abscissae");
  out.slope = (n * sxy - sx * sy) / denom;
  out.intercept = (sy - out.slope * sx) / n;
  double ss_res = 0, ss_tot = 0, ybar = sy / n;
  for (int i = 0; i < n; ++i) {
    double f = out.intercept + out.slope * x[i];
    ss_res += (y[i] - f) * (y[i] - f);
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  out.r2 = (ss_tot > 0) ? 1.0 - ss_res / ss_tot : 1.0;
  out.samples = n;
  if (n > 2) out.stderr_slope = std::sqrt(ss_res / (n - 2) / (denom / n));
  return out;
}

// log-log power-law fit over the window [t0, t1]; skips non-positive values.
inline FitResult fit_loglog(const std::vector<double>& t, const std::vector<double>& v,
                            double t0, double t1) {
  std::vector<double> x, y;
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t0 || t[i] > t1 || v[i] <= 0.0 || t[i] <= 0.0) continue;
    x.push_back(std::log(t[i]));
    y.push_back(std::log(v[i]));
  }
  return fit_linear(x, y);
}

}  // namespace nlkg
