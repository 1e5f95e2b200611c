#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "siegel/error.hpp"

namespace siegel {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points_used = 0;
};

namespace detail {

inline LineFit least_squares(std::span<const double> x, std::span<const double> y,
                             std::span<const std::size_t> idx) {
  // centered sums for conditioning when x is a large index range
  double mx = 0.0, my = 0.0;
  for (std::size_t i : idx) {
    mx += x[i];
    my += y[i];
  }
  const double m = static_cast<double>(idx.size());
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i : idx) {
    const double dx = x[i] - mx;
    sxx += dx * dx;
    sxy += dx * (y[i] - my);
  }
  if (sxx <= 0.0) throw InsufficientDataError("line fit: abscissae are degenerate");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx, idx.size()};
}

}  // namespace detail

/// Least-squares line, refit after dropping the `trim` fraction of points
/// with the largest absolute residuals.
inline LineFit robust_line_fit(std::span<const double> x, std::span<const double> y, double trim = 0.05) {
  if (x.size() != y.size()) throw PreconditionError("robust_line_fit: size mismatch");
  if (x.size() < 3) throw InsufficientDataError("robust_line_fit: need at least 3 points");
  std::vector<std::size_t> idx(x.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const LineFit first = detail::least_squares(x, y, idx);
  const std::size_t drop = static_cast<std::size_t>(std::floor(trim * static_cast<double>(x.size())));
  if (drop == 0 || x.size() - drop < 3) return first;
  std::vector<double> resid(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) resid[i] = std::abs(y[i] - (first.slope * x[i] + first.intercept));
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return resid[a] < resid[b]; });
  idx.resize(x.size() - drop);
  std::sort(idx.begin(), idx.end());
  return detail::least_squares(x, y, idx);
}

}  // namespace siegel
