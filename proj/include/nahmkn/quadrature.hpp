#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace nahmkn {

/// Composite Simpson rule on a uniform grid with spacing h. An odd number of
/// intervals is handled with a 3/8 rule on the last three.
inline double simpson(const std::vector<double>& f, double h) {
  const std::size_t m = f.size();
  if (m < 2) return 0.0;
  if (m == 2) return 0.5 * h * (f[0] + f[1]);
  std::size_t intervals = m - 1;
  double tail = 0.0;
  if (intervals % 2 == 1) {
    if (intervals == 1) return 0.5 * h * (f[0] + f[1]);
    const std::size_t j = m - 4;
    tail = 3.0 * h / 8.0 * (f[j] + 3.0 * f[j + 1] + 3.0 * f[j + 2] + f[j + 3]);
    intervals -= 3;
  }
  double s = f[0] + f[intervals];
  for (std::size_t j = 1; j < intervals; ++j) s += (j % 2 == 1 ? 4.0 : 2.0) * f[j];
  return s * h / 3.0 + tail;
}

/// Running Simpson integral; entry j approximates the integral over [0, t_j].
/// Odd nodes use the trapezoid correction from the previous even node.
inline std::vector<double> cumulative_simpson(const std::vector<double>& f, double h) {
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t j = 2; j < f.size(); j += 2)
    out[j] = out[j - 2] + h / 3.0 * (f[j - 2] + 4.0 * f[j - 1] + f[j]);
  for (std::size_t j = 1; j < f.size(); j += 2) {
    // Half-step of a quadratic through nodes j-1, j, j+1 (or a trapezoid at the end).
    if (j + 1 < f.size())
      out[j] = out[j - 1] + h / 12.0 * (5.0 * f[j - 1] + 8.0 * f[j] - f[j + 1]);
    else
      out[j] = out[j - 1] + 0.5 * h * (f[j - 1] + f[j]);
  }
  return out;
}

}  // namespace nahmkn
