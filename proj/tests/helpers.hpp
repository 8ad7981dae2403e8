#pragma once

#include <cmath>
#include <random>

#include "hypersent/geometry.hpp"

namespace testing {

using hypersent::Vector;

/// Uniform direction, norm uniform in [0, max_norm].
inline Vector random_ball_point(std::size_t dim, double max_norm, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector x(dim);
  double n = 0.0;
  while (n == 0.0) {
    for (double& xi : x) xi = g(rng);
    n = hypersent::norm(x);
  }
  const double r = max_norm * u(rng);
  for (double& xi : x) xi *= r / n;
  return x;
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace testing
