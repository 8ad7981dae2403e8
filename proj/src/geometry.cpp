#include "hypersent/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hypersent {

CurvatureSpace::CurvatureSpace(std::size_t dim_, double c_) : dim(dim_), c(c_) {
  if (dim == 0) throw GeometryError("CurvatureSpace: dim must be >= 1");
  if (!(c >= 0.0) || !std::isfinite(c))
    throw GeometryError("CurvatureSpace: curvature must be finite and >= 0");
}

bool CurvatureSpace::contains(std::span<const double> x) const {
  if (x.size() != dim) return false;
  for (double xi : x)
    if (!std::isfinite(xi)) return false;
  return c == 0.0 || c * squared_norm(x) < 1.0;
}

void CurvatureSpace::validate(std::span<const double> x) const {
  if (x.size() != dim)
    throw GeometryError("dimension mismatch: expected " + std::to_string(dim) +
                        ", got " + std::to_string(x.size()));
  for (double xi : x)
    if (!std::isfinite(xi)) throw GeometryError("non-finite coordinate");
  if (c > 0.0 && c * squared_norm(x) >= 1.0 + constants::kBoundarySlack)
    throw GeometryError("point lies outside the ball (c*|x|^2 >= 1)");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

Vector negate(std::span<const double> a) {
  Vector out(a.begin(), a.end());
  for (double& x : out) x = -x;
  return out;
}

namespace kernel {

double clamped_atanh(double x) {
  return std::atanh(std::clamp(x, -constants::kAtanhClamp, constants::kAtanhClamp));
}

void mobius_add(double c, std::span<const double> u, std::span<const double> v,
                std::span<double> out) {
  if (c == 0.0) {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] + v[i];
    return;
  }
  const double uv = dot(u, v);
  const double uu = squared_norm(u);
  const double vv = squared_norm(v);
  const double a = 1.0 + 2.0 * c * uv + c * vv;
  const double b = 1.0 - c * uu;
  const double den = 1.0 + 2.0 * c * uv + c * c * uu * vv + constants::kDenominatorGuard;
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = (a * u[i] + b * v[i]) / den;
}

void mobius_scalar_mul(double c, double r, std::span<const double> v,
                       std::span<double> out) {
  if (c == 0.0) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = r * v[i];
    return;
  }
  const double n = norm(v);
  if (n == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const double sc = std::sqrt(c);
  const double scale = std::tanh(r * clamped_atanh(sc * n)) / (sc * n);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = scale * v[i];
}

double distance_from_norm(double c, double n) {
  if (c == 0.0) return 2.0 * n;
  const double sc = std::sqrt(c);
  return 2.0 / sc * clamped_atanh(sc * n);
}

double distance_from_norm_derivative(double c, double n) {
  if (c == 0.0) return 2.0;
  const double s = std::sqrt(c) * n;
  if (s >= constants::kAtanhClamp) return 0.0;
  return 2.0 / (1.0 - s * s);
}

}  // namespace kernel

Vector mobius_add(const CurvatureSpace& space, std::span<const double> u,
                  std::span<const double> v) {
  space.validate(u);
  space.validate(v);
  Vector out(space.dim);
  kernel::mobius_add(space.c, u, v, out);
  return out;
}

Vector mobius_scalar_mul(const CurvatureSpace& space, double r,
                         std::span<const double> v) {
  space.validate(v);
  Vector out(space.dim);
  kernel::mobius_scalar_mul(space.c, r, v, out);
  return out;
}

double distance(const CurvatureSpace& space, std::span<const double> u,
                std::span<const double> v) {
  space.validate(u);
  space.validate(v);
  Vector diff(space.dim);
  const Vector neg_u = negate(u);
  kernel::mobius_add(space.c, neg_u, v, diff);
  return kernel::distance_from_norm(space.c, norm(diff));
}

Vector project(const CurvatureSpace& space, std::span<const double> theta) {
  if (theta.size() != space.dim) throw GeometryError("project: dimension mismatch");
  Vector out(theta.begin(), theta.end());
  if (space.c == 0.0) return out;
  const double nn = squared_norm(theta);
  if (space.c * nn < 1.0) return out;
  const double scale = 1.0 / (std::sqrt(space.c) * (std::sqrt(nn) + constants::kProjectEps));
  for (double& x : out) x *= scale;
  return out;
}

Vector geodesic_point(const CurvatureSpace& space, std::span<const double> a,
                      std::span<const double> b, double t) {
  const Vector direction = mobius_add(space, negate(a), b);
  return mobius_add(space, a, mobius_scalar_mul(space, t, direction));
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw GeometryError("cosine: dimension mismatch");
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

double conformal_factor(const CurvatureSpace& space, std::span<const double> x) {
  return 2.0 / (1.0 - space.c * squared_norm(x));
}

namespace unit_ball {

Vector mobius_add(std::span<const double> u, std::span<const double> v) {
  const double uv = dot(u, v);
  const double uu = squared_norm(u);
  const double vv = squared_norm(v);
  const double den = 1.0 + 2.0 * uv + uu * vv;
  Vector out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    out[i] = ((1.0 + 2.0 * uv + vv) * u[i] + (1.0 - uu) * v[i]) / den;
  return out;
}

Vector mobius_scalar_mul(double r, std::span<const double> v) {
  const double n = norm(v);
  Vector out(v.size(), 0.0);
  if (n == 0.0) return out;
  const double scale = std::tanh(r * std::atanh(n)) / n;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = scale * v[i];
  return out;
}

double distance(std::span<const double> u, std::span<const double> v) {
  double diff2 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) diff2 += (u[i] - v[i]) * (u[i] - v[i]);
  const double arg =
      1.0 + 2.0 * diff2 / ((1.0 - squared_norm(u)) * (1.0 - squared_norm(v)));
  return std::acosh(std::max(arg, 1.0));
}

}  // namespace unit_ball

}  // namespace hypersent
