#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace hypersent {

using Vector = std::vector<double>;

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A ball of radius 1/sqrt(c) in R^dim. c = 1 is the Poincare unit ball,
/// c = 0 degenerates to Euclidean space.
struct CurvatureSpace {
  std::size_t dim = 1;
  double c = 1.0;

  CurvatureSpace() = default;
  CurvatureSpace(std::size_t dim, double c);

  bool hyperbolic() const { return c > 0.0; }

  /// True when c*|x|^2 < 1 (any finite vector for c = 0).
  bool contains(std::span<const double> x) const;

  /// Throws GeometryError on dimension mismatch, non-finite coordinates, or
  /// points outside the ball beyond rounding slack.
  void validate(std::span<const double> x) const;
};

namespace constants {
inline constexpr double kProjectEps = 1e-5;
inline constexpr double kAtanhClamp = 1.0 - 1e-12;
inline constexpr double kDenominatorGuard = 1e-15;
// Tolerated overshoot of c*|x|^2 past 1 when validating composed points.
inline constexpr double kBoundarySlack = 1e-9;
}  // namespace constants

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
double norm(std::span<const double> a);
Vector negate(std::span<const double> a);

Vector mobius_add(const CurvatureSpace& space, std::span<const double> u,
                  std::span<const double> v);
Vector mobius_scalar_mul(const CurvatureSpace& space, double r,
                         std::span<const double> v);
double distance(const CurvatureSpace& space, std::span<const double> u,
                std::span<const double> v);
Vector project(const CurvatureSpace& space, std::span<const double> theta);
Vector geodesic_point(const CurvatureSpace& space, std::span<const double> a,
                      std::span<const double> b, double t);
double cosine(std::span<const double> u, std::span<const double> v);

/// Conformal factor 2 / (1 - c|x|^2).
double conformal_factor(const CurvatureSpace& space, std::span<const double> x);

// Unchecked kernels shared with the autodiff graph. Callers guarantee equal
// dimensions.
namespace kernel {
void mobius_add(double c, std::span<const double> u, std::span<const double> v,
                std::span<double> out);
void mobius_scalar_mul(double c, double r, std::span<const double> v,
                       std::span<double> out);
/// Distance as a function of |(-u) + v| (Mobius sum).
double distance_from_norm(double c, double n);
/// d/dn of distance_from_norm.
double distance_from_norm_derivative(double c, double n);
double clamped_atanh(double x);
}  // namespace kernel

/// Closed forms specific to the unit ball (c = 1). Used as a reference for
/// the curvature-generalised operations.
namespace unit_ball {
Vector mobius_add(std::span<const double> u, std::span<const double> v);
Vector mobius_scalar_mul(double r, std::span<const double> v);
/// arcosh(1 + 2|u-v|^2 / ((1-|u|^2)(1-|v|^2)))
double distance(std::span<const double> u, std::span<const double> v);
}  // namespace unit_ball

}  // namespace hypersent
