#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypersent/compose.hpp"

namespace hypersent {

enum class LossKind { CrossEntropy, Margin, Disentangle, Order };

std::string_view to_string(LossKind loss);

struct GradcheckCase {
  CompositionMethod method = CompositionMethod::TreeMobius;
  LossKind loss = LossKind::CrossEntropy;
  std::string features;  // cross-entropy only

  std::string name() const;
};

/// Every composition method paired with every loss it supports, and the
/// FFNN head over a spread of feature specs.
std::vector<GradcheckCase> default_cases();

struct GradcheckOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  double h = 1e-5;
  double tolerance = 1e-4;
  std::size_t max_dim = 10;
  /// 0: random dim in [2, max_dim] per trial.
  std::size_t dim = 0;
  std::size_t max_leaves = 7;
  std::size_t hidden = 8;
  /// Denominator floor per unit of loss. Double-precision central
  /// differences carry ~1e-11 * |loss| of rounding noise, so entries far
  /// below this are compared in absolute terms.
  double noise_floor = 1e-5;
  /// Test hook: perturbs every analytic gradient so the check must fail.
  bool corrupt = false;
};

struct CaseReport {
  GradcheckCase spec;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double max_error = 0.0;
};

struct GradcheckReport {
  std::vector<CaseReport> cases;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return max_error < tolerance; }
};

CaseReport check_case(const GradcheckCase& spec, const GradcheckOptions& options);
GradcheckReport run_gradcheck(std::span<const GradcheckCase> cases,
                              const GradcheckOptions& options);

nlohmann::json to_json(const GradcheckReport& report);

}  // namespace hypersent
