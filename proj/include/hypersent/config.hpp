#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "hypersent/compose.hpp"
#include "hypersent/model.hpp"

namespace hypersent {

enum class ModelKind { MS, MS_FFNN, MA_FFNN, LMS, RMS, LMS_FFNN, RMS_FFNN, EA_FFNN, ES_FFNN };

ModelKind parse_model_kind(std::string_view text);
std::string_view to_string(ModelKind kind);
CompositionMethod composition_of(ModelKind kind);
bool has_ffnn(ModelKind kind);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Everything that defines a training run. Seeds all randomness.
struct RunConfig {
  ModelKind model = ModelKind::MS_FFNN;
  std::size_t dim = 50;
  double curvature = 1.0;
  std::size_t classes = 2;
  std::string features;  // empty: model default
  double lr = 0.05;
  std::size_t epochs = 15;
  double alpha = 0.05;
  double beta = 0.5;
  std::uint64_t seed = 0;
  std::size_t hidden = FfnnParams::kDefaultHidden;
  double init_scale = 1e-3;
  std::size_t disentangle_epochs = 0;
  std::size_t negatives = 10;
  double val_fraction = 0.0;
  /// Embedding-row gradients are rescaled to at most this Euclidean norm
  /// before the Riemannian update; 0 disables.
  double clip = 5.0;

  /// Euclidean models always live in c = 0.
  CurvatureSpace space() const;
  FeatureSpec feature_spec() const;
  LossConfig loss() const;
  /// Throws ConfigError on any incompatible combination.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

std::string default_features(ModelKind kind);

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);

}  // namespace hypersent
