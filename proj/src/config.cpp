#include "hypersent/config.hpp"

#include <cctype>
#include <cmath>

namespace hypersent {

namespace {

struct KindName {
  ModelKind kind;
  std::string_view name;
};

constexpr KindName kKinds[] = {
    {ModelKind::MS, "MS"},           {ModelKind::MS_FFNN, "MS_FFNN"},
    {ModelKind::MA_FFNN, "MA_FFNN"}, {ModelKind::LMS, "LMS"},
    {ModelKind::RMS, "RMS"},         {ModelKind::LMS_FFNN, "LMS_FFNN"},
    {ModelKind::RMS_FFNN, "RMS_FFNN"}, {ModelKind::EA_FFNN, "EA_FFNN"},
    {ModelKind::ES_FFNN, "ES_FFNN"},
};

}  // namespace

ModelKind parse_model_kind(std::string_view text) {
  std::string key(text);
  for (char& ch : key) ch = ch == '+' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  for (const auto& k : kKinds)
    if (k.name == key) return k.kind;
  throw ConfigError("unknown model '" + std::string(text) + "'");
}

std::string_view to_string(ModelKind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k.name;
  return "?";
}

CompositionMethod composition_of(ModelKind kind) {
  switch (kind) {
    case ModelKind::MS:
    case ModelKind::MS_FFNN: return CompositionMethod::TreeMobius;
    case ModelKind::MA_FFNN: return CompositionMethod::MobiusAverage;
    case ModelKind::LMS:
    case ModelKind::LMS_FFNN: return CompositionMethod::LeftChain;
    case ModelKind::RMS:
    case ModelKind::RMS_FFNN: return CompositionMethod::RightChain;
    case ModelKind::EA_FFNN: return CompositionMethod::EuclideanAverage;
    case ModelKind::ES_FFNN: return CompositionMethod::EuclideanSum;
  }
  throw ConfigError("unknown model");
}

bool has_ffnn(ModelKind kind) {
  return kind != ModelKind::MS && kind != ModelKind::LMS && kind != ModelKind::RMS;
}

std::string default_features(ModelKind kind) {
  if (!has_ffnn(kind)) return {};
  if (!is_hyperbolic(composition_of(kind))) return "u,v,absdiff,hadamard,dot,edist";
  return "u,v,mdiff,cos,dist";
}

CurvatureSpace RunConfig::space() const {
  return CurvatureSpace(dim, is_hyperbolic(composition_of(model)) ? curvature : 0.0);
}

FeatureSpec RunConfig::feature_spec() const {
  return FeatureSpec::parse(features.empty() ? default_features(model) : features);
}

LossConfig RunConfig::loss() const { return LossConfig{alpha, beta, classes}; }

void RunConfig::validate() const {
  if (dim == 0) throw ConfigError("dim must be >= 1");
  if (!(curvature >= 0.0) || !std::isfinite(curvature)) throw ConfigError("curvature must be >= 0");
  if (classes != 2 && classes != 3) throw ConfigError("classes must be 2 or 3");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(init_scale > 0.0)) throw ConfigError("init scale must be > 0");
  if (!(clip >= 0.0)) throw ConfigError("clip must be >= 0");
  try {
    loss().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!has_ffnn(model)) {
    if (classes != 2)
      throw ConfigError(std::string(to_string(model)) + " is a margin model and supports only 2 classes");
    if (!features.empty()) throw ConfigError("margin models take no feature spec");
    if (disentangle_epochs > 0) throw ConfigError("disentanglement pre-training needs an FFNN model");
    return;
  }
  if (hidden == 0) throw ConfigError("hidden layer must have at least one unit");
  if (disentangle_epochs > 0 && negatives == 0)
    throw ConfigError("disentanglement needs at least one negative sample");
  FeatureSpec spec;
  try {
    spec = feature_spec();
    check_feature_space(spec, space());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("val fraction must lie in [0, 1)");
}

nlohmann::json to_json(const RunConfig& c) {
  return {
      {"model", std::string(to_string(c.model))},
      {"dim", c.dim},
      {"curvature", c.curvature},
      {"classes", c.classes},
      {"features", c.features.empty() ? default_features(c.model) : c.features},
      {"lr", c.lr},
      {"epochs", c.epochs},
      {"alpha", c.alpha},
      {"beta", c.beta},
      {"seed", c.seed},
      {"hidden", c.hidden},
      {"init_scale", c.init_scale},
      {"disentangle_epochs", c.disentangle_epochs},
      {"negatives", c.negatives},
      {"val_fraction", c.val_fraction},
      {"clip", c.clip},
  };
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.model = parse_model_kind(j.at("model").get<std::string>());
  c.dim = j.at("dim").get<std::size_t>();
  c.curvature = j.at("curvature").get<double>();
  c.classes = j.at("classes").get<std::size_t>();
  c.features = j.at("features").get<std::string>();
  c.lr = j.at("lr").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.alpha = j.at("alpha").get<double>();
  c.beta = j.at("beta").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.init_scale = j.at("init_scale").get<double>();
  c.disentangle_epochs = j.at("disentangle_epochs").get<std::size_t>();
  c.negatives = j.at("negatives").get<std::size_t>();
  c.val_fraction = j.at("val_fraction").get<double>();
  c.clip = j.at("clip").get<double>();
  return c;
}

}  // namespace hypersent
