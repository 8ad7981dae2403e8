#include "hypersent/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace hypersent {

namespace {

constexpr const char* kFormat = "hypersent-checkpoint";

nlohmann::json threshold_to_json(double t) {
  if (std::isinf(t)) return t > 0 ? "inf" : "-inf";
  return t;
}

double threshold_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw CheckpointError("bad threshold '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace

nlohmann::json to_json(const Model& m) {
  nlohmann::json j = {
      {"format", kFormat},
      {"version", kCheckpointVersion},
      {"config", to_json(m.config)},
      {"activation", "relu"},
      {"best_epoch", m.best_epoch},
      {"vocab", m.vocab.tokens()},
      {"embeddings",
       {{"rows", m.embeddings.rows()}, {"dim", m.embeddings.dim()}, {"data", m.embeddings.data()}}},
  };
  if (m.ffnn) {
    j["ffnn"] = {
        {"inputs", m.ffnn->inputs},     {"hidden", m.ffnn->hidden},
        {"classes", m.ffnn->classes},   {"w_hidden", m.ffnn->w_hidden},
        {"b_hidden", m.ffnn->b_hidden}, {"w_out", m.ffnn->w_out},
        {"b_out", m.ffnn->b_out},
    };
  } else {
    j["ffnn"] = nullptr;
  }
  j["threshold"] = m.threshold ? threshold_to_json(*m.threshold) : nlohmann::json(nullptr);
  return j;
}

Model model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != kFormat) throw CheckpointError("not a checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    if (j.at("activation") != "relu") throw CheckpointError("unsupported activation");

    Model m;
    m.config = run_config_from_json(j.at("config"));
    m.config.validate();
    m.best_epoch = j.at("best_epoch").get<std::size_t>();
    m.vocab = Vocab::from_tokens(j.at("vocab").get<std::vector<std::string>>());

    const auto& e = j.at("embeddings");
    const auto rows = e.at("rows").get<std::size_t>();
    const auto dim = e.at("dim").get<std::size_t>();
    if (dim != m.config.dim) throw CheckpointError("embedding dim differs from config dim");
    if (rows != m.vocab.size()) throw CheckpointError("embedding rows differ from vocab size");
    m.embeddings = EmbeddingTable(rows, dim, e.at("data").get<std::vector<double>>());
    const CurvatureSpace space = m.config.space();
    for (std::size_t r = 0; r < rows; ++r) space.validate(m.embeddings.row(static_cast<TokenId>(r)));

    if (const auto& f = j.at("ffnn"); !f.is_null()) {
      FfnnParams p;
      p.inputs = f.at("inputs").get<std::size_t>();
      p.hidden = f.at("hidden").get<std::size_t>();
      p.classes = f.at("classes").get<std::size_t>();
      p.w_hidden = f.at("w_hidden").get<Vector>();
      p.b_hidden = f.at("b_hidden").get<Vector>();
      p.w_out = f.at("w_out").get<Vector>();
      p.b_out = f.at("b_out").get<Vector>();
      p.validate();
      if (p.inputs != m.config.feature_spec().length(dim) || p.classes != m.config.classes)
        throw CheckpointError("FFNN shape does not match config");
      m.ffnn = std::move(p);
    } else if (has_ffnn(m.config.model)) {
      throw CheckpointError("checkpoint lacks FFNN weights");
    }
    if (const auto& t = j.at("threshold"); !t.is_null()) m.threshold = threshold_from_json(t);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("invalid checkpoint: ") + e.what());
  }
}

std::string dump_checkpoint(const Model& model) { return to_json(model).dump(1) + "\n"; }

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out << dump_checkpoint(model);
  if (!out) throw CheckpointError("failed writing " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace hypersent
