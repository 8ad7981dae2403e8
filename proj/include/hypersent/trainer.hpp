#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hypersent/compose.hpp"
#include "hypersent/config.hpp"
#include "hypersent/data.hpp"
#include "hypersent/metrics.hpp"
#include "hypersent/model.hpp"
#include "hypersent/vocab.hpp"

namespace hypersent {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trained (or freshly initialised) parameters plus everything needed to
/// score new pairs.
struct Model {
  RunConfig config;
  Vocab vocab;
  EmbeddingTable embeddings;
  std::optional<FfnnParams> ffnn;
  /// Margin models: predict entailment iff energy < threshold.
  std::optional<double> threshold;
  std::size_t best_epoch = 0;

  /// Embeddings uniform in +-init_scale then projected; FFNN Glorot. Uses
  /// config.seed.
  static Model initialize(const RunConfig& config, const Vocab& vocab);

  CurvatureSpace space() const { return config.space(); }
  Vector encode(const Sentence& sentence) const;
  /// Margin models only.
  double energy(const Sample& sample) const;
  /// FFNN models only.
  Vector probabilities(const Sample& sample) const;
  std::size_t predict(const Sample& sample) const;

  /// Training loss of one sample, computed without the graph.
  double loss(const Sample& sample) const;
  NodeId loss_node(Graph& graph, const Sample& sample) const;
};

Metrics evaluate_model(const Model& model, const std::vector<Sample>& samples);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  Metrics validation;
  std::optional<Metrics> test;
  std::optional<double> threshold;
  std::size_t ball_violations = 0;
};

nlohmann::json to_json(const EpochRecord& record, std::uint64_t seed);

struct TrainResult {
  Model best;
  std::vector<EpochRecord> history;
  std::size_t ball_violations = 0;
  std::size_t steps = 0;
};

struct TrainOptions {
  /// One JSON line per epoch (epoch 0 = before training).
  std::ostream* log = nullptr;
};

/// Per-sample RSGD on embeddings, plain SGD on FFNN weights, sample order
/// reshuffled every epoch. Keeps the epoch with the best validation
/// accuracy (ties keep the earlier one; the initial state counts only when
/// epochs == 0). Throws TrainingError on a non-finite loss.
TrainResult train(const RunConfig& config, const DatasetSplit& data,
                  const TrainOptions& options = {});

/// One update on a single sample. Returns its loss; increments
/// *violations for every updated embedding row left outside the ball.
double train_step(Model& model, const Sample& sample, std::size_t* violations = nullptr);

/// Disentanglement update: pulls the entailing pair together relative to
/// the negative hypotheses. Only embeddings change.
double disentangle_step(Model& model, const Sample& sample,
                        const std::vector<const Sentence*>& negatives,
                        std::size_t* violations = nullptr);

}  // namespace hypersent
