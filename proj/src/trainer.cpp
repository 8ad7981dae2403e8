#include "hypersent/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

namespace hypersent {

namespace {

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

enum Stream : std::uint64_t { kInit = 0, kShuffle = 1, kNegatives = 2 };

nlohmann::json threshold_json(double t) {
  if (std::isinf(t)) return t > 0 ? "inf" : "-inf";
  return t;
}

void apply_gradients(Model& model, const GradientRecord& grads, std::size_t* violations,
                     bool update_ffnn) {
  const CurvatureSpace space = model.space();
  const double lr = model.config.lr;
  const double clip = model.config.clip;
  for (const auto& [id, g] : grads.hyperbolic) {
    auto row = model.embeddings.row(static_cast<TokenId>(id));
    Vector step = g;
    if (const double n = norm(step); clip > 0.0 && n > clip)
      for (double& x : step) x *= clip / n;
    Vector next;
    try {
      next = rsgd_step(space, row, step, lr);
    } catch (const GeometryError& e) {
      throw TrainingError(std::string("embedding update failed: ") + e.what());
    }
    for (double x : next)
      if (!std::isfinite(x)) throw TrainingError("non-finite embedding");
    std::copy(next.begin(), next.end(), row.begin());
    if (violations && !space.contains(row)) ++*violations;
  }
  if (!update_ffnn || !model.ffnn) return;
  for (const auto& [block, g] : grads.euclidean) {
    Vector& w = model.ffnn->block(block);
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] -= lr * g[i];
      if (!std::isfinite(w[i])) throw TrainingError("non-finite FFNN weight");
    }
  }
}

std::size_t gold_class(const Model& model, const Sample& sample) {
  return class_index(sample.label, model.config.classes);
}

}  // namespace

Model Model::initialize(const RunConfig& config, const Vocab& vocab) {
  config.validate();
  auto rng = stream_rng(config.seed, kInit);
  Model m;
  m.config = config;
  m.vocab = vocab;
  const CurvatureSpace space = config.space();
  m.embeddings = EmbeddingTable::random_uniform(vocab.size(), space, config.init_scale, rng);
  if (has_ffnn(config.model)) {
    const std::size_t inputs = config.feature_spec().length(config.dim);
    m.ffnn = FfnnParams::glorot(inputs, config.hidden, config.classes, rng);
  }
  return m;
}

Vector Model::encode(const Sentence& sentence) const {
  return compose(composition_of(config.model), sentence, embeddings, space());
}

double Model::energy(const Sample& sample) const {
  return pair_energy(encode(sample.premise), encode(sample.hypothesis), config.beta, space());
}

Vector Model::probabilities(const Sample& sample) const {
  if (!ffnn) throw TrainingError("probabilities() needs an FFNN model");
  const CurvatureSpace s = space();
  const Vector features =
      build_features(encode(sample.premise), encode(sample.hypothesis), config.feature_spec(), s);
  return ffnn_forward(*ffnn, features);
}

std::size_t Model::predict(const Sample& sample) const {
  if (!ffnn) return energy(sample) < threshold.value_or(config.alpha) ? 0 : 1;
  const Vector p = probabilities(sample);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

double Model::loss(const Sample& sample) const {
  if (!ffnn) return margin_term(energy(sample), is_entailment(sample.label), config.alpha);
  return cross_entropy(probabilities(sample), gold_class(*this, sample));
}

NodeId Model::loss_node(Graph& graph, const Sample& sample) const {
  const CompositionMethod method = composition_of(config.model);
  const CurvatureSpace s = space();
  const NodeId u = compose_node(graph, method, sample.premise, embeddings, s);
  const NodeId v = compose_node(graph, method, sample.hypothesis, embeddings, s);
  if (!ffnn) {
    const NodeId e = pair_energy_node(graph, u, v, config.beta, s);
    return margin_term_node(graph, e, is_entailment(sample.label), config.alpha);
  }
  const NodeId features = build_features_node(graph, u, v, config.feature_spec(), s);
  return graph.softmax_cross_entropy(ffnn_logits_node(graph, *ffnn, features),
                                     gold_class(*this, sample));
}

Metrics evaluate_model(const Model& model, const std::vector<Sample>& samples) {
  std::vector<std::size_t> predicted, gold;
  predicted.reserve(samples.size());
  gold.reserve(samples.size());
  for (const Sample& s : samples) {
    predicted.push_back(model.predict(s));
    gold.push_back(class_index(s.label, model.config.classes));
  }
  return evaluate(predicted, gold, model.config.classes);
}

double train_step(Model& model, const Sample& sample, std::size_t* violations) {
  Graph graph;
  const NodeId loss = model.loss_node(graph, sample);
  const double value = graph.scalar(loss);
  if (!std::isfinite(value)) throw TrainingError("non-finite loss");
  apply_gradients(model, backward(graph, loss), violations, true);
  return value;
}

double disentangle_step(Model& model, const Sample& sample,
                        const std::vector<const Sentence*>& negatives, std::size_t* violations) {
  const CompositionMethod method = composition_of(model.config.model);
  const CurvatureSpace s = model.space();
  Graph graph;
  auto dist = [&](NodeId a, NodeId b) {
    return graph.distance_from_norm(s.c, graph.norm(graph.mobius_add(s.c, graph.neg(a), b)));
  };
  const NodeId u = compose_node(graph, method, sample.premise, model.embeddings, s);
  const NodeId v = compose_node(graph, method, sample.hypothesis, model.embeddings, s);
  std::vector<NodeId> neg;
  for (const Sentence* h : negatives)
    neg.push_back(dist(u, compose_node(graph, method, *h, model.embeddings, s)));
  const NodeId loss = disentangle_loss_node(graph, dist(u, v), neg);
  const double value = graph.scalar(loss);
  if (!std::isfinite(value)) throw TrainingError("non-finite disentanglement loss");
  apply_gradients(model, backward(graph, loss), violations, false);
  return value;
}

nlohmann::json to_json(const EpochRecord& r, std::uint64_t seed) {
  nlohmann::json j = {
      {"epoch", r.epoch},
      {"seed", seed},
      {"train_loss", r.train_loss},
      {"validation", to_json(r.validation)},
      {"ball_violations", r.ball_violations},
  };
  if (r.test) j["test"] = to_json(*r.test);
  if (r.threshold) j["threshold"] = threshold_json(*r.threshold);
  return j;
}

TrainResult train(const RunConfig& config, const DatasetSplit& data, const TrainOptions& options) {
  if (data.train.empty()) throw ConfigError("training set is empty");
  if (composition_of(config.model) == CompositionMethod::TreeMobius) {
    for (const auto* split : {&data.train, &data.validation, &data.test})
      for (const Sample& s : *split)
        if (!s.premise.tree || !s.hypothesis.tree)
          throw ConfigError("MS models need parse trees (JSONL data)");
  }
  const std::vector<Sample>& validation = data.validation.empty() ? data.train : data.validation;

  TrainResult result;
  Model model = Model::initialize(config, data.vocab);
  auto shuffle_rng = stream_rng(config.seed, kShuffle);
  double best_acc = -1.0;

  auto record_epoch = [&](std::size_t epoch, double train_loss) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_loss;
    rec.ball_violations = result.ball_violations;
    if (!model.ffnn) {
      std::vector<double> scores;
      std::vector<bool> entails;
      for (const Sample& s : validation) {
        scores.push_back(model.energy(s));
        entails.push_back(is_entailment(s.label));
      }
      model.threshold = select_threshold(scores, entails).threshold;
      rec.threshold = model.threshold;
    }
    rec.validation = evaluate_model(model, validation);
    if (!data.test.empty()) rec.test = evaluate_model(model, data.test);
    if (options.log) *options.log << to_json(rec, config.seed).dump() << '\n' << std::flush;

    const bool counts = epoch > 0 || config.epochs == 0;
    if (counts && rec.validation.accuracy > best_acc) {
      best_acc = rec.validation.accuracy;
      result.best = model;
      result.best.best_epoch = epoch;
    }
    result.history.push_back(std::move(rec));
  };

  record_epoch(0, 0.0);
  if (config.epochs == 0) return result;

  if (config.disentangle_epochs > 0) {
    auto neg_rng = stream_rng(config.seed, kNegatives);
    std::map<std::vector<TokenId>, std::vector<std::size_t>> by_premise;
    for (std::size_t i = 0; i < data.train.size(); ++i)
      by_premise[data.train[i].premise.tokens].push_back(i);
    std::uniform_int_distribution<std::size_t> any(0, data.train.size() - 1);
    std::vector<std::size_t> order(data.train.size());
    for (std::size_t e = 0; e < config.disentangle_epochs; ++e) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      for (std::size_t i : order) {
        const Sample& s = data.train[i];
        if (!is_entailment(s.label)) continue;
        std::vector<const Sentence*> negs;
        for (std::size_t j : by_premise[s.premise.tokens]) {
          if (negs.size() == config.negatives) break;
          if (j != i && !is_entailment(data.train[j].label))
            negs.push_back(&data.train[j].hypothesis);
        }
        for (std::size_t tries = 0; negs.size() < config.negatives && tries < 4 * config.negatives;
             ++tries) {
          const std::size_t j = any(neg_rng);
          if (data.train[j].hypothesis.tokens != s.hypothesis.tokens)
            negs.push_back(&data.train[j].hypothesis);
        }
        disentangle_step(model, s, negs, &result.ball_violations);
      }
    }
  }

  std::vector<std::size_t> order(data.train.size());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double total = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      try {
        total += train_step(model, data.train[order[k]], &result.ball_violations);
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                            ", training sample " + std::to_string(order[k]));
      }
      ++result.steps;
    }
    record_epoch(epoch, total / static_cast<double>(order.size()));
  }
  return result;
}

}  // namespace hypersent
