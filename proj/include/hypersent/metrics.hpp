#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hypersent/compose.hpp"

namespace hypersent {

/// rows = observed class, columns = predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 2);

  void add(std::size_t observed, std::size_t predicted, std::size_t count = 1);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  std::size_t classes() const { return classes_; }
  std::size_t at(std::size_t observed, std::size_t predicted) const;
  std::size_t total() const;
  std::size_t trace() const;
  std::size_t observed_count(std::size_t cls) const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

/// Precision/recall/F1 are reported for the binary task only, treating class
/// 0 (entailment) as positive. Metrics with a zero denominator are 0 and
/// listed in zero_denominator.
struct Metrics {
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  ConfusionMatrix confusion;
  std::vector<std::string> zero_denominator;
};

Metrics evaluate(std::span<const std::size_t> predictions, std::span<const std::size_t> gold,
                 std::size_t classes);
/// Recomputes the summary metrics from a (possibly merged) matrix.
Metrics metrics_from_confusion(const ConfusionMatrix& confusion);

nlohmann::json to_json(const Metrics& metrics);

struct HistogramBin {
  double lower = 0.0;
  std::size_t count = 0;
};

/// Equal-width bins of embedding-row norms over [0, 1/sqrt(c)), or
/// [0, max norm] when c = 0. The last bin is closed.
std::vector<HistogramBin> norm_histogram(const EmbeddingTable& embeddings,
                                         const CurvatureSpace& space, std::size_t bins);
std::string histogram_csv(const std::vector<HistogramBin>& histogram);

}  // namespace hypersent
