#include "hypersent/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hypersent {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {
  if (classes < 2) throw std::invalid_argument("confusion matrix needs at least 2 classes");
}

void ConfusionMatrix::add(std::size_t observed, std::size_t predicted, std::size_t count) {
  if (observed >= classes_ || predicted >= classes_)
    throw std::out_of_range("confusion matrix: class index out of range");
  counts_[observed * classes_ + predicted] += count;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw std::invalid_argument("confusion matrix: class count mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

std::size_t ConfusionMatrix::at(std::size_t observed, std::size_t predicted) const {
  return counts_.at(observed * classes_ + predicted);
}

std::size_t ConfusionMatrix::total() const {
  std::size_t s = 0;
  for (auto c : counts_) s += c;
  return s;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < classes_; ++i) s += at(i, i);
  return s;
}

std::size_t ConfusionMatrix::observed_count(std::size_t cls) const {
  std::size_t s = 0;
  for (std::size_t j = 0; j < classes_; ++j) s += at(cls, j);
  return s;
}

Metrics metrics_from_confusion(const ConfusionMatrix& confusion) {
  if (confusion.total() == 0) throw std::invalid_argument("evaluate: no samples");
  Metrics m;
  m.confusion = confusion;
  m.accuracy = static_cast<double>(confusion.trace()) / static_cast<double>(confusion.total());
  if (confusion.classes() != 2) return m;

  const auto tp = static_cast<double>(confusion.at(0, 0));
  const auto fn = static_cast<double>(confusion.at(0, 1));
  const auto fp = static_cast<double>(confusion.at(1, 0));
  auto ratio = [&](double num, double den, const char* name) {
    if (den == 0.0) {
      m.zero_denominator.emplace_back(name);
      return 0.0;
    }
    return num / den;
  };
  m.precision = ratio(tp, tp + fp, "precision");
  m.recall = ratio(tp, tp + fn, "recall");
  m.f1 = ratio(2.0 * *m.precision * *m.recall, *m.precision + *m.recall, "f1");
  return m;
}

Metrics evaluate(std::span<const std::size_t> predictions, std::span<const std::size_t> gold,
                 std::size_t classes) {
  if (predictions.size() != gold.size())
    throw std::invalid_argument("evaluate: predictions and gold differ in length");
  if (predictions.empty()) throw std::invalid_argument("evaluate: no samples");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < gold.size(); ++i) cm.add(gold[i], predictions[i]);
  return metrics_from_confusion(cm);
}

nlohmann::json to_json(const Metrics& metrics) {
  nlohmann::json j;
  j["accuracy"] = metrics.accuracy;
  if (metrics.precision) j["precision"] = *metrics.precision;
  if (metrics.recall) j["recall"] = *metrics.recall;
  if (metrics.f1) j["f1"] = *metrics.f1;
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < metrics.confusion.classes(); ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t k = 0; k < metrics.confusion.classes(); ++k) row.push_back(metrics.confusion.at(i, k));
    rows.push_back(row);
  }
  j["confusion"] = rows;
  j["samples"] = metrics.confusion.total();
  j["zero_denominator"] = metrics.zero_denominator;
  return j;
}

std::vector<HistogramBin> norm_histogram(const EmbeddingTable& embeddings,
                                         const CurvatureSpace& space, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("norm_histogram: bins must be >= 1");
  std::vector<double> norms;
  norms.reserve(embeddings.rows());
  for (std::size_t r = 0; r < embeddings.rows(); ++r)
    norms.push_back(norm(embeddings.row(static_cast<TokenId>(r))));

  double upper = 0.0;
  if (space.hyperbolic())
    upper = 1.0 / std::sqrt(space.c);
  else if (!norms.empty())
    upper = *std::max_element(norms.begin(), norms.end());
  if (upper == 0.0) upper = 1.0;

  const double width = upper / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) out[b].lower = width * static_cast<double>(b);
  for (double n : norms) {
    auto b = static_cast<std::size_t>(n / width);
    out[std::min(b, bins - 1)].count += 1;
  }
  return out;
}

std::string histogram_csv(const std::vector<HistogramBin>& histogram) {
  std::ostringstream out;
  out.precision(17);
  out << "bin_lower,count\n";
  for (const auto& bin : histogram) out << bin.lower << ',' << bin.count << '\n';
  return out.str();
}

}  // namespace hypersent
