#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hypersent/compose.hpp"
#include "hypersent/treeparse.hpp"
#include "hypersent/vocab.hpp"

namespace hypersent {

/// NonEntailment is the merged neutral/contradiction class written by the
/// binary generators; it is only valid for 2-class tasks.
enum class Label { Entailment, Neutral, Contradiction, NonEntailment };

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "entailment" | "neutral" | "contradiction" | "non-entailment"; "-" (no
/// gold consensus) yields nullopt. Anything else throws DataError.
std::optional<Label> parse_label(std::string_view text);
std::string_view label_string(Label label);

/// 3 classes: entailment 0, neutral 1, contradiction 2.
/// 2 classes: entailment 0, everything else 1.
std::size_t class_index(Label label, std::size_t classes);
bool is_entailment(Label label);

struct RawSentence {
  std::vector<std::string> tokens;  // normalized, sentence order
  std::optional<ParseTree> tree;
};

struct RawSample {
  RawSentence premise;
  RawSentence hypothesis;
  Label label = Label::Entailment;
};

struct Sample {
  Sentence premise;
  Sentence hypothesis;
  Label label = Label::Entailment;
};

struct RawSplit {
  std::vector<RawSample> train;
  std::vector<RawSample> validation;
  std::vector<RawSample> test;
};

struct DatasetSplit {
  std::vector<Sample> train;
  std::vector<Sample> validation;
  std::vector<Sample> test;
  Vocab vocab;
  /// True when no validation data was available and training data stands in.
  bool validation_from_train = false;
};

enum class DataFormat { Jsonl, Tsv };
DataFormat parse_data_format(std::string_view text);
/// .jsonl / .json -> Jsonl, anything else -> Tsv.
DataFormat guess_data_format(const std::filesystem::path& path);

struct LoadResult {
  std::vector<RawSample> samples;
  std::size_t skipped = 0;  // records without a gold label
};

/// JSONL records need premise_binary_parse, hypothesis_binary_parse and
/// gold_label. TSV lines are premise<TAB>hypothesis<TAB>label with
/// whitespace tokens and no parse. Errors name the offending line.
LoadResult read_samples(std::istream& in, DataFormat format, std::size_t classes,
                        std::string_view source = "<stream>");
LoadResult load_samples(const std::filesystem::path& path, DataFormat format,
                        std::size_t classes);

/// Ids by first occurrence over premise then hypothesis tokens; id 0 is UNK.
Vocab build_vocab(const std::vector<RawSample>& samples);
Sample to_sample(const RawSample& raw, const Vocab& vocab);
/// Builds the vocabulary from split.train and maps every split through it.
DatasetSplit assemble(const RawSplit& split);

struct DataPaths {
  std::filesystem::path train;
  std::optional<std::filesystem::path> validation;
  std::optional<std::filesystem::path> test;
};

/// Loads and assembles a dataset. Without a validation file, val_fraction of
/// the training samples (seeded shuffle) are carved off; with fraction 0 the
/// training set doubles as validation and validation_from_train is set.
DatasetSplit load_dataset(const DataPaths& paths, DataFormat format, std::size_t classes,
                          double val_fraction = 0.0, std::uint64_t seed = 0);

struct AdjNounConfig {
  std::size_t vocab_size = 1000;
  std::size_t train = 2000;
  std::size_t validation = 20000;
  std::size_t test = 20000;
  std::uint64_t seed = 0;
};

/// First half of the vocabulary are adjectives a1..a{N/2}, the rest nouns
/// n{N/2+1}..n{N}. Positives: "n_i" => "a_j n_i"; negatives: "n_i" vs
/// "a_j n_k", i != k. Every word occurs in training, inside a positive pair
/// while the positive budget allows; splits are disjoint.
RawSplit gen_adjnoun(const AdjNounConfig& config);

struct NumbersConfig {
  int lo = 1000;
  int hi = 9999;
  std::size_t train = 8000;
  std::size_t validation = 1000;
  std::size_t test = 1000;
  std::uint64_t seed = 0;
};

/// Pairs of distinct 4-digit numbers written as digit tokens; entailment iff
/// the first is smaller. Each split is balanced (ceil(n/2) positives) and
/// splits are disjoint.
RawSplit gen_numbers(const NumbersConfig& config);

void write_samples(std::ostream& out, const std::vector<RawSample>& samples, DataFormat format);
void write_samples(const std::filesystem::path& path, const std::vector<RawSample>& samples,
                   DataFormat format);

}  // namespace hypersent
