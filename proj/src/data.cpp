#include "hypersent/data.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

namespace hypersent {

using nlohmann::json;

std::optional<Label> parse_label(std::string_view text) {
  if (text == "entailment") return Label::Entailment;
  if (text == "neutral") return Label::Neutral;
  if (text == "contradiction") return Label::Contradiction;
  if (text == "non-entailment") return Label::NonEntailment;
  if (text == "-") return std::nullopt;
  throw DataError("unknown label '" + std::string(text) + "'");
}

std::string_view label_string(Label label) {
  switch (label) {
    case Label::Entailment: return "entailment";
    case Label::Neutral: return "neutral";
    case Label::Contradiction: return "contradiction";
    case Label::NonEntailment: return "non-entailment";
  }
  return "?";
}

std::size_t class_index(Label label, std::size_t classes) {
  if (classes == 2) return label == Label::Entailment ? 0 : 1;
  if (classes == 3) {
    switch (label) {
      case Label::Entailment: return 0;
      case Label::Neutral: return 1;
      case Label::Contradiction: return 2;
      case Label::NonEntailment:
        throw DataError("label 'non-entailment' is only valid for the 2-class task");
    }
  }
  throw DataError("classes must be 2 or 3");
}

bool is_entailment(Label label) { return label == Label::Entailment; }

DataFormat parse_data_format(std::string_view text) {
  if (text == "jsonl") return DataFormat::Jsonl;
  if (text == "tsv") return DataFormat::Tsv;
  throw DataError("unknown data format '" + std::string(text) + "' (expected jsonl or tsv)");
}

DataFormat guess_data_format(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".jsonl" || ext == ".json" ? DataFormat::Jsonl : DataFormat::Tsv;
}

namespace {

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) out.push_back(normalize_token(token));
  return out;
}

RawSentence sentence_from_tokens(std::string_view text) {
  RawSentence s;
  s.tokens = split_tokens(text);
  if (s.tokens.empty()) throw DataError("empty sentence");
  return s;
}

RawSentence sentence_from_parse(std::string_view text) {
  RawSentence s;
  ParseTree tree = parse_sexpr(text);
  tree.assign_ids([](const std::string&) { return -1; });
  for (const auto& token : tree.leaf_tokens()) s.tokens.push_back(normalize_token(token));
  s.tree = std::move(tree);
  return s;
}

std::string where(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line) + ": ";
}

}  // namespace

LoadResult read_samples(std::istream& in, DataFormat format, std::size_t classes,
                        std::string_view source) {
  if (classes != 2 && classes != 3) throw DataError("classes must be 2 or 3");
  LoadResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      RawSample sample;
      std::optional<Label> label;
      if (format == DataFormat::Jsonl) {
        json record;
        try {
          record = json::parse(line);
        } catch (const json::parse_error& e) {
          throw DataError(std::string("malformed JSON: ") + e.what());
        }
        for (const char* field : {"premise_binary_parse", "hypothesis_binary_parse", "gold_label"})
          if (!record.contains(field) || !record[field].is_string())
            throw DataError(std::string("missing string field '") + field + "'");
        label = parse_label(record["gold_label"].get<std::string>());
        if (!label) {
          ++result.skipped;
          continue;
        }
        sample.premise = sentence_from_parse(record["premise_binary_parse"].get<std::string>());
        sample.hypothesis = sentence_from_parse(record["hypothesis_binary_parse"].get<std::string>());
      } else {
        std::vector<std::string_view> cols;
        std::string_view rest = line;
        while (true) {
          const auto tab = rest.find('\t');
          cols.push_back(rest.substr(0, tab));
          if (tab == std::string_view::npos) break;
          rest.remove_prefix(tab + 1);
        }
        if (cols.size() != 3)
          throw DataError("expected 3 tab-separated columns, found " + std::to_string(cols.size()));
        label = parse_label(cols[2]);
        if (!label) {
          ++result.skipped;
          continue;
        }
        sample.premise = sentence_from_tokens(cols[0]);
        sample.hypothesis = sentence_from_tokens(cols[1]);
      }
      sample.label = *label;
      class_index(sample.label, classes);
      result.samples.push_back(std::move(sample));
    } catch (const std::exception& e) {
      throw DataError(where(source, line_no) + e.what());
    }
  }
  return result;
}

LoadResult load_samples(const std::filesystem::path& path, DataFormat format,
                        std::size_t classes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_samples(in, format, classes, path.string());
}

Vocab build_vocab(const std::vector<RawSample>& samples) {
  Vocab vocab;
  for (const auto& s : samples) {
    for (const auto& t : s.premise.tokens) vocab.add(t);
    for (const auto& t : s.hypothesis.tokens) vocab.add(t);
  }
  return vocab;
}

namespace {

Sentence to_sentence(const RawSentence& raw, const Vocab& vocab) {
  if (raw.tree) {
    ParseTree tree = *raw.tree;
    tree.assign_ids([&](const std::string& t) { return vocab.lookup(normalize_token(t)); });
    return Sentence::from_tree(tree);
  }
  std::vector<TokenId> ids;
  ids.reserve(raw.tokens.size());
  for (const auto& t : raw.tokens) ids.push_back(vocab.lookup(t));
  return Sentence::from_tokens(std::move(ids));
}

std::vector<Sample> to_samples(const std::vector<RawSample>& raw, const Vocab& vocab) {
  std::vector<Sample> out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(to_sample(r, vocab));
  return out;
}

}  // namespace

Sample to_sample(const RawSample& raw, const Vocab& vocab) {
  return Sample{to_sentence(raw.premise, vocab), to_sentence(raw.hypothesis, vocab), raw.label};
}

DatasetSplit assemble(const RawSplit& split) {
  DatasetSplit out;
  out.vocab = build_vocab(split.train);
  out.train = to_samples(split.train, out.vocab);
  out.validation = to_samples(split.validation, out.vocab);
  out.test = to_samples(split.test, out.vocab);
  return out;
}

DatasetSplit load_dataset(const DataPaths& paths, DataFormat format, std::size_t classes,
                          double val_fraction, std::uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0))
    throw DataError("validation fraction must lie in [0, 1)");
  RawSplit raw;
  raw.train = load_samples(paths.train, format, classes).samples;
  if (raw.train.empty()) throw DataError("training file " + paths.train.string() + " has no samples");
  if (paths.test) raw.test = load_samples(*paths.test, format, classes).samples;

  bool from_train = false;
  if (paths.validation) {
    raw.validation = load_samples(*paths.validation, format, classes).samples;
  } else if (val_fraction > 0.0) {
    std::mt19937_64 rng(seed);
    std::shuffle(raw.train.begin(), raw.train.end(), rng);
    const auto n_val = static_cast<std::size_t>(val_fraction * static_cast<double>(raw.train.size()));
    raw.validation.assign(raw.train.end() - static_cast<std::ptrdiff_t>(n_val), raw.train.end());
    raw.train.resize(raw.train.size() - n_val);
  } else {
    raw.validation = raw.train;
    from_train = true;
  }
  DatasetSplit split = assemble(raw);
  split.validation_from_train = from_train;
  return split;
}

namespace {

RawSentence words(std::vector<std::string> tokens) {
  RawSentence s;
  s.tokens = std::move(tokens);
  return s;
}

std::vector<bool> balanced_labels(std::size_t n, std::mt19937_64& rng) {
  std::vector<bool> labels(n, false);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>((n + 1) / 2), true);
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

std::size_t positives_in(std::size_t n) { return (n + 1) / 2; }

// Keeps drawing until `draw` yields an unused key; bounded so impossible
// requests fail instead of spinning.
template <class Key, class Draw>
Key draw_unique(std::set<Key>& used, Draw&& draw) {
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    Key key = draw();
    if (used.insert(key).second) return key;
  }
  throw DataError("generator could not find an unused sample; requested sizes are infeasible");
}

}  // namespace

RawSplit gen_adjnoun(const AdjNounConfig& config) {
  const std::size_t n = config.vocab_size;
  if (n < 4 || n % 2 != 0) throw DataError("adjective-noun vocabulary size must be even and >= 4");
  const std::size_t half = n / 2;
  if (config.train < half)
    throw DataError("adjective-noun training set must have at least N/2 samples to cover every word");
  const std::size_t total = config.train + config.validation + config.test;
  const std::size_t want_pos = positives_in(config.train) + positives_in(config.validation) +
                               positives_in(config.test);
  if (want_pos > half * half || total - want_pos > half * half * (half - 1))
    throw DataError("adjective-noun: requested more distinct samples than exist");

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, half - 1);
  // key: (premise noun, adjective, hypothesis noun), all 0-based within group.
  using Key = std::tuple<std::size_t, std::size_t, std::size_t>;
  std::set<Key> used;

  auto adjective = [](std::size_t j) { return "a" + std::to_string(j + 1); };
  auto noun = [half](std::size_t i) { return "n" + std::to_string(half + i + 1); };
  auto render = [&](const Key& k, bool positive) {
    const auto& [i, j, kk] = k;
    return RawSample{words({noun(i)}), words({adjective(j), noun(kk)}),
                     positive ? Label::Entailment : Label::NonEntailment};
  };
  auto other_noun = [&](std::size_t i) {
    std::uniform_int_distribution<std::size_t> off(1, half - 1);
    return (i + off(rng)) % half;
  };
  auto random_sample = [&](bool positive) {
    return render(draw_unique(used,
                              [&] {
                                const std::size_t i = pick(rng);
                                const std::size_t j = pick(rng);
                                return Key{i, j, positive ? i : other_noun(i)};
                              }),
                  positive);
  };

  RawSplit out;
  {
    // Coverage samples come first and are positive while the positive budget
    // lasts, so every adjective is seen attached to its noun at least once.
    const std::size_t positives = positives_in(config.train);
    const std::size_t cover_pos = std::min(half, positives);
    std::vector<bool> labels(config.train, false);
    std::fill_n(labels.begin(), cover_pos, true);
    std::fill_n(labels.begin() + static_cast<std::ptrdiff_t>(half), positives - cover_pos, true);
    std::shuffle(labels.begin() + static_cast<std::ptrdiff_t>(half), labels.end(), rng);
    std::vector<std::size_t> adjs(half), nouns(half);
    std::iota(adjs.begin(), adjs.end(), 0);
    std::iota(nouns.begin(), nouns.end(), 0);
    std::shuffle(adjs.begin(), adjs.end(), rng);
    std::shuffle(nouns.begin(), nouns.end(), rng);
    for (std::size_t t = 0; t < half; ++t) {
      const bool positive = labels[t];
      const std::size_t k = nouns[t];
      Key key = positive ? Key{k, adjs[t], k}
                         : draw_unique(used, [&] { return Key{other_noun(k), adjs[t], k}; });
      if (positive) used.insert(key);
      out.train.push_back(render(key, positive));
    }
    for (std::size_t t = half; t < config.train; ++t) out.train.push_back(random_sample(labels[t]));
    std::shuffle(out.train.begin(), out.train.end(), rng);
  }
  for (auto [count, dest] : {std::pair{config.validation, &out.validation},
                             std::pair{config.test, &out.test}}) {
    for (bool positive : balanced_labels(count, rng)) dest->push_back(random_sample(positive));
  }
  return out;
}

RawSplit gen_numbers(const NumbersConfig& config) {
  if (config.lo < 1000 || config.hi > 9999 || config.lo >= config.hi)
    throw DataError("numbers range must satisfy 1000 <= lo < hi <= 9999");
  const auto range = static_cast<std::size_t>(config.hi - config.lo + 1);
  const std::size_t pairs_per_label = range * (range - 1) / 2;
  const std::size_t want_pos = positives_in(config.train) + positives_in(config.validation) +
                               positives_in(config.test);
  const std::size_t total = config.train + config.validation + config.test;
  if (want_pos > pairs_per_label || total - want_pos > pairs_per_label)
    throw DataError("numbers: requested more distinct pairs than the range allows");

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> pick(config.lo, config.hi);
  std::set<std::pair<int, int>> used;

  auto digits = [](int value) {
    std::vector<std::string> out;
    for (char ch : std::to_string(value)) out.emplace_back(1, ch);
    return words(std::move(out));
  };
  auto make = [&](bool positive) {
    const auto [a, b] = draw_unique(used, [&] {
      int x = pick(rng);
      int y = pick(rng);
      while (y == x) y = pick(rng);
      if ((x < y) != positive) std::swap(x, y);
      return std::pair{x, y};
    });
    return RawSample{digits(a), digits(b), positive ? Label::Entailment : Label::NonEntailment};
  };

  RawSplit out;
  for (auto [count, dest] : {std::pair{config.train, &out.train},
                             std::pair{config.validation, &out.validation},
                             std::pair{config.test, &out.test}}) {
    for (bool positive : balanced_labels(count, rng)) dest->push_back(make(positive));
  }
  return out;
}

namespace {

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string bracketed(const RawSentence& s) {
  if (s.tokens.size() == 1) return s.tokens.front();
  return "( " + join(s.tokens) + " )";
}

}  // namespace

void write_samples(std::ostream& out, const std::vector<RawSample>& samples, DataFormat format) {
  for (const auto& s : samples) {
    if (format == DataFormat::Tsv) {
      out << join(s.premise.tokens) << '\t' << join(s.hypothesis.tokens) << '\t'
          << label_string(s.label) << '\n';
    } else {
      json record;
      record["premise_binary_parse"] = bracketed(s.premise);
      record["hypothesis_binary_parse"] = bracketed(s.hypothesis);
      record["gold_label"] = std::string(label_string(s.label));
      out << record.dump() << '\n';
    }
  }
}

void write_samples(const std::filesystem::path& path, const std::vector<RawSample>& samples,
                   DataFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_samples(out, samples, format);
}

}  // namespace hypersent
