#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hypersent/checkpoint.hpp"
#include "hypersent/config.hpp"
#include "hypersent/data.hpp"
#include "hypersent/gradcheck.hpp"
#include "hypersent/metrics.hpp"
#include "hypersent/trainer.hpp"

namespace fs = std::filesystem;
using namespace hypersent;

namespace {

constexpr int kUsageError = 1;
constexpr int kNumericalError = 2;

// Failures caused by the invocation rather than the numbers.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunFlags {
  std::string model = "MS_FFNN";
  RunConfig config;
};

void add_run_flags(CLI::App& app, RunFlags& f) {
  RunConfig& c = f.config;
  app.add_option("--model", f.model, "MS, MS_FFNN, MA_FFNN, LMS, RMS, LMS_FFNN, RMS_FFNN, EA_FFNN, ES_FFNN")
      ->capture_default_str();
  app.add_option("--dim", c.dim, "embedding dimension")->capture_default_str();
  app.add_option("--curvature", c.curvature, "ball curvature c")->capture_default_str();
  app.add_option("--classes", c.classes, "2 or 3")->capture_default_str();
  app.add_option("--features", c.features, "comma-separated feature blocks");
  app.add_option("--lr", c.lr, "learning rate")->capture_default_str();
  app.add_option("--epochs", c.epochs)->capture_default_str();
  app.add_option("--alpha", c.alpha, "margin")->capture_default_str();
  app.add_option("--beta", c.beta, "distance weight in the energy")->capture_default_str();
  app.add_option("--seed", c.seed)->capture_default_str();
  app.add_option("--hidden", c.hidden, "FFNN hidden units")->capture_default_str();
  app.add_option("--init-scale", c.init_scale)->capture_default_str();
  app.add_option("--disentangle-epochs", c.disentangle_epochs)->capture_default_str();
  app.add_option("--negatives", c.negatives)->capture_default_str();
  app.add_option("--val-fraction", c.val_fraction)->capture_default_str();
  app.add_option("--clip", c.clip, "max embedding gradient norm per row (0: off)")
      ->capture_default_str();
}

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

// Supplies options missing from the command line from key=value lines;
// '#' starts a comment.
void apply_config_file(CLI::App& app, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = path + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw UsageError(where + "expected key=value");
    const std::string key = trim(line.substr(0, eq));
    CLI::Option* opt = key == "config" ? nullptr : app.get_option_no_throw("--" + key);
    if (!opt) throw UsageError(where + "unknown key '" + key + "'");
    if (opt->count() > 0) continue;
    opt->add_result(trim(line.substr(eq + 1)));
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError(where + e.what());
    }
  }
}

RunConfig resolve(RunFlags& f) {
  RunConfig c = f.config;
  c.model = parse_model_kind(f.model);
  c.validate();
  return c;
}

DataFormat format_for(const std::string& flag, const fs::path& path) {
  return flag.empty() ? guess_data_format(path) : parse_data_format(flag);
}

void write_json(const nlohmann::json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw UsageError("cannot write " + out);
  f << j.dump(2) << '\n';
}

void write_split(const RawSplit& split, const fs::path& dir, DataFormat format) {
  fs::create_directories(dir);
  const std::string ext = format == DataFormat::Jsonl ? ".jsonl" : ".tsv";
  write_samples(dir / ("train" + ext), split.train, format);
  write_samples(dir / ("val" + ext), split.validation, format);
  write_samples(dir / ("test" + ext), split.test, format);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperbolic sentence composition for textual entailment"};
  app.require_subcommand(1);

  // gen-adjnoun
  AdjNounConfig adj;
  std::string adj_out = "adjnoun", adj_format = "tsv";
  auto* gen_adj = app.add_subcommand("gen-adjnoun", "generate the adjective-noun dataset");
  gen_adj->add_option("--vocab-size", adj.vocab_size)->capture_default_str();
  gen_adj->add_option("--train-size", adj.train)->capture_default_str();
  gen_adj->add_option("--val-size", adj.validation)->capture_default_str();
  gen_adj->add_option("--test-size", adj.test)->capture_default_str();
  gen_adj->add_option("--seed", adj.seed)->capture_default_str();
  gen_adj->add_option("--format", adj_format, "tsv or jsonl")->capture_default_str();
  gen_adj->add_option("--out", adj_out, "output directory")->capture_default_str();

  // gen-numbers
  NumbersConfig num;
  std::string num_out = "numbers", num_format = "tsv";
  auto* gen_num = app.add_subcommand("gen-numbers", "generate the number comparison dataset");
  gen_num->add_option("--lo", num.lo)->capture_default_str();
  gen_num->add_option("--hi", num.hi)->capture_default_str();
  gen_num->add_option("--train-size", num.train)->capture_default_str();
  gen_num->add_option("--val-size", num.validation)->capture_default_str();
  gen_num->add_option("--test-size", num.test)->capture_default_str();
  gen_num->add_option("--seed", num.seed)->capture_default_str();
  gen_num->add_option("--format", num_format, "tsv or jsonl")->capture_default_str();
  gen_num->add_option("--out", num_out, "output directory")->capture_default_str();

  // train
  RunFlags train_flags;
  std::string train_path, val_path, test_path, train_format, train_out = "run";
  auto* train_cmd = app.add_subcommand("train", "train a model");
  std::string train_config;
  add_run_flags(*train_cmd, train_flags);
  train_cmd->add_option("--config", train_config, "key=value file supplying any flag");
  train_cmd->add_option("--train", train_path, "training data (required)");
  train_cmd->add_option("--val", val_path);
  train_cmd->add_option("--test", test_path);
  train_cmd->add_option("--format", train_format, "tsv or jsonl (default: by extension)");
  train_cmd->add_option("--out", train_out, "output directory")->capture_default_str();

  // eval
  std::string eval_ckpt, eval_data, eval_format, eval_out;
  std::optional<std::size_t> eval_dim;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--data,--test", eval_data)->required();
  eval_cmd->add_option("--format", eval_format);
  eval_cmd->add_option("--dim", eval_dim, "expected embedding dimension");
  eval_cmd->add_option("--out", eval_out, "report file (default: stdout)");

  // gradcheck
  RunFlags gc_flags;
  gc_flags.config.dim = 0;
  GradcheckOptions gc;
  bool gc_all = false;
  std::string gc_out;
  auto* gc_cmd = app.add_subcommand("gradcheck", "compare analytic and numerical gradients");
  gc_cmd->add_option("--model", gc_flags.model)->capture_default_str();
  gc_cmd->add_option("--dim", gc.dim, "0 draws a dimension per trial")->capture_default_str();
  gc_cmd->add_option("--features", gc_flags.config.features);
  gc_cmd->add_option("--seed", gc.seed)->capture_default_str();
  gc_cmd->add_option("--trials", gc.trials)->capture_default_str();
  gc_cmd->add_flag("--all", gc_all, "every composition/loss/feature combination");
  gc_cmd->add_option("--out", gc_out, "report file (default: stdout)");
  gc_cmd->add_flag("--corrupt-gradient", gc.corrupt)->group("");
  std::string gc_config;
  gc_cmd->add_option("--config", gc_config, "key=value file supplying any flag");

  // norms
  std::string norms_ckpt, norms_out;
  std::size_t bins = 20;
  auto* norms_cmd = app.add_subcommand("norms", "embedding norm histogram as CSV");
  norms_cmd->add_option("--checkpoint", norms_ckpt)->required();
  norms_cmd->add_option("--bins", bins)->capture_default_str();
  norms_cmd->add_option("--out", norms_out, "CSV file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : kUsageError;
  }

  try {
    if (*gen_adj) {
      write_split(gen_adjnoun(adj), adj_out, parse_data_format(adj_format));
    } else if (*gen_num) {
      write_split(gen_numbers(num), num_out, parse_data_format(num_format));
    } else if (*train_cmd) {
      if (!train_config.empty()) apply_config_file(*train_cmd, train_config);
      if (train_path.empty()) throw UsageError("--train is required");
      const RunConfig config = resolve(train_flags);
      DataPaths paths{train_path, std::nullopt, std::nullopt};
      if (!val_path.empty()) paths.validation = val_path;
      if (!test_path.empty()) paths.test = test_path;
      const DatasetSplit data = load_dataset(paths, format_for(train_format, train_path),
                                             config.classes, config.val_fraction, config.seed);
      fs::create_directories(train_out);
      std::ofstream log(fs::path(train_out) / "metrics.jsonl");
      if (!log) throw UsageError("cannot write to " + train_out);
      const TrainResult result = train(config, data, {&log});
      save_checkpoint(result.best, fs::path(train_out) / "checkpoint.json");
      const EpochRecord& best = result.history[result.best.best_epoch];
      nlohmann::json summary = to_json(best, config.seed);
      summary["best_epoch"] = result.best.best_epoch;
      summary["steps"] = result.steps;
      std::cout << summary.dump() << '\n';
      if (result.ball_violations > 0) {
        std::cerr << "error: " << result.ball_violations << " embeddings left the ball\n";
        return kNumericalError;
      }
    } else if (*eval_cmd) {
      const Model model = load_checkpoint(eval_ckpt);
      if (eval_dim && *eval_dim != model.config.dim)
        throw UsageError("checkpoint dim " + std::to_string(model.config.dim) +
                         " does not match --dim " + std::to_string(*eval_dim));
      const LoadResult loaded =
          load_samples(eval_data, format_for(eval_format, eval_data), model.config.classes);
      if (loaded.samples.empty()) throw UsageError(eval_data + " contains no labelled samples");
      std::vector<Sample> samples;
      for (const RawSample& r : loaded.samples) samples.push_back(to_sample(r, model.vocab));
      nlohmann::json report = to_json(evaluate_model(model, samples));
      report["samples"] = samples.size();
      report["skipped"] = loaded.skipped;
      write_json(report, eval_out);
    } else if (*gc_cmd) {
      if (!gc_config.empty()) apply_config_file(*gc_cmd, gc_config);
      if (gc.dim > gc.max_dim)
        throw UsageError("gradcheck dims are limited to " + std::to_string(gc.max_dim));
      std::vector<GradcheckCase> cases;
      if (gc_all) {
        cases = default_cases();
      } else {
        RunConfig c = gc_flags.config;
        c.model = parse_model_kind(gc_flags.model);
        c.dim = gc.dim == 0 ? 2 : gc.dim;
        c.validate();
        if (has_ffnn(c.model))
          cases.push_back({composition_of(c.model), LossKind::CrossEntropy, c.feature_spec().to_string()});
        else
          cases.push_back({composition_of(c.model), LossKind::Margin, {}});
      }
      const GradcheckReport report = run_gradcheck(cases, gc);
      write_json(to_json(report), gc_out);
      if (!report.passed()) {
        std::cerr << "error: max relative error " << report.max_error << " >= " << gc.tolerance
                  << '\n';
        return kNumericalError;
      }
    } else if (*norms_cmd) {
      if (bins == 0) throw UsageError("--bins must be positive");
      const Model model = load_checkpoint(norms_ckpt);
      const std::string csv = histogram_csv(norm_histogram(model.embeddings, model.space(), bins));
      if (norms_out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream f(norms_out);
        if (!f) throw UsageError("cannot write " + norms_out);
        f << csv;
      }
    }
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return 0;
}
