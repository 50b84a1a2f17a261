#pragma once

// Implementations of the command-line subcommands. Each writes its artifacts
// under the configured output directory and reports to `out`.

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "baselines.hpp"
#include "checkpoint.hpp"
#include "config.hpp"
#include "features.hpp"
#include "gradcheck.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "pipeline.hpp"
#include "recording_io.hpp"
#include "training.hpp"

namespace nfc {

enum class OutputFormat { Text, Machine };

inline OutputFormat parse_output_format(std::string_view s) {
  if (s == "text") return OutputFormat::Text;
  if (s == "machine") return OutputFormat::Machine;
  throw ParameterError("unknown output format '" + std::string(s) + "' (expected text or machine)");
}

inline std::vector<std::string> class_names() {
  std::vector<std::string> out;
  for (ClassLabel c : kAllLabels) out.emplace_back(label_name(c));
  return out;
}

namespace detail {

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

inline void write_report_files(const std::filesystem::path& dir, const std::string& stem, const EvalReport& r) {
  write_text(dir / (stem + ".json"), to_json(r).dump(2) + "\n");
  const auto names = class_names();
  write_text(dir / (stem + ".txt"), format_text(r, names));
}

inline void print_report(std::ostream& out, const EvalReport& r, OutputFormat format) {
  if (format == OutputFormat::Machine) {
    out << to_json(r).dump() << '\n';
  } else {
    const auto names = class_names();
    out << format_text(r, names);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Writes `recordings_per_class` synthetic recordings per class plus a manifest.
inline std::filesystem::path cmd_gen_data(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out) {
  const auto recordings = synthesize_recordings(cfg.synth, cfg.data.recordings_per_class, cfg.seed);
  const auto manifest = write_recordings(out_dir, recordings, cfg.data.format);
  out << "wrote " << recordings.size() << " recordings and " << manifest.string() << '\n';
  return manifest;
}

struct TrainOutputs {
  std::filesystem::path checkpoint;
  std::filesystem::path history;
  std::filesystem::path report;
  TrainHistory history_records;
  EvalReport eval;
};

/// Full pipeline: data -> split -> standardize -> train -> evaluate -> save.
inline TrainOutputs cmd_train(const RunConfig& cfg, std::ostream& out, OutputFormat format = OutputFormat::Text) {
  const PreparedData data = prepare_data(cfg);
  NfcModel model = init_model(cfg.arch, cfg.seed);
  TrainOutputs res;
  res.history_records = train(model, data.split, cfg.train);

  const LabeledData test = to_labeled(data.split.test.empty() ? data.split.train : data.split.test);
  res.eval = evaluate_model(model, test, model.arch.num_classes).report;

  detail::ensure_dir(cfg.out_dir);
  res.checkpoint = cfg.out_dir / "checkpoint.json";
  res.history = cfg.out_dir / "history.csv";
  res.report = cfg.out_dir / "report.json";
  save_checkpoint(res.checkpoint, model, data.standardizer);
  {
    std::ofstream h(res.history);
    if (!h) throw IoError("cannot write " + res.history.string());
    write_history_csv(h, res.history_records);
  }
  detail::write_report_files(cfg.out_dir, "report", res.eval);

  if (format == OutputFormat::Text) {
    out << fusion_name(model.arch.fusion) << "-NFC: " << data.split.train.size() << " train / "
        << data.split.test.size() << " test segments, " << parameter_count(model) << " parameters, "
        << cfg.train.epochs << " epochs\n";
  }
  detail::print_report(out, res.eval, format);
  return res;
}

/// Re-derives the test split from the config and scores the checkpoint on it.
inline EvalReport cmd_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint_path, std::ostream& out,
                           OutputFormat format = OutputFormat::Text) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  if (ck.model.arch.input_len != cfg.data.window) {
    throw ConfigError("checkpoint expects windows of " + std::to_string(ck.model.arch.input_len) +
                      " samples but data.window is " + std::to_string(cfg.data.window));
  }
  const auto segments = segment_recordings(build_recordings(cfg), cfg.data.window, cfg.data.overlap);
  const SplitDataset raw = stratified_split(segments, cfg.data.test_fraction, cfg.seed);
  const auto& side = raw.test.empty() ? raw.train : raw.test;
  const LabeledData test = to_labeled(apply_standardizer(ck.standardizer, side));
  const EvalReport report = evaluate_model(ck.model, test, ck.model.arch.num_classes).report;

  detail::ensure_dir(cfg.out_dir);
  detail::write_report_files(cfg.out_dir, "eval_report", report);
  detail::print_report(out, report, format);
  return report;
}

struct GradcheckCommandOptions {
  std::vector<FusionKind> fusions{FusionKind::Cp, FusionKind::Tucker};
  std::vector<RunMode> modes{RunMode::Eval, RunMode::Train};
  std::optional<std::string> corrupt_tensor;
  std::uint64_t seed = 0;
};

/// Small gradient-check architecture: L=16, CP R=4 / Tucker P=Q=3, head [8, 6].
inline ArchConfig gradcheck_arch(FusionKind kind) {
  ArchConfig a;
  a.fusion = kind;
  a.input_len = 16;
  a.embed_dims = kind == FusionKind::Cp ? std::vector<std::size_t>{4, 4} : std::vector<std::size_t>{3, 3};
  a.hidden = {8, 6};
  a.dropout = 0.3;
  a.num_classes = kNumClasses;
  return a;
}

/// Random standard-normal batch with labels cycling through every class.
inline LabeledData gradcheck_batch(std::size_t rows, std::size_t width, std::uint64_t seed) {
  Rng rng = make_rng(seed, "gradcheck-batch");
  std::normal_distribution<double> n(0.0, 1.0);
  LabeledData d;
  d.x = Matrix(rows, width);
  for (double& v : d.x.values()) v = n(rng);
  for (std::size_t i = 0; i < rows; ++i) d.y.push_back(static_cast<int>(i % kNumClasses));
  return d;
}

/// Returns the process exit status: 0 when every check passes.
inline int cmd_gradcheck(const GradcheckCommandOptions& opt, std::ostream& out, OutputFormat format = OutputFormat::Text) {
  bool all_pass = true;
  nlohmann::json machine = nlohmann::json::array();
  for (FusionKind kind : opt.fusions) {
    const NfcModel model = init_model(gradcheck_arch(kind), opt.seed);
    const LabeledData batch = gradcheck_batch(8, model.arch.input_len, opt.seed);
    for (RunMode mode : opt.modes) {
      GradCheckOptions o;
      o.mode = mode;
      o.dropout_seed = opt.seed;
      o.corrupt_tensor = opt.corrupt_tensor;
      const auto report = check_model(model, batch.x, batch.y, o);
      all_pass = all_pass && report.pass;
      const char* mode_name = mode == RunMode::Train ? "train" : "eval";
      if (format == OutputFormat::Text) {
        out << "== " << fusion_name(kind) << "-NFC, " << mode_name << " mode ==\n" << format_text(report) << '\n';
      } else {
        nlohmann::json tensors = nlohmann::json::array();
        for (const auto& e : report.entries) {
          tensors.push_back({{"name", e.name}, {"size", e.count}, {"max_rel_error", e.max_rel_error}, {"pass", e.pass}});
        }
        machine.push_back({{"fusion", fusion_name(kind)},
                           {"mode", mode_name},
                           {"global_max", report.global_max},
                           {"tolerance", report.tolerance},
                           {"pass", report.pass},
                           {"tensors", tensors}});
      }
    }
  }
  if (format == OutputFormat::Machine) out << machine.dump() << '\n';
  return all_pass ? 0 : 1;
}

struct FeaturesOutputs {
  std::filesystem::path train_csv;
  std::filesystem::path test_csv;
  std::optional<std::vector<RankedRow>> ranking;
};

namespace detail {
inline std::vector<ClassLabel> labels_of(const std::vector<SignalSegment>& segs) {
  std::vector<ClassLabel> out;
  for (const auto& s : segs) out.push_back(s.label);
  return out;
}

inline LabeledData feature_data(const Matrix& x, const std::vector<SignalSegment>& segs) {
  LabeledData d{x, {}};
  for (const auto& s : segs) d.y.push_back(label_index(s.label));
  return d;
}
}  // namespace detail

/// Exports the 12-feature matrices; with `baselines` also fits the logistic
/// and MLP baselines and prints them ranked against the published rows.
inline FeaturesOutputs cmd_features(const RunConfig& cfg, bool baselines, std::ostream& out,
                                    OutputFormat format = OutputFormat::Text) {
  const PreparedData data = prepare_data(cfg);
  const Matrix train_raw = feature_matrix(data.split.train);
  const Matrix test_raw = feature_matrix(data.split.test);

  detail::ensure_dir(cfg.out_dir);
  FeaturesOutputs res{cfg.out_dir / "features_train.csv", cfg.out_dir / "features_test.csv", std::nullopt};
  {
    std::ofstream f(res.train_csv);
    if (!f) throw IoError("cannot write " + res.train_csv.string());
    write_feature_csv(f, train_raw, detail::labels_of(data.split.train));
    std::ofstream g(res.test_csv);
    if (!g) throw IoError("cannot write " + res.test_csv.string());
    write_feature_csv(g, test_raw, detail::labels_of(data.split.test));
  }
  if (format == OutputFormat::Text) {
    out << "wrote " << res.train_csv.string() << " (" << train_raw.rows() << " rows) and " << res.test_csv.string()
        << " (" << test_raw.rows() << " rows)\n";
  }
  if (!baselines) return res;

  const auto scalers = fit_feature_standardizers(train_raw);
  const LabeledData train = detail::feature_data(apply_feature_standardizers(scalers, train_raw), data.split.train);
  const LabeledData test = detail::feature_data(apply_feature_standardizers(scalers, test_raw), data.split.test);
  const LabeledData& scored = test.size() > 0 ? test : train;

  LogisticConfig lc;
  lc.seed = cfg.seed;
  const LinearClassifier lr = train_logistic(train.x, train.y, 1e-3, lc);
  const EvalReport lr_report = evaluate(confusion(scored.y, predict(lr, scored.x), kNumClasses));

  auto mlp = train_mlp_baseline(train, test, cfg.train);
  const EvalReport mlp_report = evaluate(confusion(scored.y, predict(mlp.model, scored.x), kNumClasses));

  std::vector<ScoreRow> rows = {score_row("LR (this run)", lr_report), score_row("MLP (this run)", mlp_report)};
  for (auto& r : benchmark_reference_rows()) rows.push_back(r);
  res.ranking = comparative_report(rows);
  detail::write_text(cfg.out_dir / "baselines.json", to_json(*res.ranking).dump(2) + "\n");
  if (format == OutputFormat::Text) {
    out << format_ranking(*res.ranking);
  } else {
    out << to_json(*res.ranking).dump() << '\n';
  }
  return res;
}

}  // namespace nfc
