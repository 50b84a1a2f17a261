#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nfc/commands.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string fusion;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "text";
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_fusion) {
  cmd->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  if (with_fusion) cmd->add_option("--fusion", f.fusion, "fusion scheme")->check(CLI::IsMember({"cp", "tucker"}));
  cmd->add_option("--seed", f.seed, "root random seed (overrides the config)");
  cmd->add_option("--out", f.out, "output directory (overrides the config)");
  cmd->add_option("--format", f.format, "report format")->check(CLI::IsMember({"text", "machine"}));
}

nfc::RunConfig resolve(const CommonFlags& f) {
  nfc::RunConfig cfg = f.config.empty() ? nfc::RunConfig{} : nfc::load_run_config(f.config);
  if (!f.fusion.empty()) cfg.set_fusion(nfc::parse_fusion(f.fusion));
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out.empty()) cfg.out_dir = f.out;
  cfg.finalize();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural factorization classifiers for vibration fault diagnosis"};
  app.require_subcommand(1);

  CommonFlags gen_flags, train_flags, eval_flags, feat_flags, grad_flags;

  auto* gen = app.add_subcommand("gen-data", "write synthetic recordings and a manifest");
  add_common(gen, gen_flags, false);

  auto* train = app.add_subcommand("train", "train an NFC model and write checkpoint, history and report");
  add_common(train, train_flags, true);
  std::optional<std::size_t> epochs;
  train->add_option("--epochs", epochs, "override train.epochs");

  auto* eval = app.add_subcommand("eval", "score a checkpoint on the configured test split");
  add_common(eval, eval_flags, false);
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "checkpoint written by train")->required()->check(CLI::ExistingFile);

  auto* grad = app.add_subcommand("gradcheck", "verify analytic gradients against finite differences");
  add_common(grad, grad_flags, true);
  std::string corrupt;
  grad->add_option("--corrupt", corrupt, "scale this tensor's analytic gradient by 1.1 (fault injection)");

  auto* feat = app.add_subcommand("features", "export time-domain features; optionally fit baselines");
  add_common(feat, feat_flags, false);
  bool baselines = false;
  feat->add_flag("--baselines", baselines, "train logistic regression and MLP baselines");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto cfg = resolve(gen_flags);
      nfc::cmd_gen_data(cfg, cfg.out_dir, std::cout);
    } else if (*train) {
      auto cfg = resolve(train_flags);
      if (epochs) cfg.train.epochs = *epochs;
      nfc::cmd_train(cfg, std::cout, nfc::parse_output_format(train_flags.format));
    } else if (*eval) {
      const auto cfg = resolve(eval_flags);
      nfc::cmd_eval(cfg, checkpoint, std::cout, nfc::parse_output_format(eval_flags.format));
    } else if (*grad) {
      nfc::GradcheckCommandOptions opt;
      if (!grad_flags.fusion.empty()) opt.fusions = {nfc::parse_fusion(grad_flags.fusion)};
      if (grad_flags.seed) opt.seed = *grad_flags.seed;
      if (!corrupt.empty()) opt.corrupt_tensor = corrupt;
      return nfc::cmd_gradcheck(opt, std::cout, nfc::parse_output_format(grad_flags.format));
    } else if (*feat) {
      const auto cfg = resolve(feat_flags);
      nfc::cmd_features(cfg, baselines, std::cout, nfc::parse_output_format(feat_flags.format));
    }
  } catch (const nfc::Error& e) {
    std::cerr << "nfc: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
