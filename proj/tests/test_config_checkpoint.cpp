#include <gtest/gtest.h>

#include <fstream>

#include "nfc/checkpoint.hpp"
#include "nfc/config.hpp"
#include "test_helpers.hpp"

using namespace nfc;
using nlohmann::json;

TEST(Config, DefaultsWhenEmpty) {
  RunConfig c = parse_run_config(json::object());
  c.finalize();
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.arch.fusion, FusionKind::Tucker);
  EXPECT_EQ(c.arch.embed_dims, (std::vector<std::size_t>{16, 16}));
  EXPECT_EQ(c.arch.input_len, 1024u);
  EXPECT_EQ(c.train.learning_rate, 1e-4);
  EXPECT_EQ(c.train.batch_size, 32u);
  EXPECT_EQ(c.train.epochs, 100u);
  EXPECT_EQ(c.train.seed, 42u);
  EXPECT_EQ(c.data.overlap, 0.5);
  EXPECT_EQ(c.data.test_fraction, 0.2);
}

TEST(Config, ParsesNestedSections) {
  const auto j = json::parse(R"({
    "seed": 7,
    "data": {"window": 256, "overlap": 0.25, "recordings_per_class": 2},
    "synth": {"noise_sigma": 0.3},
    "train": {"epochs": 12, "scheduler": {"patience": 3}, "adam": {"beta1": 0.8}},
    "arch": {"fusion": "cp", "hidden": [16], "dropout": 0.1},
    "output": {"dir": "somewhere"}
  })");
  RunConfig c = parse_run_config(j);
  c.finalize();
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.arch.input_len, 256u);
  EXPECT_EQ(c.arch.fusion, FusionKind::Cp);
  EXPECT_EQ(c.arch.embed_dims, (std::vector<std::size_t>{32, 32}));
  EXPECT_EQ(c.arch.hidden, (std::vector<std::size_t>{16}));
  EXPECT_EQ(c.synth.noise_sigma, 0.3);
  EXPECT_EQ(c.train.epochs, 12u);
  EXPECT_EQ(c.train.scheduler.patience, 3u);
  EXPECT_EQ(c.train.adam.beta1, 0.8);
  EXPECT_EQ(c.out_dir, "somewhere");
}

TEST(Config, UnknownKeysAndBadTypesRejected) {
  EXPECT_THROW(parse_run_config(json::parse(R"({"sede": 1})")), ConfigError);
  EXPECT_THROW(parse_run_config(json::parse(R"({"train": {"lr": 1}})")), ConfigError);
  EXPECT_THROW(parse_run_config(json::parse(R"({"train": {"epochs": "ten"}})")), ConfigError);
  RunConfig c = parse_run_config(json::parse(R"({"data": {"overlap": 1.0}})"));
  EXPECT_THROW(c.finalize(), Error);
}

TEST(Config, ManifestResolvedAgainstConfigDirectory) {
  const auto dir = nfc_test::scratch_dir("cfg");
  std::ofstream(dir / "run.json") << R"({"data": {"manifest": "data/manifest.json"}})";
  const RunConfig c = load_run_config(dir / "run.json");
  ASSERT_TRUE(c.data.manifest.has_value());
  EXPECT_EQ(*c.data.manifest, dir / "data/manifest.json");
}

namespace {
NfcModel trained_looking_model(FusionKind kind) {
  ArchConfig a = ArchConfig::defaults(kind);
  a.input_len = 32;
  a.embed_dims = kind == FusionKind::Cp ? std::vector<std::size_t>{5, 5} : std::vector<std::size_t>{3, 4};
  a.hidden = {7, 6};
  NfcModel m = init_model(a, 99);
  double x = 0.1;
  m.for_each_parameter([&](const std::string&, const auto&, std::span<double> v) {
    for (double& p : v) p += (x *= 1.37) > 10 ? (x = 0.013) : x / 3.0;
  });
  for (auto& b : m.head.blocks) {
    for (double& v : b.running_mean) v = 1.0 / 3.0;
    for (double& v : b.running_var) v = 2.0 / 7.0;
  }
  return m;
}
}  // namespace

TEST(Checkpoint, RoundTripIsExact) {
  for (FusionKind kind : {FusionKind::Cp, FusionKind::Tucker}) {
    const NfcModel m = trained_looking_model(kind);
    const Standardizer s{0.1 + 0.2, 1.0 / 3.0};
    const auto dir = nfc_test::scratch_dir(std::string(fusion_name(kind)));
    save_checkpoint(dir / "a.json", m, s);
    const Checkpoint back = load_checkpoint(dir / "a.json");
    EXPECT_EQ(back.model.arch, m.arch);
    EXPECT_EQ(back.standardizer.mean, s.mean);
    EXPECT_EQ(back.standardizer.std, s.std);
    const auto ga = to_gradient_set(m), gb = to_gradient_set(back.model);
    ASSERT_EQ(ga.tensors.size(), gb.tensors.size());
    for (std::size_t t = 0; t < ga.tensors.size(); ++t) EXPECT_EQ(ga.tensors[t].values, gb.tensors[t].values);
    for (std::size_t n = 0; n < m.head.blocks.size(); ++n) {
      EXPECT_EQ(back.model.head.blocks[n].running_mean, m.head.blocks[n].running_mean);
      EXPECT_EQ(back.model.head.blocks[n].running_var, m.head.blocks[n].running_var);
    }
    save_checkpoint(dir / "b.json", back.model, back.standardizer);
    EXPECT_EQ(nfc_test::slurp(dir / "a.json"), nfc_test::slurp(dir / "b.json"));
  }
}

TEST(Checkpoint, MalformedInputRejected) {
  const auto dir = nfc_test::scratch_dir("bad");
  const NfcModel m = trained_looking_model(FusionKind::Cp);
  auto j = checkpoint_to_json(m, {});
  j["parameters"][2]["name"] = "fusion.core";
  EXPECT_THROW(checkpoint_from_json(j), ParseError);
  j = checkpoint_to_json(m, {});
  j["version"] = 2;
  EXPECT_THROW(checkpoint_from_json(j), ParseError);
  j = checkpoint_to_json(m, {});
  j.erase("buffers");
  EXPECT_THROW(checkpoint_from_json(j), ParseError);
  std::ofstream(dir / "x.json") << "{not json";
  EXPECT_THROW(load_checkpoint(dir / "x.json"), ParseError);
  EXPECT_THROW(load_checkpoint(dir / "missing.json"), IoError);
}
