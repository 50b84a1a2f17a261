#pragma once

// Run configuration (JSON). Every section and key is optional; anything not
// listed below is rejected rather than ignored.
//
//   {
//     "seed": 42,
//     "data":   {"manifest": "data/manifest.json", "format": "csv",
//                "recordings_per_class": 1, "window": 1024, "overlap": 0.5,
//                "test_fraction": 0.2},
//     "synth":  {"sample_rate": 12000, "duration": 5.4, "noise_sigma": 0.15,
//                "inner_freq": 162, "outer_freq": 107, "ball_freq": 141,
//                "resonance_freq": 2800, "decay_rate": 700, "impulse_amplitude": 1},
//     "train":  {"learning_rate": 1e-4, "batch_size": 32, "epochs": 100,
//                "scheduler": {"factor": 0.5, "patience": 10, "min_lr": 1e-6, "threshold": 1e-8},
//                "adam": {"beta1": 0.9, "beta2": 0.999, "eps": 1e-8}},
//     "arch":   {"fusion": "tucker", "embed_dims": [16, 16], "hidden": [64, 32], "dropout": 0.3},
//     "output": {"dir": "runs/default"}
//   }

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "model.hpp"
#include "recording_io.hpp"
#include "signal.hpp"
#include "training.hpp"

namespace nfc {

struct DataConfig {
  std::optional<std::filesystem::path> manifest;  // synthetic data when absent
  RecordingFormat format = RecordingFormat::Csv;
  std::size_t recordings_per_class = 1;
  std::size_t window = kDefaultWindow;
  double overlap = kDefaultOverlap;
  double test_fraction = kDefaultTestFraction;
};

struct RunConfig {
  std::uint64_t seed = 42;
  DataConfig data;
  SynthConfig synth;
  TrainConfig train;
  ArchConfig arch = ArchConfig::defaults(FusionKind::Tucker);
  bool embed_dims_explicit = false;
  std::filesystem::path out_dir = "runs/default";

  /// Switches fusion; embedding sizes follow the fusion's defaults unless set explicitly.
  void set_fusion(FusionKind kind) {
    arch.fusion = kind;
    if (!embed_dims_explicit) arch.embed_dims = ArchConfig::defaults(kind).embed_dims;
  }

  /// Propagates the root seed and window length into the sub-configs.
  void finalize() {
    train.seed = seed;
    arch.input_len = data.window;
    arch.num_classes = kNumClasses;
    synth.validate();
    train.validate();
    arch.validate();
    window_stride(data.window, data.overlap);
    if (!(data.test_fraction >= 0.0 && data.test_fraction < 1.0)) throw ConfigError("data.test_fraction must lie in [0, 1)");
    if (data.recordings_per_class == 0) throw ConfigError("data.recordings_per_class must be positive");
  }
};

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("'" + section + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown key '" + (section.empty() ? key : section + "." + key) + "'");
  }
}

template <class T>
void read_key(const nlohmann::json& j, const std::string& section, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("'" + section + "." + key + "' has the wrong type");
  }
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  using detail::read_key;
  using detail::require_keys;
  RunConfig c;
  require_keys(j, "", {"seed", "data", "synth", "train", "arch", "output"});
  read_key(j, "", "seed", c.seed);

  if (j.contains("data")) {
    const auto& d = j["data"];
    require_keys(d, "data", {"manifest", "format", "recordings_per_class", "window", "overlap", "test_fraction"});
    if (d.contains("manifest")) {
      std::string m;
      read_key(d, "data", "manifest", m);
      c.data.manifest = m;
    }
    if (d.contains("format")) {
      std::string f;
      read_key(d, "data", "format", f);
      c.data.format = parse_format(f);
    }
    read_key(d, "data", "recordings_per_class", c.data.recordings_per_class);
    read_key(d, "data", "window", c.data.window);
    read_key(d, "data", "overlap", c.data.overlap);
    read_key(d, "data", "test_fraction", c.data.test_fraction);
  }

  if (j.contains("synth")) {
    const auto& s = j["synth"];
    require_keys(s, "synth", {"sample_rate", "duration", "noise_sigma", "inner_freq", "outer_freq", "ball_freq",
                              "resonance_freq", "decay_rate", "impulse_amplitude"});
    read_key(s, "synth", "sample_rate", c.synth.sample_rate);
    read_key(s, "synth", "duration", c.synth.duration);
    read_key(s, "synth", "noise_sigma", c.synth.noise_sigma);
    read_key(s, "synth", "inner_freq", c.synth.inner_freq);
    read_key(s, "synth", "outer_freq", c.synth.outer_freq);
    read_key(s, "synth", "ball_freq", c.synth.ball_freq);
    read_key(s, "synth", "resonance_freq", c.synth.resonance_freq);
    read_key(s, "synth", "decay_rate", c.synth.decay_rate);
    read_key(s, "synth", "impulse_amplitude", c.synth.impulse_amplitude);
  }

  if (j.contains("train")) {
    const auto& t = j["train"];
    require_keys(t, "train", {"learning_rate", "batch_size", "epochs", "scheduler", "adam"});
    read_key(t, "train", "learning_rate", c.train.learning_rate);
    read_key(t, "train", "batch_size", c.train.batch_size);
    read_key(t, "train", "epochs", c.train.epochs);
    if (t.contains("scheduler")) {
      const auto& s = t["scheduler"];
      require_keys(s, "train.scheduler", {"factor", "patience", "min_lr", "threshold"});
      read_key(s, "train.scheduler", "factor", c.train.scheduler.factor);
      read_key(s, "train.scheduler", "patience", c.train.scheduler.patience);
      read_key(s, "train.scheduler", "min_lr", c.train.scheduler.min_lr);
      read_key(s, "train.scheduler", "threshold", c.train.scheduler.threshold);
    }
    if (t.contains("adam")) {
      const auto& a = t["adam"];
      require_keys(a, "train.adam", {"beta1", "beta2", "eps"});
      read_key(a, "train.adam", "beta1", c.train.adam.beta1);
      read_key(a, "train.adam", "beta2", c.train.adam.beta2);
      read_key(a, "train.adam", "eps", c.train.adam.eps);
    }
  }

  if (j.contains("arch")) {
    const auto& a = j["arch"];
    require_keys(a, "arch", {"fusion", "embed_dims", "hidden", "dropout"});
    if (a.contains("embed_dims")) {
      read_key(a, "arch", "embed_dims", c.arch.embed_dims);
      c.embed_dims_explicit = true;
    }
    if (a.contains("fusion")) {
      std::string f;
      read_key(a, "arch", "fusion", f);
      c.set_fusion(parse_fusion(f));
    }
    read_key(a, "arch", "hidden", c.arch.hidden);
    read_key(a, "arch", "dropout", c.arch.dropout);
  }

  if (j.contains("output")) {
    const auto& o = j["output"];
    require_keys(o, "output", {"dir"});
    std::string dir = c.out_dir.string();
    read_key(o, "output", "dir", dir);
    c.out_dir = dir;
  }
  return c;
}

/// Relative manifest paths are resolved against the config file's directory.
inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  RunConfig c = parse_run_config(j);
  if (c.data.manifest && c.data.manifest->is_relative()) c.data.manifest = path.parent_path() / *c.data.manifest;
  return c;
}

}  // namespace nfc
