#pragma once

// Versioned JSON checkpoint:
//
//   {"format": "nfc-checkpoint", "version": 1,
//    "arch": {...}, "standardizer": {"mean": m, "std": s},
//    "parameters": [{"name", "shape", "values"}, ...],   // declared order
//    "buffers":    [{"name", "values"}, ...]}            // batch-norm running stats
//
// Doubles are written in shortest round-trip form, so save/load is exact and
// repeated saves of the same model are byte-identical.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "model.hpp"
#include "signal.hpp"

namespace nfc {

inline constexpr const char* kCheckpointFormat = "nfc-checkpoint";
inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json arch_to_json(const ArchConfig& a) {
  return {{"fusion", fusion_name(a.fusion)}, {"input_len", a.input_len}, {"embed_dims", a.embed_dims},
          {"hidden", a.hidden},              {"dropout", a.dropout},     {"num_classes", a.num_classes}};
}

inline ArchConfig arch_from_json(const nlohmann::json& j) {
  ArchConfig a;
  a.fusion = parse_fusion(j.at("fusion").get<std::string>());
  a.input_len = j.at("input_len").get<std::size_t>();
  a.embed_dims = j.at("embed_dims").get<std::vector<std::size_t>>();
  a.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  a.dropout = j.at("dropout").get<double>();
  a.num_classes = j.at("num_classes").get<std::size_t>();
  a.validate();
  return a;
}

struct Checkpoint {
  NfcModel model;
  Standardizer standardizer;
};

inline nlohmann::json checkpoint_to_json(const NfcModel& model, const Standardizer& s) {
  nlohmann::json params = nlohmann::json::array();
  model.for_each_parameter(
      [&](const std::string& name, const std::vector<std::size_t>& shape, std::span<const double> v) {
        params.push_back({{"name", name}, {"shape", shape}, {"values", std::vector<double>(v.begin(), v.end())}});
      });
  nlohmann::json buffers = nlohmann::json::array();
  for (std::size_t n = 0; n < model.head.blocks.size(); ++n) {
    const auto& b = model.head.blocks[n];
    buffers.push_back({{"name", "block" + std::to_string(n) + ".running_mean"}, {"values", b.running_mean}});
    buffers.push_back({{"name", "block" + std::to_string(n) + ".running_var"}, {"values", b.running_var}});
  }
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"arch", arch_to_json(model.arch)},
          {"standardizer", {{"mean", s.mean}, {"std", s.std}}},
          {"parameters", params},
          {"buffers", buffers}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) throw ParseError("not an nfc checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));

    Checkpoint c;
    c.model = init_model(arch_from_json(j.at("arch")), 0);
    c.standardizer.mean = j.at("standardizer").at("mean").get<double>();
    c.standardizer.std = j.at("standardizer").at("std").get<double>();

    const auto& params = j.at("parameters");
    std::size_t k = 0;
    c.model.for_each_parameter([&](const std::string& name, const std::vector<std::size_t>& shape, std::span<double> v) {
      if (k >= params.size()) throw ParseError("checkpoint is missing parameter '" + name + "'");
      const auto& p = params[k++];
      if (p.at("name").get<std::string>() != name || p.at("shape").get<std::vector<std::size_t>>() != shape) {
        throw ParseError("checkpoint parameter " + std::to_string(k - 1) + " does not match '" + name + "'");
      }
      const auto values = p.at("values").get<std::vector<double>>();
      if (values.size() != v.size()) throw ParseError("parameter '" + name + "' has the wrong length");
      std::copy(values.begin(), values.end(), v.begin());
    });
    if (k != params.size()) throw ParseError("checkpoint has unexpected extra parameters");

    const auto& buffers = j.at("buffers");
    if (buffers.size() != 2 * c.model.head.blocks.size()) throw ParseError("checkpoint buffer count mismatch");
    for (std::size_t n = 0; n < c.model.head.blocks.size(); ++n) {
      auto& b = c.model.head.blocks[n];
      b.running_mean = buffers[2 * n].at("values").get<std::vector<double>>();
      b.running_var = buffers[2 * n + 1].at("values").get<std::vector<double>>();
      if (b.running_mean.size() != b.out() || b.running_var.size() != b.out()) {
        throw ParseError("running statistics of block " + std::to_string(n) + " have the wrong length");
      }
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const std::filesystem::path& path, const NfcModel& model, const Standardizer& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << checkpoint_to_json(model, s).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace nfc
