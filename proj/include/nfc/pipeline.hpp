#pragma once

// End-to-end data preparation and NFC training:
//   load or synthesize -> window -> stratified split -> standardize -> train

#include <cstdint>
#include <string>
#include <vector>

#include "config.hpp"
#include "model.hpp"
#include "random.hpp"
#include "recording_io.hpp"
#include "signal.hpp"
#include "training.hpp"

namespace nfc {

/// `per_class` recordings of every class; recording i of each class draws
/// from the synthesis substream "synthesis:<i>" of the root seed.
inline std::vector<RawRecording> synthesize_recordings(SynthConfig cfg, std::size_t per_class, std::uint64_t root_seed) {
  std::vector<RawRecording> out;
  for (ClassLabel c : kAllLabels) {
    for (std::size_t i = 0; i < per_class; ++i) {
      cfg.seed = substream_seed(root_seed, std::string(streams::kSynthesis) + ":" + std::to_string(i));
      out.push_back(generate_synthetic(cfg, c));
    }
  }
  return out;
}

inline std::vector<RawRecording> build_recordings(const RunConfig& cfg) {
  if (cfg.data.manifest) return load_recordings(*cfg.data.manifest, cfg.data.format);
  return synthesize_recordings(cfg.synth, cfg.data.recordings_per_class, cfg.seed);
}

/// Windows every recording; segments are ordered by (recording, offset).
inline std::vector<SignalSegment> segment_recordings(const std::vector<RawRecording>& recordings, std::size_t window,
                                                     double overlap) {
  std::vector<SignalSegment> out;
  for (std::size_t r = 0; r < recordings.size(); ++r) {
    auto segs = window_signal(recordings[r], window, overlap, r);
    out.insert(out.end(), std::make_move_iterator(segs.begin()), std::make_move_iterator(segs.end()));
  }
  return out;
}

struct PreparedData {
  SplitDataset split;          // standardized
  SplitDataset raw_split;      // before standardization
  Standardizer standardizer;   // fitted on the training side only
};

inline PreparedData prepare_split(const std::vector<SignalSegment>& segments, double test_fraction, std::uint64_t seed) {
  PreparedData p;
  p.raw_split = stratified_split(segments, test_fraction, seed);
  p.standardizer = fit_standardizer(std::span<const SignalSegment>(p.raw_split.train));
  p.split.seed = seed;
  p.split.train = apply_standardizer(p.standardizer, p.raw_split.train);
  p.split.test = apply_standardizer(p.standardizer, p.raw_split.test);
  return p;
}

inline PreparedData prepare_data(const RunConfig& cfg) {
  const auto segments = segment_recordings(build_recordings(cfg), cfg.data.window, cfg.data.overlap);
  if (segments.empty()) throw DataError("no recording is long enough for one window");
  return prepare_split(segments, cfg.data.test_fraction, cfg.seed);
}

/// Trains `model` in place on the split's training side, evaluating on its test side.
inline TrainHistory train(NfcModel& model, const SplitDataset& data, const TrainConfig& cfg) {
  if (cfg.epochs > 0 && data.train.empty()) throw ParameterError("training set is empty");
  return train_classifier(model, to_labeled(data.train), to_labeled(data.test), cfg, model.arch.num_classes);
}

}  // namespace nfc
