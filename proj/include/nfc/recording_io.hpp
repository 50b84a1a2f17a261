#pragma once

// Recording ingest and export.
//
//   CSV:          header line `amplitude`, then one float per line.
//   float-binary: raw little-endian IEEE-754 doubles, count = file size / 8.
//
// Both are listed by a JSON manifest next to the data files:
//
//   {"format": "csv",
//    "recordings": [{"file": "inner_000.csv", "label": "inner", "sample_rate": 12000}]}
//
// Paths inside the manifest are relative to the manifest's directory.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "signal.hpp"

namespace nfc {

enum class RecordingFormat { Csv, FloatBinary };

inline std::string_view format_name(RecordingFormat f) {
  return f == RecordingFormat::Csv ? "csv" : "float-binary";
}

inline RecordingFormat parse_format(std::string_view s) {
  if (s == "csv") return RecordingFormat::Csv;
  if (s == "float-binary") return RecordingFormat::FloatBinary;
  throw DataError("unknown recording format '" + std::string(s) + "' (expected csv or float-binary)");
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(out);
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

/// Reads a single-column CSV. Data rows are numbered from 1 after the header.
inline std::vector<double> read_csv_samples(std::istream& in, const std::string& origin = "<stream>") {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "amplitude") {
    throw ParseError(origin + ": expected header 'amplitude' on line 1");
  }
  std::vector<double> values;
  std::vector<std::size_t> blank_rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) {
      blank_rows.push_back(row);
      continue;
    }
    if (!blank_rows.empty()) {
      throw ParseError(origin + ": empty cell at row " + std::to_string(blank_rows.front()) + " (line " +
                       std::to_string(blank_rows.front() + 1) + ")");
    }
    double v = 0.0;
    if (!detail::parse_double(line, v)) {
      throw ParseError(origin + ": non-numeric value '" + std::string(detail::trim(line)) + "' at row " +
                       std::to_string(row) + " (line " + std::to_string(row + 1) + ")");
    }
    values.push_back(v);
  }
  return values;
}

inline std::vector<double> read_csv_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_csv_samples(in, path.string());
}

inline std::vector<double> read_float_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % sizeof(double) != 0) {
    throw ParseError(path.string() + ": size " + std::to_string(bytes.size()) +
                     " is not a multiple of 8; trailing partial value at offset " +
                     std::to_string(bytes.size() - bytes.size() % sizeof(double)));
  }
  std::vector<double> values(bytes.size() / sizeof(double));
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t raw = 0;
    std::memcpy(&raw, bytes.data() + i * sizeof(double), sizeof(raw));
    if constexpr (std::endian::native == std::endian::big) raw = __builtin_bswap64(raw);
    values[i] = std::bit_cast<double>(raw);
    if (!std::isfinite(values[i])) {
      throw ParseError(path.string() + ": non-finite value at offset " + std::to_string(i * sizeof(double)));
    }
  }
  return values;
}

inline void write_csv_samples(const std::filesystem::path& path, const std::vector<double>& samples) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "amplitude\n";
  for (double v : samples) out << detail::format_double(v) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

inline void write_float_binary(const std::filesystem::path& path, const std::vector<double>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (double v : samples) {
    auto raw = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) raw = __builtin_bswap64(raw);
    out.write(reinterpret_cast<const char*>(&raw), sizeof(raw));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::vector<RawRecording> load_recordings(const std::filesystem::path& manifest_path,
                                                 RecordingFormat format) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("recordings") || !manifest["recordings"].is_array()) {
    throw ParseError(manifest_path.string() + ": missing 'recordings' array");
  }

  const auto base = manifest_path.parent_path();
  std::vector<RawRecording> out;
  std::size_t index = 0;
  for (const auto& entry : manifest["recordings"]) {
    const std::string where = manifest_path.string() + ": recordings[" + std::to_string(index++) + "]";
    if (!entry.is_object() || !entry.contains("file") || !entry.contains("label") ||
        !entry.contains("sample_rate") || !entry["file"].is_string() || !entry["label"].is_string() ||
        !entry["sample_rate"].is_number()) {
      throw ParseError(where + " needs string 'file', string 'label' and numeric 'sample_rate'");
    }
    RawRecording rec;
    rec.label = parse_label(entry["label"].get<std::string>());
    rec.sample_rate = entry["sample_rate"].get<double>();
    const auto file = base / entry["file"].get<std::string>();
    rec.samples = format == RecordingFormat::Csv ? read_csv_samples(file) : read_float_binary(file);
    rec.validate();
    out.push_back(std::move(rec));
  }
  return out;
}

/// Uses the manifest's own "format" field (csv when absent).
inline std::vector<RawRecording> load_recordings(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());
  RecordingFormat format = RecordingFormat::Csv;
  try {
    const auto manifest = nlohmann::json::parse(in);
    if (manifest.contains("format")) format = parse_format(manifest["format"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
  return load_recordings(manifest_path, format);
}

/// Writes one file per recording as `<label>_<nnn>.<ext>` plus manifest.json.
/// Returns the manifest path.
inline std::filesystem::path write_recordings(const std::filesystem::path& dir,
                                              const std::vector<RawRecording>& recordings,
                                              RecordingFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::array<std::size_t, kNumClasses> per_class{};
  nlohmann::json list = nlohmann::json::array();
  for (const auto& rec : recordings) {
    auto& n = per_class[static_cast<std::size_t>(label_index(rec.label))];
    std::ostringstream name;
    name << label_name(rec.label) << '_' << std::setw(3) << std::setfill('0') << n++
         << (format == RecordingFormat::Csv ? ".csv" : ".bin");
    const auto file = dir / name.str();
    if (format == RecordingFormat::Csv) {
      write_csv_samples(file, rec.samples);
    } else {
      write_float_binary(file, rec.samples);
    }
    list.push_back({{"file", name.str()}, {"label", label_name(rec.label)}, {"sample_rate", rec.sample_rate}});
  }

  const auto manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot write " + manifest_path.string());
  out << nlohmann::json{{"format", format_name(format)}, {"recordings", list}}.dump(2) << '\n';
  return manifest_path;
}

}  // namespace nfc
