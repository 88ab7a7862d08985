// Copyright 2026 The conceptsteer Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// File formats shared by the pipeline stages.
//
// Binary containers (activations "ACTV", layers "LAYR") and label files
// ("LBLV") share a 24-byte little-endian header:
//
//     offset  size  field
//          0     4  magic
//          4     4  u32 version (= 1)
//          8     8  u64 rows
//         16     8  u64 cols
//
// followed by rows*cols IEEE-754 binary64 values in row-major order (labels:
// rows*cols bytes, each 0 or 1). A layer file stores weight (rows = output
// dim, cols = input dim) and then `rows` bias values.
//
// Transforms and moment summaries are JSON documents whose numbers are
// printed with 17 significant digits, so doubles round-trip exactly.

#include <nlohmann/json.hpp>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "conceptsteer/errors.hpp"
#include "conceptsteer/linalg.hpp"
#include "conceptsteer/moments.hpp"
#include "conceptsteer/transforms.hpp"

namespace conceptsteer::io {

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 24;
inline constexpr std::string_view kActivationMagic = "ACTV";
inline constexpr std::string_view kLabelMagic = "LBLV";
inline constexpr std::string_view kLayerMagic = "LAYR";

namespace detail {

inline void putU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void putU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void putF64(std::string& out, double v) {
  putU64(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint64_t getU64(std::string_view bytes, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) {
    v = (v << 8) | static_cast<unsigned char>(bytes[at + static_cast<std::size_t>(i)]);
  }
  return v;
}

inline std::uint32_t getU32(std::string_view bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) {
    v = (v << 8) | static_cast<unsigned char>(bytes[at + static_cast<std::size_t>(i)]);
  }
  return v;
}

inline double getF64(std::string_view bytes, std::size_t at) {
  return std::bit_cast<double>(getU64(bytes, at));
}

inline std::string header(std::string_view magic, std::uint64_t rows,
                          std::uint64_t cols) {
  std::string out(magic);
  putU32(out, kFormatVersion);
  putU64(out, rows);
  putU64(out, cols);
  return out;
}

struct Header {
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
};

/// Validates magic, version and exact payload length.
inline Header parseHeader(std::string_view bytes, std::string_view magic,
                          std::uint64_t element_size,
                          std::uint64_t extra_elements_per_row = 0) {
  if (bytes.size() < magic.size()) {
    throw Error(Errc::TruncatedHeader, "file shorter than its magic");
  }
  if (bytes.substr(0, magic.size()) != magic) {
    throw Error(Errc::BadMagic, "expected magic \"" + std::string(magic) + "\"");
  }
  if (bytes.size() < kHeaderBytes) {
    throw Error(Errc::TruncatedHeader,
                "header needs " + std::to_string(kHeaderBytes) + " bytes");
  }
  const std::uint32_t version = getU32(bytes, 4);
  if (version != kFormatVersion) {
    throw Error(Errc::VersionUnsupported, "version " + std::to_string(version));
  }
  Header h{getU64(bytes, 8), getU64(bytes, 16)};
  // rows * (cols + extra) * element_size, refusing to overflow.
  const std::uint64_t per_row = h.cols + extra_elements_per_row;
  if (per_row < h.cols ||
      (h.rows != 0 && per_row > UINT64_MAX / element_size / h.rows)) {
    throw Error(Errc::TruncatedPayload, "declared payload size overflows");
  }
  const std::uint64_t want = h.rows * per_row * element_size;
  const std::uint64_t have = bytes.size() - kHeaderBytes;
  if (have < want) {
    throw Error(Errc::TruncatedPayload, "payload has " + std::to_string(have) +
                                            " bytes, header declares " +
                                            std::to_string(want));
  }
  if (have > want) {
    throw Error(Errc::TrailingData, std::to_string(have - want) +
                                        " bytes after declared payload");
  }
  return h;
}

inline Matrix readRowMajor(std::string_view bytes, std::size_t offset,
                           Index rows, Index cols) {
  Matrix m(rows, cols);
  std::size_t at = offset;
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j, at += 8) {
      const double v = getF64(bytes, at);
      if (!std::isfinite(v)) {
        throw Error(Errc::NonFiniteValue, "entry (" + std::to_string(i) + ", " +
                                              std::to_string(j) + ")");
      }
      m(i, j) = v;
    }
  }
  return m;
}

inline void writeRowMajor(std::string& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) putF64(out, m(i, j));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Raw file access

inline std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

inline void writeFile(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot create " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "short write to " + path);
}

// ---------------------------------------------------------------------------
// Activations

inline std::string encodeActivations(const Matrix& m) {
  requireFinite(m, "activations");
  std::string out = detail::header(kActivationMagic, static_cast<std::uint64_t>(m.rows()),
                                   static_cast<std::uint64_t>(m.cols()));
  out.reserve(kHeaderBytes + static_cast<std::size_t>(m.size()) * 8);
  detail::writeRowMajor(out, m);
  return out;
}

inline Matrix decodeActivations(std::string_view bytes) {
  const auto h = detail::parseHeader(bytes, kActivationMagic, 8);
  return detail::readRowMajor(bytes, kHeaderBytes, static_cast<Index>(h.rows),
                              static_cast<Index>(h.cols));
}

inline void writeActivations(const Matrix& m, const std::string& path) {
  writeFile(path, encodeActivations(m));
}

inline Matrix readActivations(const std::string& path) {
  return decodeActivations(readFile(path));
}

/// CSV import: a header row "x0,x1,...,x{d-1}" then one sample per line.
inline Matrix parseActivationsCsv(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty()) throw Error(Errc::MalformedDocument, "CSV has no header");

  auto split = [](std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t s = 0;
    while (true) {
      const std::size_t comma = line.find(',', s);
      cells.push_back(line.substr(s, comma == std::string_view::npos
                                         ? std::string_view::npos
                                         : comma - s));
      if (comma == std::string_view::npos) break;
      s = comma + 1;
    }
    return cells;
  };
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
  };

  const auto head = split(lines[0]);
  const Index d = static_cast<Index>(head.size());
  for (Index j = 0; j < d; ++j) {
    if (trim(head[static_cast<std::size_t>(j)]) != "x" + std::to_string(j)) {
      throw Error(Errc::MalformedDocument,
                  "CSV header must be x0,...,x" + std::to_string(d - 1));
    }
  }
  Matrix m(static_cast<Index>(lines.size() - 1), d);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split(lines[r]);
    if (static_cast<Index>(cells.size()) != d) {
      throw Error(Errc::MalformedDocument,
                  "CSV line " + std::to_string(r + 1) + " has " +
                      std::to_string(cells.size()) + " fields, expected " +
                      std::to_string(d));
    }
    for (Index j = 0; j < d; ++j) {
      const std::string_view cell = trim(cells[static_cast<std::size_t>(j)]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw Error(Errc::MalformedDocument,
                    "CSV line " + std::to_string(r + 1) + ": bad number '" +
                        std::string(cell) + "'");
      }
      if (!std::isfinite(v)) {
        throw Error(Errc::NonFiniteValue, "CSV line " + std::to_string(r + 1));
      }
      m(static_cast<Index>(r - 1), j) = v;
    }
  }
  return m;
}

inline Matrix readActivationsCsv(const std::string& path) {
  return parseActivationsCsv(readFile(path));
}

/// Reads a binary activation file, or CSV when the path ends in ".csv".
inline Matrix readActivationsAny(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) {
    return readActivationsCsv(path);
  }
  return readActivations(path);
}

// ---------------------------------------------------------------------------
// Labels

inline std::string encodeLabels(const ConceptLabels& labels) {
  const LabelMatrix& z = labels.indicators();
  std::string out = detail::header(kLabelMagic, static_cast<std::uint64_t>(z.rows()),
                                   static_cast<std::uint64_t>(z.cols()));
  out.append(reinterpret_cast<const char*>(z.data()), static_cast<std::size_t>(z.size()));
  return out;
}

inline ConceptLabels decodeLabels(std::string_view bytes) {
  const auto h = detail::parseHeader(bytes, kLabelMagic, 1);
  LabelMatrix z(static_cast<Index>(h.rows), static_cast<Index>(h.cols));
  if (z.size() > 0) std::memcpy(z.data(), bytes.data() + kHeaderBytes, static_cast<std::size_t>(z.size()));
  return ConceptLabels(std::move(z));
}

inline void writeLabels(const ConceptLabels& labels, const std::string& path) {
  writeFile(path, encodeLabels(labels));
}

inline ConceptLabels readLabels(const std::string& path) {
  return decodeLabels(readFile(path));
}

// ---------------------------------------------------------------------------
// Linear layers

inline std::string encodeLayer(const LinearLayer& layer) {
  if (layer.bias.size() != layer.weight.rows()) {
    throw Error(Errc::DimensionMismatch, "layer bias length != output dim");
  }
  requireFinite(layer.weight, "layer weight");
  requireFinite(layer.bias, "layer bias");
  std::string out = detail::header(kLayerMagic, static_cast<std::uint64_t>(layer.weight.rows()),
                                   static_cast<std::uint64_t>(layer.weight.cols()));
  detail::writeRowMajor(out, layer.weight);
  for (Index i = 0; i < layer.bias.size(); ++i) detail::putF64(out, layer.bias(i));
  return out;
}

inline LinearLayer decodeLayer(std::string_view bytes) {
  const auto h = detail::parseHeader(bytes, kLayerMagic, 8, 1);
  const auto rows = static_cast<Index>(h.rows);
  const auto cols = static_cast<Index>(h.cols);
  LinearLayer layer;
  layer.weight = detail::readRowMajor(bytes, kHeaderBytes, rows, cols);
  layer.bias = detail::readRowMajor(
      bytes, kHeaderBytes + static_cast<std::size_t>(rows * cols) * 8, rows, 1);
  return layer;
}

inline void writeLayer(const LinearLayer& layer, const std::string& path) {
  writeFile(path, encodeLayer(layer));
}

inline LinearLayer readLayer(const std::string& path) {
  return decodeLayer(readFile(path));
}

// ---------------------------------------------------------------------------
// JSON documents

namespace detail {

/// %.17g, with ".0" appended to integral values so that the parser keeps
/// them as doubles (and -0.0 keeps its sign).
inline std::string number(double v) {
  if (!std::isfinite(v)) {
    throw Error(Errc::NonFiniteValue, "cannot serialize a non-finite number");
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

inline std::string vectorText(const Vector& v) {
  std::string out = "[";
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += number(v(i));
  }
  return out + "]";
}

inline std::string matrixText(const Matrix& m, const std::string& indent) {
  std::string out = "[";
  for (Index i = 0; i < m.rows(); ++i) {
    out += i ? ",\n" : "\n";
    out += indent + "  " + vectorText(m.row(i).transpose());
  }
  if (m.rows()) out += "\n" + indent;
  return out + "]";
}

inline nlohmann::json parseJson(std::string_view text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedDocument, e.what());
  }
}

inline void requireFormat(const nlohmann::json& doc, std::string_view format) {
  if (!doc.is_object() || !doc.contains("format") ||
      doc["format"] != std::string(format)) {
    throw Error(Errc::BadMagic, "document format is not " + std::string(format));
  }
  if (!doc.contains("version") || !doc["version"].is_number_integer() ||
      doc["version"].get<std::int64_t>() != kFormatVersion) {
    throw Error(Errc::VersionUnsupported, "unsupported document version");
  }
}

inline const nlohmann::json& field(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) {
    throw Error(Errc::MalformedDocument, std::string("missing field \"") + key + "\"");
  }
  return doc[key];
}

inline double toNumber(const nlohmann::json& j, const char* what) {
  if (!j.is_number()) {
    throw Error(Errc::MalformedDocument, std::string(what) + " is not a number");
  }
  return j.get<double>();
}

inline Vector toVector(const nlohmann::json& j, const char* what,
                       std::optional<Index> length = std::nullopt) {
  if (!j.is_array()) {
    throw Error(Errc::MalformedDocument, std::string(what) + " is not an array");
  }
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = toNumber(j[i], what);
  if (length && v.size() != *length) {
    throw Error(Errc::DimensionMismatch, std::string(what) + " has length " +
                                             std::to_string(v.size()));
  }
  return v;
}

inline Matrix toMatrix(const nlohmann::json& j, const char* what, Index rows,
                       Index cols) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows) {
    throw Error(Errc::DimensionMismatch, std::string(what) + " must have " +
                                             std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    m.row(i) = toVector(j[static_cast<std::size_t>(i)], what, cols).transpose();
  }
  return m;
}

inline Index toCount(const nlohmann::json& j, const char* what) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) {
    throw Error(Errc::MalformedDocument,
                std::string(what) + " must be a non-negative integer");
  }
  return static_cast<Index>(j.get<std::int64_t>());
}

}  // namespace detail

inline constexpr std::string_view kTransformFormat = "conceptsteer-transform";
inline constexpr std::string_view kMomentsFormat = "conceptsteer-moments";

struct TransformDocument {
  AffineTransform transform;
  // For directed maps: how many leading label columns form the source block.
  std::optional<Index> source_columns;
};

inline std::string encodeTransform(const TransformDocument& doc) {
  const AffineTransform& t = doc.transform;
  if (t.a.rows() != t.a.cols() || t.b.size() != t.a.rows()) {
    throw Error(Errc::DimensionMismatch, "transform A must be d x d and b length d");
  }
  std::string out = "{\n";
  out += "  \"format\": \"" + std::string(kTransformFormat) + "\",\n";
  out += "  \"version\": " + std::to_string(kFormatVersion) + ",\n";
  out += "  \"dim\": " + std::to_string(t.dim()) + ",\n";
  out += "  \"mode\": \"" + std::string(modeName(t.mode)) + "\",\n";
  out += "  \"beta\": " + detail::number(t.strength) + ",\n";
  if (doc.source_columns) {
    out += "  \"source_columns\": " + std::to_string(*doc.source_columns) + ",\n";
  }
  out += "  \"provenance\": " + nlohmann::json(t.provenance).dump() + ",\n";
  out += "  \"A\": " + detail::matrixText(t.a, "  ") + ",\n";
  out += "  \"b\": " + detail::vectorText(t.b) + "\n";
  out += "}\n";
  return out;
}

inline TransformDocument decodeTransform(std::string_view text) {
  const nlohmann::json doc = detail::parseJson(text);
  detail::requireFormat(doc, kTransformFormat);
  TransformDocument out;
  AffineTransform& t = out.transform;
  const Index d = detail::toCount(detail::field(doc, "dim"), "dim");
  const auto& mode = detail::field(doc, "mode");
  const auto parsed = mode.is_string() ? parseMode(mode.get<std::string>()) : std::nullopt;
  if (!parsed) throw Error(Errc::MalformedDocument, "unknown transform mode");
  t.mode = *parsed;
  t.strength = detail::toNumber(detail::field(doc, "beta"), "beta");
  if (doc.contains("provenance")) {
    if (!doc["provenance"].is_string()) {
      throw Error(Errc::MalformedDocument, "provenance must be a string");
    }
    t.provenance = doc["provenance"].get<std::string>();
  }
  if (doc.contains("source_columns")) {
    out.source_columns = detail::toCount(doc["source_columns"], "source_columns");
  }
  t.a = detail::toMatrix(detail::field(doc, "A"), "A", d, d);
  t.b = detail::toVector(detail::field(doc, "b"), "b", d);
  return out;
}

inline void writeTransform(const TransformDocument& doc, const std::string& path) {
  writeFile(path, encodeTransform(doc));
}

inline TransformDocument readTransform(const std::string& path) {
  return decodeTransform(readFile(path));
}

struct SteeringRecord {
  Index column = 0;
  Vector raw_difference;
  double positive_fraction = 0.0;
};

/// Output of the estimation stage (or exact population moments of a
/// synthetic world). cov_xx / cov_xz are present only if estimated.
struct MomentsDocument {
  Index dim = 0;
  bool population = false;
  Index sample_count = 0;
  Vector mean;
  std::optional<Matrix> cov_xx;
  Index label_sample_count = 0;
  std::optional<Matrix> cov_xz;  // d x k
  std::optional<Index> source_columns;
  Vector positive_fraction;  // k
  std::vector<SteeringRecord> steering;
};

inline std::string encodeMoments(const MomentsDocument& doc) {
  std::string out = "{\n";
  out += "  \"format\": \"" + std::string(kMomentsFormat) + "\",\n";
  out += "  \"version\": " + std::to_string(kFormatVersion) + ",\n";
  out += "  \"dim\": " + std::to_string(doc.dim) + ",\n";
  out += "  \"population\": " + std::string(doc.population ? "true" : "false") + ",\n";
  out += "  \"sample_count\": " + std::to_string(doc.sample_count) + ",\n";
  out += "  \"mean\": " + detail::vectorText(doc.mean) + ",\n";
  if (doc.cov_xx) out += "  \"cov_xx\": " + detail::matrixText(*doc.cov_xx, "  ") + ",\n";
  if (doc.cov_xz) {
    out += "  \"label_sample_count\": " + std::to_string(doc.label_sample_count) + ",\n";
    out += "  \"label_dim\": " + std::to_string(doc.cov_xz->cols()) + ",\n";
    if (doc.source_columns) {
      out += "  \"source_columns\": " + std::to_string(*doc.source_columns) + ",\n";
    }
    out += "  \"cov_xz\": " + detail::matrixText(*doc.cov_xz, "  ") + ",\n";
    out += "  \"positive_fraction\": " + detail::vectorText(doc.positive_fraction) + ",\n";
  }
  out += "  \"steering\": [";
  for (std::size_t i = 0; i < doc.steering.size(); ++i) {
    const SteeringRecord& s = doc.steering[i];
    out += i ? ",\n" : "\n";
    out += "    {\"column\": " + std::to_string(s.column) +
           ", \"positive_fraction\": " + detail::number(s.positive_fraction) +
           ", \"raw_difference\": " + detail::vectorText(s.raw_difference) + "}";
  }
  out += doc.steering.empty() ? "]\n" : "\n  ]\n";
  out += "}\n";
  return out;
}

inline MomentsDocument decodeMoments(std::string_view text) {
  const nlohmann::json doc = detail::parseJson(text);
  detail::requireFormat(doc, kMomentsFormat);
  MomentsDocument out;
  out.dim = detail::toCount(detail::field(doc, "dim"), "dim");
  const Index d = out.dim;
  if (doc.contains("population")) {
    if (!doc["population"].is_boolean()) {
      throw Error(Errc::MalformedDocument, "population must be a boolean");
    }
    out.population = doc["population"].get<bool>();
  }
  out.sample_count = detail::toCount(detail::field(doc, "sample_count"), "sample_count");
  out.mean = detail::toVector(detail::field(doc, "mean"), "mean", d);
  if (doc.contains("cov_xx")) out.cov_xx = detail::toMatrix(doc["cov_xx"], "cov_xx", d, d);
  if (doc.contains("cov_xz")) {
    const Index k = detail::toCount(detail::field(doc, "label_dim"), "label_dim");
    out.label_sample_count =
        detail::toCount(detail::field(doc, "label_sample_count"), "label_sample_count");
    out.cov_xz = detail::toMatrix(doc["cov_xz"], "cov_xz", d, k);
    out.positive_fraction =
        detail::toVector(detail::field(doc, "positive_fraction"), "positive_fraction", k);
    if (doc.contains("source_columns")) {
      out.source_columns = detail::toCount(doc["source_columns"], "source_columns");
    }
  }
  if (doc.contains("steering")) {
    if (!doc["steering"].is_array()) {
      throw Error(Errc::MalformedDocument, "steering must be an array");
    }
    for (const auto& s : doc["steering"]) {
      SteeringRecord rec;
      rec.column = detail::toCount(detail::field(s, "column"), "column");
      rec.positive_fraction =
          detail::toNumber(detail::field(s, "positive_fraction"), "positive_fraction");
      rec.raw_difference = detail::toVector(detail::field(s, "raw_difference"),
                                            "raw_difference", d);
      out.steering.push_back(std::move(rec));
    }
  }
  return out;
}

inline void writeMoments(const MomentsDocument& doc, const std::string& path) {
  writeFile(path, encodeMoments(doc));
}

inline MomentsDocument readMoments(const std::string& path) {
  return decodeMoments(readFile(path));
}

}  // namespace conceptsteer::io
