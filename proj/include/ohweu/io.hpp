// Copyright 2026 The OHWEU Authors.
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

// On-disk formats. All binary integers and floats are little-endian.
//
//   FeatureFile  "OHWF" u32 version, u32 N, u32 D, N*D f32 row-major
//   LabelFile    text; "C=<classes>" then one line of class indices per point
//   ModelBundle  "OHWB" u32 version, config, hash stage, L, P, R, counters
//   IndexFile    "OHWI" u32 version, codes, projected codes, P snapshot

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ohweu/core.hpp"
#include "ohweu/index.hpp"
#include "ohweu/pipeline.hpp"

namespace ohweu::io {

constexpr std::uint32_t kFeatureFormatVersion = 1;
constexpr std::uint32_t kBundleFormatVersion = 1;
constexpr std::uint32_t kIndexFormatVersion = 1;

// ---------------------------------------------------------------------------
// Byte buffers
// ---------------------------------------------------------------------------

class ByteWriter {
 public:
  void magic(std::string_view m) { buf_.append(m); }
  void u32(std::uint32_t v) { put_le(v); }
  void u64(std::uint64_t v) { put_le(v); }
  void i32(std::int32_t v) { put_le(static_cast<std::uint32_t>(v)); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }

  void matrix(const Eigen::MatrixXd& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) f64(m(r, c));
  }
  void vector(const Eigen::VectorXd& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }

  const std::string& bytes() const noexcept { return buf_; }

 private:
  template <typename U>
  void put_le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
  }
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string data, std::string what) : data_(std::move(data)), what_(std::move(what)) {}

  void expect_magic(std::string_view m) {
    need(m.size());
    if (std::string_view(data_).substr(pos_, m.size()) != m) {
      fail("bad magic, expected \"" + std::string(m) + "\"");
    }
    pos_ += m.size();
  }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  std::int32_t i32() { return static_cast<std::int32_t>(get_le<std::uint32_t>()); }
  float f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }

  Eigen::MatrixXd matrix() {
    const auto rows = u64();
    const auto cols = u64();
    if (cols != 0 && rows > remaining() / 8 / cols) fail("matrix larger than file");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = f64();
    return m;
  }
  Eigen::VectorXd vector() {
    const auto n = u64();
    if (n > remaining() / 8) fail("vector larger than file");
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f64();
    return v;
  }

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  void expect_end() {
    if (remaining() != 0) fail(std::to_string(remaining()) + " trailing bytes");
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(what_ + ": " + msg);
  }

 private:
  void need(std::size_t n) {
    if (remaining() < n) fail("unexpected end of file");
  }
  template <typename U>
  U get_le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }

  std::string data_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Write to a sibling temp file, then rename over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw FormatError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// FeatureFile
// ---------------------------------------------------------------------------

inline std::string encode_features(const Eigen::Ref<const FeatureMatrix>& features) {
  detail::require(features.rows() <= std::numeric_limits<std::uint32_t>::max() &&
                      features.cols() <= std::numeric_limits<std::uint32_t>::max(),
                  "feature matrix too large for the file format");
  ByteWriter w;
  w.magic("OHWF");
  w.u32(kFeatureFormatVersion);
  w.u32(static_cast<std::uint32_t>(features.rows()));
  w.u32(static_cast<std::uint32_t>(features.cols()));
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    for (Eigen::Index j = 0; j < features.cols(); ++j)
      w.f32(static_cast<float>(features(i, j)));
  return w.bytes();
}

inline FeatureMatrix decode_features(std::string bytes, const std::string& what) {
  ByteReader r(std::move(bytes), what);
  r.expect_magic("OHWF");
  const auto version = r.u32();
  if (version != kFeatureFormatVersion) r.fail("unsupported version " + std::to_string(version));
  const std::uint64_t n = r.u32();
  const std::uint64_t d = r.u32();
  if (r.remaining() != n * d * 4) {
    r.fail("payload is " + std::to_string(r.remaining()) + " bytes, expected N*D*4 = " +
           std::to_string(n * d * 4));
  }
  FeatureMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const float v = r.f32();
      if (!std::isfinite(v)) r.fail("non-finite value at row " + std::to_string(i));
      x(i, j) = v;
    }
  }
  return x;
}

inline void write_features(const std::filesystem::path& path,
                           const Eigen::Ref<const FeatureMatrix>& features) {
  write_file_atomic(path, encode_features(features));
}

inline FeatureMatrix read_features(const std::filesystem::path& path) {
  return decode_features(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// LabelFile
// ---------------------------------------------------------------------------

struct LabelTable {
  std::size_t classes = 0;
  std::vector<LabelVector> labels;
};

inline std::string encode_labels(const LabelTable& table) {
  std::ostringstream out;
  out << "C=" << table.classes << '\n';
  for (const auto& y : table.labels) {
    detail::require(!y.empty(), "label file rows must be non-empty");
    detail::require(y.min_universe() <= table.classes, "label index out of range");
    bool first = true;
    for (auto c : y.classes()) {
      if (!first) out << ' ';
      out << c;
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

inline LabelTable decode_labels(const std::string& text, const std::string& what) {
  std::istringstream in(text);
  std::string line;
  LabelTable t;
  if (!std::getline(in, line) || line.rfind("C=", 0) != 0) {
    throw FormatError(what + ": first line must be \"C=<classes>\"");
  }
  try {
    std::size_t used = 0;
    const unsigned long long c = std::stoull(line.substr(2), &used);
    if (used != line.size() - 2 || c == 0) throw std::invalid_argument("bad");
    t.classes = static_cast<std::size_t>(c);
  } catch (const std::exception&) {
    throw FormatError(what + ": malformed class count line \"" + line + "\"");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::vector<std::uint32_t> classes;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      unsigned long v = 0;
      try {
        v = std::stoul(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || v >= t.classes) {
        throw FormatError(what + ":" + std::to_string(lineno) + ": bad class index \"" + tok +
                          "\"");
      }
      classes.push_back(static_cast<std::uint32_t>(v));
    }
    if (classes.empty()) {
      throw FormatError(what + ":" + std::to_string(lineno) + ": empty label line");
    }
    try {
      t.labels.emplace_back(std::move(classes));
    } catch (const InvalidArgument& e) {
      throw FormatError(what + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return t;
}

inline void write_labels(const std::filesystem::path& path, const LabelTable& table) {
  write_file_atomic(path, encode_labels(table));
}

inline LabelTable read_labels(const std::filesystem::path& path) {
  return decode_labels(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// ModelBundle
// ---------------------------------------------------------------------------

inline std::string encode_bundle(const ModelBundle& b) {
  ByteWriter w;
  w.magic("OHWB");
  w.u32(kBundleFormatVersion);
  w.u64(b.config.bits);
  w.f64(b.config.aggressiveness);
  w.u64(b.config.initial_points);
  w.u64(b.config.chunk_size);
  w.i32(b.config.itq_iters);
  w.u64(b.config.seed);
  w.u64(b.classes);
  w.matrix(b.hash.W);
  w.vector(b.hash.b);
  w.vector(b.hash.feature_mean);
  w.matrix(b.hash.itq_rotation);
  w.u64(b.labels.seed);
  w.matrix(b.labels.L);
  w.matrix(b.projection.P);
  w.matrix(b.projection.R);
  w.f64(b.projection.aggressiveness);
  w.u64(b.projection.rounds_seen);
  w.u64(b.projection.seed);
  return w.bytes();
}

inline ModelBundle decode_bundle(std::string bytes, const std::string& what) {
  ByteReader r(std::move(bytes), what);
  r.expect_magic("OHWB");
  const auto version = r.u32();
  if (version != kBundleFormatVersion) r.fail("unsupported version " + std::to_string(version));
  ModelBundle b;
  b.config.bits = r.u64();
  b.config.aggressiveness = r.f64();
  b.config.initial_points = r.u64();
  b.config.chunk_size = r.u64();
  b.config.itq_iters = r.i32();
  b.config.seed = r.u64();
  b.classes = r.u64();
  b.hash.W = r.matrix();
  b.hash.b = r.vector();
  b.hash.feature_mean = r.vector();
  b.hash.itq_rotation = r.matrix();
  b.labels.seed = r.u64();
  b.labels.L = r.matrix();
  b.projection.P = r.matrix();
  b.projection.R = r.matrix();
  b.projection.aggressiveness = r.f64();
  b.projection.rounds_seen = r.u64();
  b.projection.seed = r.u64();
  r.expect_end();

  const auto k = static_cast<Eigen::Index>(b.config.bits);
  const auto d = b.hash.W.rows();
  const bool shapes_ok = b.hash.W.cols() == k && b.hash.b.size() == k &&
                         b.hash.feature_mean.size() == d && b.hash.itq_rotation.rows() == k &&
                         b.hash.itq_rotation.cols() == k && b.labels.L.cols() == k &&
                         b.labels.L.rows() == static_cast<Eigen::Index>(b.classes) &&
                         b.projection.P.rows() == k && b.projection.P.cols() == k &&
                         b.projection.R.rows() == d && b.projection.R.cols() == k;
  if (!shapes_ok) r.fail("inconsistent matrix shapes");
  if (!(b.projection.aggressiveness > 0.0)) r.fail("aggressiveness must be positive");
  return b;
}

inline void save_bundle(const std::filesystem::path& path, const ModelBundle& b) {
  write_file_atomic(path, encode_bundle(b));
}

inline ModelBundle load_bundle(const std::filesystem::path& path) {
  return decode_bundle(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// IndexFile
// ---------------------------------------------------------------------------

inline std::string encode_index(const CodeIndex& idx) {
  const auto codes = idx.codes_snapshot();
  const auto projected = idx.projected_snapshot();
  ByteWriter w;
  w.magic("OHWI");
  w.u32(kIndexFormatVersion);
  w.u64(idx.bits());
  w.u64(codes.size());
  w.u64(projected.size());
  w.u64(idx.projection_version());
  w.matrix(idx.projection_snapshot());
  for (const auto& c : codes)
    for (auto word : c.words()) w.u64(word);
  for (const auto& c : projected)
    for (auto word : c.words()) w.u64(word);
  return w.bytes();
}

inline CodeIndex decode_index(std::string bytes, const std::string& what) {
  ByteReader r(std::move(bytes), what);
  r.expect_magic("OHWI");
  const auto version = r.u32();
  if (version != kIndexFormatVersion) r.fail("unsupported version " + std::to_string(version));
  const auto k = r.u64();
  const auto n = r.u64();
  const auto n_proj = r.u64();
  const auto pver = r.u64();
  Eigen::MatrixXd projection = r.matrix();
  if (k == 0 || n_proj > n) r.fail("inconsistent header");
  const std::size_t words = PackedCode::word_count(k);
  if (r.remaining() != (n + n_proj) * words * 8) r.fail("payload size mismatch");
  auto read_codes = [&](std::uint64_t count) {
    std::vector<PackedCode> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      std::vector<std::uint64_t> ws(words);
      for (auto& x : ws) x = r.u64();
      try {
        out.emplace_back(k, std::move(ws));
      } catch (const InvalidArgument& e) {
        r.fail(e.what());
      }
    }
    return out;
  };
  auto codes = read_codes(n);
  auto projected = read_codes(n_proj);
  try {
    return CodeIndex::restore(k, std::move(codes), std::move(projected), std::move(projection),
                              pver);
  } catch (const InvalidArgument& e) {
    r.fail(e.what());
  }
}

inline void save_index(const std::filesystem::path& path, const CodeIndex& idx) {
  write_file_atomic(path, encode_index(idx));
}

inline CodeIndex load_index(const std::filesystem::path& path) {
  return decode_index(read_file(path), path.string());
}

}  // namespace ohweu::io
