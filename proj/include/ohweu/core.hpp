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

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ohweu {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Shape, range or dimension violation of a caller-supplied argument.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Training data cannot support the requested number of components.
class DegenerateData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A label vector with no active class was given where a code is required.
class EmptyLabelSet : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Feature-side update requested for a zero vector with positive loss.
class ZeroNormFeature : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// The projected-code cache does not correspond to the projection in use.
class StaleProjection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or truncated on-disk data.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Scalars, vectors
// ---------------------------------------------------------------------------

using Sign = std::int8_t;

/// sgn with sgn(0) := +1.
inline Sign sgn(double v) noexcept { return v >= 0.0 ? Sign{1} : Sign{-1}; }

using FeatureVector = Eigen::VectorXd;
using FeatureMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline bool all_finite(const Eigen::Ref<const Eigen::VectorXd>& x) {
  return x.allFinite();
}

// ---------------------------------------------------------------------------
// BinaryCode
// ---------------------------------------------------------------------------

/// A K-bit code stored as sign values in {-1, +1}.
class BinaryCode {
 public:
  BinaryCode() = default;

  /// All-(+1) code of length k.
  explicit BinaryCode(std::size_t k) : bits_(k, Sign{1}) {}

  explicit BinaryCode(std::vector<Sign> bits) : bits_(std::move(bits)) {
    for (Sign s : bits_) {
      detail::require(s == 1 || s == -1, "BinaryCode entries must be -1 or +1");
    }
  }

  BinaryCode(std::initializer_list<int> bits) {
    bits_.reserve(bits.size());
    for (int s : bits) {
      detail::require(s == 1 || s == -1, "BinaryCode entries must be -1 or +1");
      bits_.push_back(static_cast<Sign>(s));
    }
  }

  /// Code of sgn(v_i) for every entry.
  static BinaryCode from_signs(const Eigen::Ref<const Eigen::VectorXd>& v) {
    BinaryCode c;
    c.bits_.resize(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) c.bits_[i] = sgn(v[i]);
    return c;
  }

  std::size_t size() const noexcept { return bits_.size(); }
  Sign operator[](std::size_t i) const noexcept { return bits_[i]; }
  void set(std::size_t i, Sign s) {
    detail::require(s == 1 || s == -1, "BinaryCode entries must be -1 or +1");
    bits_.at(i) = s;
  }
  std::span<const Sign> bits() const noexcept { return bits_; }

  /// Sign vector as doubles, for linear algebra.
  Eigen::VectorXd as_vector() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(bits_.size()));
    for (std::size_t i = 0; i < bits_.size(); ++i) v[i] = bits_[i];
    return v;
  }

  /// w^T h without materializing h as doubles.
  double dot(const Eigen::Ref<const Eigen::VectorXd>& w) const {
    detail::require(static_cast<std::size_t>(w.size()) == bits_.size(),
                    "dimension mismatch in BinaryCode::dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      acc += bits_[i] > 0 ? w[i] : -w[i];
    }
    return acc;
  }

  friend bool operator==(const BinaryCode&, const BinaryCode&) = default;

 private:
  std::vector<Sign> bits_;
};

// ---------------------------------------------------------------------------
// PackedCode
// ---------------------------------------------------------------------------

/// Bit-packed code: bit i lives at position (i % 64) of word (i / 64),
/// +1 maps to 1 and -1 to 0. Padding bits past K are zero.
class PackedCode {
 public:
  static constexpr std::size_t kWordBits = 64;

  PackedCode() = default;

  PackedCode(std::size_t k, std::vector<std::uint64_t> words)
      : k_(k), words_(std::move(words)) {
    detail::require(words_.size() == word_count(k_),
                    "PackedCode word count does not match K");
    if (k_ % kWordBits != 0) {
      const std::uint64_t pad = ~std::uint64_t{0} << (k_ % kWordBits);
      detail::require((words_.back() & pad) == 0,
                      "PackedCode padding bits must be zero");
    }
  }

  static constexpr std::size_t word_count(std::size_t k) noexcept {
    return (k + kWordBits - 1) / kWordBits;
  }

  std::size_t bits() const noexcept { return k_; }
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  bool bit(std::size_t i) const noexcept {
    return (words_[i / kWordBits] >> (i % kWordBits)) & 1u;
  }

  friend bool operator==(const PackedCode&, const PackedCode&) = default;

 private:
  std::size_t k_ = 0;
  std::vector<std::uint64_t> words_;
};

inline PackedCode pack_code(const BinaryCode& code, std::size_t k) {
  detail::require(code.size() == k, "code length " + std::to_string(code.size()) +
                                        " does not match K=" + std::to_string(k));
  std::vector<std::uint64_t> words(PackedCode::word_count(k), 0);
  for (std::size_t i = 0; i < k; ++i) {
    if (code[i] > 0) {
      words[i / PackedCode::kWordBits] |= std::uint64_t{1}
                                          << (i % PackedCode::kWordBits);
    }
  }
  return PackedCode(k, std::move(words));
}

inline PackedCode pack_code(const BinaryCode& code) {
  return pack_code(code, code.size());
}

inline BinaryCode unpack_code(const PackedCode& packed) {
  std::vector<Sign> bits(packed.bits());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    bits[i] = packed.bit(i) ? Sign{1} : Sign{-1};
  }
  return BinaryCode(std::move(bits));
}

/// Hamming distance via xor + popcount.
inline std::size_t hamming(const PackedCode& a, const PackedCode& b) {
  detail::require(a.bits() == b.bits(), "hamming: code lengths differ");
  const auto wa = a.words();
  const auto wb = b.words();
  std::size_t d = 0;
  for (std::size_t w = 0; w < wa.size(); ++w) {
    d += static_cast<std::size_t>(std::popcount(wa[w] ^ wb[w]));
  }
  return d;
}

// ---------------------------------------------------------------------------
// LabelVector
// ---------------------------------------------------------------------------

/// Set of active class indices, kept sorted. Order of construction input
/// does not matter.
class LabelVector {
 public:
  LabelVector() = default;

  explicit LabelVector(std::vector<std::uint32_t> classes)
      : classes_(std::move(classes)) {
    std::sort(classes_.begin(), classes_.end());
    detail::require(
        std::adjacent_find(classes_.begin(), classes_.end()) == classes_.end(),
        "LabelVector class indices must be unique");
  }

  LabelVector(std::initializer_list<std::uint32_t> classes)
      : LabelVector(std::vector<std::uint32_t>(classes)) {}

  std::span<const std::uint32_t> classes() const noexcept { return classes_; }
  std::size_t size() const noexcept { return classes_.size(); }
  bool empty() const noexcept { return classes_.empty(); }

  /// Largest index + 1, or 0 when empty.
  std::uint32_t min_universe() const noexcept {
    return classes_.empty() ? 0 : classes_.back() + 1;
  }

  bool shares_class_with(const LabelVector& other) const noexcept {
    auto a = classes_.begin();
    auto b = other.classes_.begin();
    while (a != classes_.end() && b != other.classes_.end()) {
      if (*a == *b) return true;
      if (*a < *b) {
        ++a;
      } else {
        ++b;
      }
    }
    return false;
  }

  friend bool operator==(const LabelVector&, const LabelVector&) = default;

 private:
  std::vector<std::uint32_t> classes_;
};

}  // namespace ohweu
