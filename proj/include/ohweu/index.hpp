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

#include <cstdint>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ohweu/core.hpp"

namespace ohweu {

struct SearchHit {
  std::size_t id = 0;
  std::size_t distance = 0;

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// g = sgn(P^T h), packed.
inline PackedCode project_code(const Eigen::Ref<const Eigen::MatrixXd>& P,
                               const BinaryCode& h) {
  detail::require(P.rows() == P.cols() && static_cast<std::size_t>(P.rows()) == h.size(),
                  "project_code: P must be K x K with K=" + std::to_string(h.size()));
  const std::size_t k = h.size();
  std::vector<std::uint64_t> words(PackedCode::word_count(k), 0);
  for (std::size_t j = 0; j < k; ++j) {
    if (h.dot(P.col(static_cast<Eigen::Index>(j))) >= 0.0) {
      words[j / PackedCode::kWordBits] |= std::uint64_t{1} << (j % PackedCode::kWordBits);
    }
  }
  return PackedCode(k, std::move(words));
}

/// g = sgn(R^T q), packed.
inline PackedCode project_feature(const Eigen::Ref<const Eigen::MatrixXd>& R,
                                  const Eigen::Ref<const Eigen::VectorXd>& q) {
  detail::require(R.rows() == q.size(), "project_feature: R has " +
                                            std::to_string(R.rows()) + " rows, query has D=" +
                                            std::to_string(q.size()));
  const auto k = static_cast<std::size_t>(R.cols());
  std::vector<std::uint64_t> words(PackedCode::word_count(k), 0);
  for (std::size_t j = 0; j < k; ++j) {
    if (R.col(static_cast<Eigen::Index>(j)).dot(q) >= 0.0) {
      words[j / PackedCode::kWordBits] |= std::uint64_t{1} << (j % PackedCode::kWordBits);
    }
  }
  return PackedCode(k, std::move(words));
}

/// Append-only database of fixed hash codes plus a cache of their projected
/// codes. Holds no feature data, so refreshing the cache after the
/// projection changes costs O(N K^2) regardless of the feature dimension.
///
/// Queries take a shared lock and inserts/refreshes an exclusive one, so a
/// query always ranks against one consistent cache.
class CodeIndex {
 public:
  explicit CodeIndex(std::size_t bits) : bits_(bits) {
    detail::require(bits >= 1, "CodeIndex: K must be positive");
  }

  CodeIndex(const CodeIndex& other) {
    std::shared_lock lock(other.mutex_);
    copy_from(other);
  }
  CodeIndex& operator=(const CodeIndex& other) {
    if (this != &other) {
      std::scoped_lock lock(mutex_);
      std::shared_lock other_lock(other.mutex_);
      copy_from(other);
    }
    return *this;
  }
  CodeIndex(CodeIndex&& other) noexcept {
    std::unique_lock lock(other.mutex_);
    move_from(std::move(other));
  }
  CodeIndex& operator=(CodeIndex&& other) noexcept {
    if (this != &other) {
      std::scoped_lock lock(mutex_, other.mutex_);
      move_from(std::move(other));
    }
    return *this;
  }

  /// Rebuild an index from persisted parts. `projected` may be shorter than
  /// `codes` (entries inserted after the last refresh).
  static CodeIndex restore(std::size_t bits, std::vector<PackedCode> codes,
                           std::vector<PackedCode> projected, Eigen::MatrixXd projection,
                           std::uint64_t projection_version) {
    CodeIndex idx(bits);
    detail::require(projected.size() <= codes.size(),
                    "CodeIndex::restore: more projected codes than entries");
    for (const auto& c : codes) {
      detail::require(c.bits() == bits, "CodeIndex::restore: code length mismatch");
    }
    for (const auto& c : projected) {
      detail::require(c.bits() == bits, "CodeIndex::restore: code length mismatch");
    }
    if (!projected.empty() || projection.size() != 0) {
      detail::require(projection.rows() == static_cast<Eigen::Index>(bits) &&
                          projection.cols() == static_cast<Eigen::Index>(bits),
                      "CodeIndex::restore: projection snapshot must be K x K");
    }
    idx.codes_ = std::move(codes);
    idx.projected_ = std::move(projected);
    idx.projection_ = std::move(projection);
    idx.projection_version_ = projection_version;
    return idx;
  }

  std::size_t bits() const noexcept { return bits_; }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return codes_.size();
  }

  std::uint64_t projection_version() const {
    std::shared_lock lock(mutex_);
    return projection_version_;
  }

  /// Appends h and returns its id (ids are dense, in insertion order). The
  /// new entry is unprojected until the next refresh.
  std::size_t insert(const BinaryCode& h) {
    PackedCode packed = pack_code(h, bits_);
    std::unique_lock lock(mutex_);
    codes_.push_back(std::move(packed));
    return codes_.size() - 1;
  }

  /// projected[i] = sgn(P^T h_i) for every stored entry.
  void refresh_projected_codes(const Eigen::Ref<const Eigen::MatrixXd>& P) {
    detail::require(P.rows() == static_cast<Eigen::Index>(bits_) &&
                        P.cols() == static_cast<Eigen::Index>(bits_),
                    "refresh_projected_codes: P must be K x K with K=" +
                        std::to_string(bits_));
    std::unique_lock lock(mutex_);
    std::vector<PackedCode> fresh;
    fresh.reserve(codes_.size());
    for (const auto& c : codes_) fresh.push_back(project_code(P, unpack_code(c)));
    projected_ = std::move(fresh);
    projection_ = P;
    ++projection_version_;
  }

  /// True when every entry is projected with exactly this P.
  bool is_fresh(const Eigen::Ref<const Eigen::MatrixXd>& P) const {
    std::shared_lock lock(mutex_);
    return fresh_locked(P);
  }

  /// Ranks by Hamming distance between sgn(P^T h_q) and the cached codes.
  std::vector<SearchHit> query_symmetric(const Eigen::Ref<const Eigen::MatrixXd>& P,
                                         const BinaryCode& h_q, std::size_t k) const {
    detail::require(h_q.size() == bits_, "query_symmetric: query code length mismatch");
    const PackedCode g_q = project_code(P, h_q);
    std::shared_lock lock(mutex_);
    ensure_fresh(P);
    return rank_locked(g_q, k);
  }

  /// Ranks by Hamming distance between sgn(R^T q), computed straight from
  /// the query feature, and the cached database codes. P is only used to
  /// check that the cache is current.
  std::vector<SearchHit> query_asymmetric(const Eigen::Ref<const Eigen::MatrixXd>& P,
                                          const Eigen::Ref<const Eigen::MatrixXd>& R,
                                          const Eigen::Ref<const Eigen::VectorXd>& q,
                                          std::size_t k) const {
    detail::require(R.cols() == static_cast<Eigen::Index>(bits_),
                    "query_asymmetric: R must have K columns");
    const PackedCode g_q = project_feature(R, q);
    std::shared_lock lock(mutex_);
    ensure_fresh(P);
    return rank_locked(g_q, k);
  }

  PackedCode code(std::size_t id) const {
    std::shared_lock lock(mutex_);
    return codes_.at(id);
  }

  PackedCode projected(std::size_t id) const {
    std::shared_lock lock(mutex_);
    return projected_.at(id);
  }

  // Snapshot accessors for persistence.
  std::vector<PackedCode> codes_snapshot() const {
    std::shared_lock lock(mutex_);
    return codes_;
  }
  std::vector<PackedCode> projected_snapshot() const {
    std::shared_lock lock(mutex_);
    return projected_;
  }
  Eigen::MatrixXd projection_snapshot() const {
    std::shared_lock lock(mutex_);
    return projection_;
  }

 private:
  void copy_from(const CodeIndex& o) {
    bits_ = o.bits_;
    codes_ = o.codes_;
    projected_ = o.projected_;
    projection_ = o.projection_;
    projection_version_ = o.projection_version_;
  }
  void move_from(CodeIndex&& o) noexcept {
    bits_ = o.bits_;
    codes_ = std::move(o.codes_);
    projected_ = std::move(o.projected_);
    projection_ = std::move(o.projection_);
    projection_version_ = o.projection_version_;
  }

  bool fresh_locked(const Eigen::Ref<const Eigen::MatrixXd>& P) const {
    return projected_.size() == codes_.size() && projection_.rows() == P.rows() &&
           projection_.cols() == P.cols() && projection_ == P;
  }

  void ensure_fresh(const Eigen::Ref<const Eigen::MatrixXd>& P) const {
    if (!fresh_locked(P)) {
      throw StaleProjection(
          "projected codes are stale: " + std::to_string(codes_.size() - projected_.size()) +
          " unprojected entries, projection version " + std::to_string(projection_version_) +
          "; call refresh_projected_codes first");
    }
  }

  // Bucket the ids by distance; scanning ids in ascending order inside each
  // bucket gives the tie-break for free.
  std::vector<SearchHit> rank_locked(const PackedCode& g_q, std::size_t k) const {
    detail::require(k >= 1, "query: k must be at least 1");
    const std::size_t n = projected_.size();
    std::vector<std::uint32_t> dist(n);
    std::vector<std::size_t> counts(bits_ + 2, 0);
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = static_cast<std::uint32_t>(hamming(g_q, projected_[i]));
      ++counts[dist[i] + 1];
    }
    for (std::size_t d = 1; d < counts.size(); ++d) counts[d] += counts[d - 1];
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[counts[dist[i]]++] = i;
    const std::size_t take = std::min(k, n);
    std::vector<SearchHit> hits;
    hits.reserve(take);
    for (std::size_t r = 0; r < take; ++r) hits.push_back({order[r], dist[order[r]]});
    return hits;
  }

  std::size_t bits_ = 0;
  std::vector<PackedCode> codes_;
  std::vector<PackedCode> projected_;
  Eigen::MatrixXd projection_;
  std::uint64_t projection_version_ = 0;
  mutable std::shared_mutex mutex_;
};

}  // namespace ohweu
