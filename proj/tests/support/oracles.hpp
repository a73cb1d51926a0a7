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

// Test-only reference implementations. Nothing here calls the library's
// packed/bucketed/closed-form paths; they are plain loops over the
// definitions, used to cross-check the real implementations.

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using SignVec = std::vector<int>;

inline int sign(double v) { return v >= 0.0 ? 1 : -1; }

inline int hamming(const SignVec& a, const SignVec& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i] ? 1 : 0;
  return d;
}

/// sgn(W^T x + b), one dot product at a time.
inline SignVec encode(const Eigen::MatrixXd& W, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& x) {
  SignVec out(static_cast<std::size_t>(W.cols()));
  for (Eigen::Index k = 0; k < W.cols(); ++k) {
    double acc = 0.0;
    for (Eigen::Index d = 0; d < W.rows(); ++d) acc += W(d, k) * x[d];
    out[k] = sign(acc + b[k]);
  }
  return out;
}

/// sgn(M^T v) for a sign vector v.
inline SignVec project(const Eigen::MatrixXd& M, const SignVec& v) {
  SignVec out(static_cast<std::size_t>(M.cols()));
  for (Eigen::Index k = 0; k < M.cols(); ++k) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) acc += M(i, k) * v[i];
    out[k] = sign(acc);
  }
  return out;
}

inline SignVec project_feature(const Eigen::MatrixXd& M, const Eigen::VectorXd& x) {
  SignVec out(static_cast<std::size_t>(M.cols()));
  for (Eigen::Index k = 0; k < M.cols(); ++k) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) acc += M(i, k) * x[i];
    out[k] = sign(acc);
  }
  return out;
}

/// Ids sorted by (distance, id).
inline std::vector<std::pair<std::size_t, int>> exhaustive_rank(const std::vector<int>& dist) {
  std::vector<std::pair<std::size_t, int>> r;
  for (std::size_t i = 0; i < dist.size(); ++i) r.push_back({i, dist[i]});
  std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  return r;
}

/// AP through a cumulative relevant-count array and precision@k terms.
inline double average_precision(const std::vector<std::size_t>& ranking,
                                const std::vector<bool>& relevant) {
  const std::size_t n = ranking.size();
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t r = 0; r < n; ++r) cum[r + 1] = cum[r] + (relevant[ranking[r]] ? 1.0 : 0.0);
  const double total = static_cast<double>(std::count(relevant.begin(), relevant.end(), true));
  if (total == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (relevant[ranking[r]]) s += cum[r + 1] / static_cast<double>(r + 1);
  }
  return s / total;
}

inline bool share_label(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  for (auto x : a)
    for (auto y : b)
      if (x == y) return true;
  return false;
}

/// Exhaustive mAP over queries with at least one relevant item, given
/// query codes and database codes already in the comparison space.
inline double mean_average_precision(const std::vector<SignVec>& query_codes,
                                     const std::vector<std::vector<std::uint32_t>>& query_labels,
                                     const std::vector<SignVec>& db_codes,
                                     const std::vector<std::vector<std::uint32_t>>& db_labels) {
  double sum = 0.0;
  int counted = 0;
  for (std::size_t q = 0; q < query_codes.size(); ++q) {
    std::vector<bool> rel(db_codes.size());
    bool any = false;
    for (std::size_t i = 0; i < db_codes.size(); ++i) {
      rel[i] = share_label(query_labels[q], db_labels[i]);
      any = any || rel[i];
    }
    if (!any) continue;
    std::vector<int> dist;
    for (const auto& c : db_codes) dist.push_back(hamming(query_codes[q], c));
    std::vector<std::size_t> ranking;
    for (const auto& [id, d] : exhaustive_rank(dist)) ranking.push_back(id);
    sum += average_precision(ranking, rel);
    ++counted;
  }
  return counted ? sum / counted : 0.0;
}

}  // namespace oracle
