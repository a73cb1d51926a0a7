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
#include <random>
#include <string>

#include <Eigen/Dense>

#include "ohweu/core.hpp"

namespace ohweu {

/// Random Gaussian hyperplanes over the label space. Row c holds the
/// contribution of class c to every bit of the target code.
struct LabelHashMatrix {
  Eigen::MatrixXd L;  // C x K
  std::uint64_t seed = 0;

  std::size_t classes() const noexcept { return static_cast<std::size_t>(L.rows()); }
  std::size_t bits() const noexcept { return static_cast<std::size_t>(L.cols()); }
};

/// Entries are drawn column by column from N(0, 1).
inline LabelHashMatrix sample_label_matrix(std::size_t classes, std::size_t bits,
                                           std::uint64_t seed) {
  detail::require(classes >= 1, "sample_label_matrix: C must be positive");
  detail::require(bits >= 1, "sample_label_matrix: K must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  LabelHashMatrix m;
  m.seed = seed;
  m.L.resize(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(bits));
  for (Eigen::Index k = 0; k < m.L.cols(); ++k) {
    for (Eigen::Index c = 0; c < m.L.rows(); ++c) m.L(c, k) = normal(rng);
  }
  return m;
}

/// Target code g* = sgn(L^T y) for a multi-hot label vector y.
inline BinaryCode ideal_code(const LabelHashMatrix& lm, const LabelVector& y) {
  if (y.empty()) {
    throw EmptyLabelSet("ideal_code: label set is empty; no target code exists");
  }
  detail::require(y.min_universe() <= lm.classes(),
                  "ideal_code: class index " + std::to_string(y.min_universe() - 1) +
                      " out of range for C=" + std::to_string(lm.classes()));
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(lm.L.cols());
  for (std::uint32_t c : y.classes()) acc += lm.L.row(c).transpose();
  return BinaryCode::from_signs(acc);
}

}  // namespace ohweu
