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
#include <string>

#include "ohweu/core.hpp"
#include "ohweu/hash_init.hpp"
#include "ohweu/label_lsh.hpp"
#include "ohweu/pa_learner.hpp"

namespace ohweu {

constexpr std::size_t kDefaultBits = 32;
constexpr std::size_t kDefaultChunkSize = 1000;

struct PipelineConfig {
  std::size_t bits = kDefaultBits;
  double aggressiveness = kDefaultAggressiveness;
  std::size_t initial_points = kDefaultInitialPoints;
  std::size_t chunk_size = kDefaultChunkSize;
  int itq_iters = kDefaultItqIterations;
  std::uint64_t seed = 0;
};

/// Independent generator seeds for the three randomized components, all
/// derived from one user seed.
struct Seeds {
  std::uint64_t hash;
  std::uint64_t label;
  std::uint64_t projection;
};

inline Seeds derive_seeds(std::uint64_t seed) noexcept {
  return {seed, seed + 0x9E3779B97F4A7C15ull, seed + 2 * 0x9E3779B97F4A7C15ull};
}

/// Everything needed to encode, learn and search: the fixed hash stage, the
/// label hyperplanes and the online projections, plus the configuration
/// that produced them.
struct ModelBundle {
  PipelineConfig config;
  std::size_t classes = 0;
  HashModel hash;
  LabelHashMatrix labels;
  ProjectionState projection;
};

/// Fit the hash stage on the first `config.initial_points` rows, sample L
/// and initialize P and R.
inline ModelBundle initialize_bundle(const Eigen::Ref<const FeatureMatrix>& features,
                                     std::size_t classes, const PipelineConfig& config) {
  const auto n = static_cast<std::size_t>(features.rows());
  detail::require(config.initial_points <= n,
                  "initial batch size m=" + std::to_string(config.initial_points) +
                      " exceeds the number of points N=" + std::to_string(n));
  detail::require(config.chunk_size >= 1, "chunk size must be positive");
  const Seeds seeds = derive_seeds(config.seed);
  ModelBundle b;
  b.config = config;
  b.classes = classes;
  b.hash = fit_pca_itq(features.topRows(static_cast<Eigen::Index>(config.initial_points)),
                       config.bits, config.itq_iters, seeds.hash);
  b.labels = sample_label_matrix(classes, config.bits, seeds.label);
  b.projection = init_projection_state(config.bits, b.hash.dim(), config.aggressiveness,
                                       seeds.projection);
  return b;
}

}  // namespace ohweu
