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

// Retrieval evaluation: shared-label ground truth, full-ranking AP/mAP, a
// synthetic multi-label generator and the chunked streaming protocol.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ohweu/core.hpp"
#include "ohweu/hash_init.hpp"
#include "ohweu/index.hpp"
#include "ohweu/label_lsh.hpp"
#include "ohweu/pa_learner.hpp"
#include "ohweu/pipeline.hpp"

namespace ohweu {

enum class QueryMode { symmetric, asymmetric };

inline const char* to_string(QueryMode m) noexcept {
  return m == QueryMode::symmetric ? "sym" : "asym";
}

/// relevance[i] is 1 iff y_q and db_labels[i] share at least one class.
inline std::vector<std::uint8_t> groundtruth_neighbors(const LabelVector& y_q,
                                                       std::span<const LabelVector> db_labels) {
  std::vector<std::uint8_t> rel(db_labels.size(), 0);
  for (std::size_t i = 0; i < db_labels.size(); ++i) {
    rel[i] = y_q.shares_class_with(db_labels[i]) ? 1 : 0;
  }
  return rel;
}

/// Full-ranking average precision: mean over relevant items of the
/// precision at their rank. Zero when nothing is relevant.
inline double average_precision(std::span<const std::size_t> ranked_ids,
                                std::span<const std::uint8_t> relevance) {
  const auto total = static_cast<std::size_t>(
      std::count_if(relevance.begin(), relevance.end(), [](std::uint8_t r) { return r != 0; }));
  if (total == 0) return 0.0;
  // Extended precision so short rankings round to the exact fraction.
  long double sum = 0.0L;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ranked_ids.size(); ++r) {
    const std::size_t id = ranked_ids[r];
    detail::require(id < relevance.size(), "average_precision: ranked id out of range");
    if (relevance[id]) {
      ++hits;
      sum += static_cast<long double>(hits) / static_cast<long double>(r + 1);
    }
  }
  return static_cast<double>(sum / static_cast<long double>(total));
}

struct EvalRun {
  QueryMode mode = QueryMode::symmetric;
  std::vector<std::size_t> query_ids;  // queries with >= 1 relevant item
  std::vector<double> average_precisions;
  double mean_ap = 0.0;
  double random_baseline = 0.0;  // mean relevant fraction over the same queries
  std::size_t skipped_queries = 0;
  double cumulative_train_seconds = 0.0;
  double cumulative_refresh_seconds = 0.0;
  std::uint64_t rounds = 0;
  PipelineConfig config;
};

/// Held-out queries: raw features plus labels.
struct QuerySet {
  FeatureMatrix features;
  std::vector<LabelVector> labels;
};

/// Ranks the full database for every query and averages AP over the
/// queries that have at least one ground-truth neighbour. Symmetric mode
/// hashes the query and projects it with P; asymmetric mode applies R to
/// the raw feature. The index cache must be fresh for `projection.P`.
inline EvalRun mean_average_precision(const CodeIndex& index, const QuerySet& queries,
                                      std::span<const LabelVector> db_labels,
                                      const HashModel& hash,
                                      const ProjectionState& projection, QueryMode mode) {
  detail::require(static_cast<std::size_t>(queries.features.rows()) == queries.labels.size(),
                  "mean_average_precision: query features and labels differ in count");
  detail::require(db_labels.size() == index.size(),
                  "mean_average_precision: database labels do not match index size");
  EvalRun run;
  run.mode = mode;
  run.rounds = projection.rounds_seen;
  const std::size_t n = index.size();
  std::vector<std::size_t> ranked(n);
  double ap_sum = 0.0;
  double baseline_sum = 0.0;
  for (std::size_t qi = 0; qi < queries.labels.size(); ++qi) {
    const auto rel = groundtruth_neighbors(queries.labels[qi], db_labels);
    const auto n_rel = std::accumulate(rel.begin(), rel.end(), std::size_t{0});
    if (n_rel == 0) {
      ++run.skipped_queries;
      continue;
    }
    const Eigen::VectorXd q = queries.features.row(static_cast<Eigen::Index>(qi)).transpose();
    const auto hits = mode == QueryMode::symmetric
                          ? index.query_symmetric(projection.P, encode(hash, q), n)
                          : index.query_asymmetric(projection.P, projection.R, q, n);
    for (std::size_t r = 0; r < hits.size(); ++r) ranked[r] = hits[r].id;
    const double ap = average_precision(std::span(ranked.data(), hits.size()), rel);
    run.query_ids.push_back(qi);
    run.average_precisions.push_back(ap);
    ap_sum += ap;
    baseline_sum += static_cast<double>(n_rel) / static_cast<double>(n);
  }
  if (!run.query_ids.empty()) {
    const auto m = static_cast<double>(run.query_ids.size());
    run.mean_ap = ap_sum / m;
    run.random_baseline = baseline_sum / m;
  }
  return run;
}

// ---------------------------------------------------------------------------
// Synthetic multi-label data
// ---------------------------------------------------------------------------

struct SyntheticParams {
  std::size_t points = 5000;
  std::size_t dim = 64;
  std::size_t classes = 8;
  double labels_per_point_mean = 1.5;
  double cluster_spread = 1.0;
  std::uint64_t seed = 0;
};

struct SyntheticDataset {
  FeatureMatrix features;  // N x D
  std::vector<LabelVector> labels;
  SyntheticParams params;

  std::size_t size() const noexcept { return labels.size(); }
};

/// C Gaussian centroids in R^D. Each point draws its label count from a
/// Poisson(labels_per_point_mean) conditioned on being >= 1 (capped at C),
/// picks that many distinct classes uniformly, and sits at the mean of their
/// centroids plus isotropic Gaussian noise of standard deviation
/// cluster_spread.
inline SyntheticDataset gen_synthetic_multilabel(const SyntheticParams& params) {
  detail::require(params.points >= 1 && params.dim >= 1 && params.classes >= 1,
                  "gen_synthetic_multilabel: N, D and C must be positive");
  detail::require(params.classes <= 1u << 16, "gen_synthetic_multilabel: too many classes");
  detail::require(params.labels_per_point_mean > 0.0 &&
                      std::isfinite(params.labels_per_point_mean),
                  "gen_synthetic_multilabel: labels_per_point_mean must be positive");
  detail::require(params.cluster_spread > 0.0 && std::isfinite(params.cluster_spread),
                  "gen_synthetic_multilabel: cluster_spread must be positive");

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::poisson_distribution<int> label_count(params.labels_per_point_mean);

  const auto d = static_cast<Eigen::Index>(params.dim);
  Eigen::MatrixXd centroids(static_cast<Eigen::Index>(params.classes), d);
  for (Eigen::Index c = 0; c < centroids.rows(); ++c)
    for (Eigen::Index j = 0; j < d; ++j) centroids(c, j) = normal(rng);

  SyntheticDataset ds;
  ds.params = params;
  ds.features.resize(static_cast<Eigen::Index>(params.points), d);
  ds.labels.reserve(params.points);
  std::vector<std::uint32_t> pool(params.classes);
  for (std::size_t i = 0; i < params.points; ++i) {
    int count = 0;
    while (count == 0) count = label_count(rng);
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(count), params.classes);
    std::iota(pool.begin(), pool.end(), 0u);
    for (std::size_t s = 0; s < take; ++s) {
      std::uniform_int_distribution<std::size_t> pick(s, params.classes - 1);
      std::swap(pool[s], pool[pick(rng)]);
    }
    std::vector<std::uint32_t> chosen(pool.begin(), pool.begin() + static_cast<long>(take));
    Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(d);
    for (std::uint32_t c : chosen) x += centroids.row(c);
    x /= static_cast<double>(take);
    for (Eigen::Index j = 0; j < d; ++j) x[j] += params.cluster_spread * normal(rng);
    ds.features.row(static_cast<Eigen::Index>(i)) = x;
    ds.labels.emplace_back(std::move(chosen));
  }
  return ds;
}

/// Randomly hold out `query_count` points as queries; the rest, in their
/// original order, form the streamed database.
inline std::pair<SyntheticDataset, QuerySet> split_queries(const SyntheticDataset& all,
                                                           std::size_t query_count,
                                                           std::uint64_t seed) {
  detail::require(query_count < all.size(), "split_queries: need at least one database point");
  std::vector<std::size_t> perm(all.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::uint8_t> is_query(all.size(), 0);
  std::vector<std::size_t> qids(perm.begin(), perm.begin() + static_cast<long>(query_count));
  std::sort(qids.begin(), qids.end());
  for (std::size_t q : qids) is_query[q] = 1;

  SyntheticDataset db;
  db.params = all.params;
  db.features.resize(static_cast<Eigen::Index>(all.size() - query_count), all.features.cols());
  QuerySet qs;
  qs.features.resize(static_cast<Eigen::Index>(query_count), all.features.cols());
  Eigen::Index di = 0, qi = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto row = all.features.row(static_cast<Eigen::Index>(i));
    if (is_query[i]) {
      qs.features.row(qi++) = row;
      qs.labels.push_back(all.labels[i]);
    } else {
      db.features.row(di++) = row;
      db.labels.push_back(all.labels[i]);
    }
  }
  return {std::move(db), std::move(qs)};
}

// ---------------------------------------------------------------------------
// Chunked streaming protocol
// ---------------------------------------------------------------------------

struct ChunkRecord {
  std::size_t chunk = 0;
  std::size_t points_seen = 0;
  double train_seconds = 0.0;
  double refresh_seconds = 0.0;
  double cumulative_seconds = 0.0;
};

struct CheckpointRecord {
  std::size_t chunk = 0;
  std::size_t points_seen = 0;
  double map_sym = 0.0;
  double map_asym = 0.0;
};

struct ProtocolResult {
  ModelBundle bundle;
  EvalRun sym;
  EvalRun asym;
  std::vector<ChunkRecord> chunks;
  std::vector<CheckpointRecord> checkpoints;
};

/// Fit the hash stage on the first m database points, index every database
/// point, stream the points after the first m through the PA learners in
/// chunks, refreshing the projected codes after each chunk, then evaluate
/// both query modes. When `eval_every_chunks` > 0 both modes are also
/// evaluated after every that-many chunks.
inline ProtocolResult run_stream_protocol(const Eigen::Ref<const FeatureMatrix>& features,
                                          std::span<const LabelVector> labels,
                                          const QuerySet& queries, std::size_t classes,
                                          const PipelineConfig& config,
                                          std::size_t eval_every_chunks = 0) {
  using clock = std::chrono::steady_clock;
  detail::require(static_cast<std::size_t>(features.rows()) == labels.size(),
                  "run_stream_protocol: features and labels differ in count");
  ProtocolResult out;
  out.bundle = initialize_bundle(features, classes, config);
  ModelBundle& b = out.bundle;
  CodeIndex index(config.bits);
  const std::size_t n = labels.size();
  const std::size_t m = config.initial_points;
  for (std::size_t i = 0; i < m; ++i) {
    index.insert(encode(b.hash, features.row(static_cast<Eigen::Index>(i)).transpose()));
  }
  index.refresh_projected_codes(b.projection.P);

  double train_total = 0.0, refresh_total = 0.0;
  std::size_t chunk = 0;
  for (std::size_t start = m; start < n; start += config.chunk_size) {
    const std::size_t end = std::min(n, start + config.chunk_size);
    const auto t0 = clock::now();
    for (std::size_t i = start; i < end; ++i) {
      const auto res = process_stream_point(
          b.projection, b.labels, b.hash,
          features.row(static_cast<Eigen::Index>(i)).transpose(), labels[i]);
      index.insert(res.code);
    }
    const auto t1 = clock::now();
    index.refresh_projected_codes(b.projection.P);
    const auto t2 = clock::now();
    ChunkRecord rec;
    rec.chunk = ++chunk;
    rec.points_seen = end - m;
    rec.train_seconds = std::chrono::duration<double>(t1 - t0).count();
    rec.refresh_seconds = std::chrono::duration<double>(t2 - t1).count();
    train_total += rec.train_seconds;
    refresh_total += rec.refresh_seconds;
    rec.cumulative_seconds = train_total + refresh_total;
    out.chunks.push_back(rec);

    if (eval_every_chunks > 0 && (chunk % eval_every_chunks == 0 || end == n)) {
      const auto seen = labels.first(end);
      CheckpointRecord cp;
      cp.chunk = chunk;
      cp.points_seen = end - m;
      cp.map_sym = mean_average_precision(index, queries, seen, b.hash, b.projection,
                                          QueryMode::symmetric).mean_ap;
      cp.map_asym = mean_average_precision(index, queries, seen, b.hash, b.projection,
                                           QueryMode::asymmetric).mean_ap;
      out.checkpoints.push_back(cp);
    }
  }

  out.sym = mean_average_precision(index, queries, labels, b.hash, b.projection,
                                   QueryMode::symmetric);
  out.asym = mean_average_precision(index, queries, labels, b.hash, b.projection,
                                    QueryMode::asymmetric);
  for (EvalRun* run : {&out.sym, &out.asym}) {
    run->cumulative_train_seconds = train_total;
    run->cumulative_refresh_seconds = refresh_total;
    run->config = config;
  }
  return out;
}

struct SweepRow {
  double aggressiveness = 0.0;
  double map_sym = 0.0;
  double map_asym = 0.0;
};

/// One fresh pipeline per C, all sharing the same seeds.
inline std::vector<SweepRow> run_c_sweep(const Eigen::Ref<const FeatureMatrix>& features,
                                         std::span<const LabelVector> labels,
                                         const QuerySet& queries, std::size_t classes,
                                         const PipelineConfig& base,
                                         std::span<const double> c_values) {
  detail::require(!c_values.empty(), "run_c_sweep: no C values given");
  for (double c : c_values) {
    detail::require(c > 0.0 && std::isfinite(c), "run_c_sweep: C values must be positive");
  }
  std::vector<SweepRow> rows;
  rows.reserve(c_values.size());
  for (double c : c_values) {
    PipelineConfig cfg = base;
    cfg.aggressiveness = c;
    const auto res = run_stream_protocol(features, labels, queries, classes, cfg);
    rows.push_back({c, res.sym.mean_ap, res.asym.mean_ap});
  }
  return rows;
}

}  // namespace ohweu
