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

// The command-line workflows (init, stream, query, eval, sweep-c,
// gen-synth) as plain functions. tools/ohweu.cpp only parses arguments.

#pragma once

#include <sys/file.h>
#include <fcntl.h>
#include <unistd.h>

#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ohweu/eval.hpp"
#include "ohweu/index.hpp"
#include "ohweu/io.hpp"
#include "ohweu/pipeline.hpp"

namespace ohweu::cli {

namespace fs = std::filesystem;

constexpr int kMetricsSchemaVersion = 1;
constexpr int kEvalSchemaVersion = 1;

/// Advisory exclusive lock on "<path>.lock", held for the object's lifetime.
class FileLock {
 public:
  explicit FileLock(const fs::path& target) {
    fs::path lock_path = target;
    lock_path += ".lock";
    fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) throw FormatError("cannot create lock file " + lock_path.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw std::runtime_error(target.string() + " is locked by another process");
    }
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }

 private:
  int fd_ = -1;
};

/// Shortest text that reads back to exactly v.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline void echo_config(std::ostream& out, const ModelBundle& b) {
  const Seeds s = derive_seeds(b.config.seed);
  out << "bits=" << b.config.bits << " aggressiveness=" << format_double(b.config.aggressiveness)
      << " init_size=" << b.config.initial_points << " chunk=" << b.config.chunk_size
      << " itq_iters=" << b.config.itq_iters << " classes=" << b.classes
      << " dim=" << b.hash.dim() << '\n'
      << "seed=" << b.config.seed << " hash_seed=" << s.hash << " label_seed=" << s.label
      << " projection_seed=" << s.projection << '\n';
}

inline std::vector<LabelVector> load_aligned_labels(const fs::path& labels_path,
                                                    std::size_t expected, std::size_t* classes) {
  auto table = io::read_labels(labels_path);
  if (table.labels.size() != expected) {
    throw FormatError(labels_path.string() + ": has " + std::to_string(table.labels.size()) +
                      " rows but the feature file has " + std::to_string(expected));
  }
  if (classes) *classes = table.classes;
  return std::move(table.labels);
}

// ---------------------------------------------------------------------------
// gen-synth
// ---------------------------------------------------------------------------

struct GenSynthOptions {
  SyntheticParams params;
  std::size_t queries = 500;
  fs::path out_dir = ".";
};

struct DatasetPaths {
  fs::path features, labels, query_features, query_labels;
};

inline DatasetPaths dataset_paths(const fs::path& dir) {
  return {dir / "db.ohwf", dir / "db.labels", dir / "queries.ohwf", dir / "queries.labels"};
}

/// Writes db.ohwf/db.labels (streamed database) and queries.ohwf/
/// queries.labels (held-out queries) into out_dir.
inline DatasetPaths cmd_gen_synth(const GenSynthOptions& opt, std::ostream& log) {
  const auto all = gen_synthetic_multilabel(opt.params);
  auto [db, queries] = split_queries(all, opt.queries, opt.params.seed + 1);
  fs::create_directories(opt.out_dir);
  const auto paths = dataset_paths(opt.out_dir);
  io::write_features(paths.features, db.features);
  io::write_labels(paths.labels, {opt.params.classes, db.labels});
  io::write_features(paths.query_features, queries.features);
  io::write_labels(paths.query_labels, {opt.params.classes, queries.labels});
  log << "gen-synth: N=" << opt.params.points << " D=" << opt.params.dim
      << " C=" << opt.params.classes << " queries=" << opt.queries
      << " labels_mean=" << format_double(opt.params.labels_per_point_mean)
      << " spread=" << format_double(opt.params.cluster_spread) << " seed=" << opt.params.seed
      << " -> " << opt.out_dir.string() << '\n';
  return paths;
}

// ---------------------------------------------------------------------------
// init
// ---------------------------------------------------------------------------

struct InitOptions {
  fs::path features, labels, bundle_out;
  PipelineConfig config;
};

inline ModelBundle cmd_init(const InitOptions& opt, std::ostream& log) {
  const FeatureMatrix x = io::read_features(opt.features);
  std::size_t classes = 0;
  load_aligned_labels(opt.labels, static_cast<std::size_t>(x.rows()), &classes);
  FileLock lock(opt.bundle_out);
  ModelBundle b = initialize_bundle(x, classes, opt.config);
  io::save_bundle(opt.bundle_out, b);
  log << "init: wrote " << opt.bundle_out.string() << '\n';
  echo_config(log, b);
  return b;
}

// ---------------------------------------------------------------------------
// stream
// ---------------------------------------------------------------------------

enum class RefreshPolicy { per_chunk, never };

struct StreamOptions {
  fs::path bundle;
  std::optional<fs::path> bundle_out;  // defaults to `bundle`
  fs::path features, labels;
  fs::path index_out;
  std::optional<std::size_t> chunk_size;     // defaults to the bundle's
  std::optional<double> aggressiveness;      // defaults to the bundle's
  RefreshPolicy refresh = RefreshPolicy::per_chunk;
  std::optional<fs::path> metrics_out;
  std::size_t snapshot_every = 0;  // chunks; 0 disables checkpoint snapshots
};

inline fs::path checkpoint_path(const fs::path& base, std::size_t chunk) {
  fs::path p = base;
  p += ".ckpt" + std::to_string(chunk);
  return p;
}

struct StreamSummary {
  ModelBundle bundle;
  CodeIndex index{1};
  std::vector<ChunkRecord> chunks;
};

/// Indexes the first m points (the initial batch) without learning, then
/// streams the remaining points through the learners chunk by chunk. The
/// bundle, index and metrics CSV are rewritten atomically at every chunk
/// boundary.
inline StreamSummary cmd_stream(const StreamOptions& opt, std::ostream& log) {
  using clock = std::chrono::steady_clock;
  const fs::path bundle_out = opt.bundle_out.value_or(opt.bundle);
  FileLock lock(bundle_out);
  StreamSummary out;
  out.bundle = io::load_bundle(opt.bundle);
  ModelBundle& b = out.bundle;
  if (opt.chunk_size) {
    detail::require(*opt.chunk_size >= 1, "stream: chunk size must be positive");
    b.config.chunk_size = *opt.chunk_size;
  }
  if (opt.aggressiveness) {
    detail::require_aggressiveness(*opt.aggressiveness);
    b.config.aggressiveness = *opt.aggressiveness;
    b.projection.aggressiveness = *opt.aggressiveness;
  }

  const FeatureMatrix x = io::read_features(opt.features);
  std::size_t classes = 0;
  const auto labels = load_aligned_labels(opt.labels, static_cast<std::size_t>(x.rows()), &classes);
  if (classes != b.classes) {
    throw FormatError(opt.labels.string() + ": C=" + std::to_string(classes) +
                      " but the bundle was built for C=" + std::to_string(b.classes));
  }
  if (static_cast<std::size_t>(x.cols()) != b.hash.dim()) {
    throw FormatError(opt.features.string() + ": D=" + std::to_string(x.cols()) +
                      " but the bundle expects D=" + std::to_string(b.hash.dim()));
  }
  const std::size_t n = labels.size();
  const std::size_t m = std::min(b.config.initial_points, n);

  out.index = CodeIndex(b.config.bits);
  CodeIndex& index = out.index;
  for (std::size_t i = 0; i < m; ++i) {
    index.insert(encode(b.hash, x.row(static_cast<Eigen::Index>(i)).transpose()));
  }

  std::ostringstream csv;
  csv << "# ohweu-metrics v" << kMetricsSchemaVersion << " bits=" << b.config.bits
      << " aggressiveness=" << format_double(b.config.aggressiveness)
      << " chunk=" << b.config.chunk_size << " seed=" << b.config.seed << '\n'
      << "chunk,points_seen,train_seconds,refresh_seconds,cumulative_seconds\n";

  auto persist = [&](const fs::path& bundle_path, const fs::path& index_path) {
    io::save_bundle(bundle_path, b);
    io::save_index(index_path, index);
  };

  double cumulative = 0.0;
  std::size_t chunk = 0;
  for (std::size_t start = m; start < n; start += b.config.chunk_size) {
    const std::size_t end = std::min(n, start + b.config.chunk_size);
    const auto t0 = clock::now();
    for (std::size_t i = start; i < end; ++i) {
      const auto res = process_stream_point(b.projection, b.labels, b.hash,
                                            x.row(static_cast<Eigen::Index>(i)).transpose(),
                                            labels[i]);
      index.insert(res.code);
    }
    const auto t1 = clock::now();
    if (opt.refresh == RefreshPolicy::per_chunk) index.refresh_projected_codes(b.projection.P);
    const auto t2 = clock::now();

    ChunkRecord rec;
    rec.chunk = ++chunk;
    rec.points_seen = end - m;
    rec.train_seconds = std::chrono::duration<double>(t1 - t0).count();
    rec.refresh_seconds = opt.refresh == RefreshPolicy::per_chunk
                              ? std::chrono::duration<double>(t2 - t1).count()
                              : 0.0;
    cumulative += rec.train_seconds + rec.refresh_seconds;
    rec.cumulative_seconds = cumulative;
    out.chunks.push_back(rec);
    csv << rec.chunk << ',' << rec.points_seen << ',' << format_double(rec.train_seconds) << ','
        << format_double(rec.refresh_seconds) << ',' << format_double(rec.cumulative_seconds)
        << '\n';

    persist(bundle_out, opt.index_out);
    if (opt.metrics_out) io::write_file_atomic(*opt.metrics_out, csv.str());
    if (opt.snapshot_every > 0 && chunk % opt.snapshot_every == 0) {
      persist(checkpoint_path(bundle_out, chunk), checkpoint_path(opt.index_out, chunk));
    }
  }
  if (chunk == 0) {
    if (opt.refresh == RefreshPolicy::per_chunk) index.refresh_projected_codes(b.projection.P);
    persist(bundle_out, opt.index_out);
    if (opt.metrics_out) io::write_file_atomic(*opt.metrics_out, csv.str());
  }
  log << "stream: " << (n - m) << " points in " << chunk << " chunks, index size "
      << index.size() << ", refresh " << (opt.refresh == RefreshPolicy::per_chunk ? "per-chunk" : "never")
      << '\n';
  echo_config(log, b);
  return out;
}

// ---------------------------------------------------------------------------
// query
// ---------------------------------------------------------------------------

struct QueryOptions {
  fs::path bundle, index, query_features;
  std::size_t k = 10;
  QueryMode mode = QueryMode::asymmetric;
  std::optional<fs::path> out;  // CSV; stdout when absent
};

inline std::string cmd_query(const QueryOptions& opt, std::ostream& log) {
  const ModelBundle b = io::load_bundle(opt.bundle);
  const CodeIndex index = io::load_index(opt.index);
  const FeatureMatrix q = io::read_features(opt.query_features);
  detail::require(static_cast<std::size_t>(q.cols()) == b.hash.dim(),
                  "query: feature dimension does not match the bundle");
  std::ostringstream csv;
  csv << "query,rank,id,distance\n";
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const Eigen::VectorXd f = q.row(i).transpose();
    const auto hits = opt.mode == QueryMode::symmetric
                          ? index.query_symmetric(b.projection.P, encode(b.hash, f), opt.k)
                          : index.query_asymmetric(b.projection.P, b.projection.R, f, opt.k);
    for (std::size_t r = 0; r < hits.size(); ++r) {
      csv << i << ',' << r + 1 << ',' << hits[r].id << ',' << hits[r].distance << '\n';
    }
  }
  if (opt.out) io::write_file_atomic(*opt.out, csv.str());
  log << "query: " << q.rows() << " queries, k=" << opt.k << ", mode=" << to_string(opt.mode)
      << ", seed=" << b.config.seed << '\n';
  return csv.str();
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOptions {
  fs::path bundle, index, query_features, query_labels, db_labels;
  std::vector<QueryMode> modes{QueryMode::symmetric, QueryMode::asymmetric};
  std::vector<std::size_t> checkpoints;  // chunk numbers written by stream --snapshot-every
  std::optional<fs::path> out;
};

struct EvalRow {
  std::string checkpoint;
  EvalRun run;
  std::size_t database_size = 0;
};

inline std::string eval_csv_header() {
  return "checkpoint,mode,database_size,rounds,queries,skipped,map,random_baseline,bits,"
         "aggressiveness,seed\n";
}

/// Evaluates each requested checkpoint snapshot, then the final state.
inline std::vector<EvalRow> cmd_eval(const EvalOptions& opt, std::ostream& log,
                                     std::string* csv_out = nullptr) {
  const FeatureMatrix qf = io::read_features(opt.query_features);
  std::size_t q_classes = 0, db_classes = 0;
  QuerySet queries;
  queries.features = qf;
  queries.labels = load_aligned_labels(opt.query_labels, static_cast<std::size_t>(qf.rows()),
                                       &q_classes);
  const auto db_table = io::read_labels(opt.db_labels);
  db_classes = db_table.classes;
  if (q_classes != db_classes) throw FormatError("query and database label files disagree on C");

  std::vector<std::pair<std::string, std::pair<fs::path, fs::path>>> states;
  for (std::size_t c : opt.checkpoints) {
    states.push_back({std::to_string(c),
                      {checkpoint_path(opt.bundle, c), checkpoint_path(opt.index, c)}});
  }
  states.push_back({"final", {opt.bundle, opt.index}});

  std::vector<EvalRow> rows;
  std::ostringstream csv;
  csv << "# ohweu-eval v" << kEvalSchemaVersion << '\n' << eval_csv_header();
  for (const auto& [name, files] : states) {
    const ModelBundle b = io::load_bundle(files.first);
    const CodeIndex index = io::load_index(files.second);
    if (index.size() > db_table.labels.size()) {
      throw FormatError("index has more entries than the database label file");
    }
    const std::span<const LabelVector> db_labels(db_table.labels.data(), index.size());
    for (QueryMode mode : opt.modes) {
      EvalRow row{name, mean_average_precision(index, queries, db_labels, b.hash, b.projection, mode),
                  index.size()};
      row.run.config = b.config;
      csv << name << ',' << to_string(mode) << ',' << row.database_size << ',' << row.run.rounds
          << ',' << row.run.query_ids.size() << ',' << row.run.skipped_queries << ','
          << format_double(row.run.mean_ap) << ',' << format_double(row.run.random_baseline)
          << ',' << b.config.bits << ',' << format_double(b.config.aggressiveness) << ','
          << b.config.seed << '\n';
      log << "eval[" << name << "] " << to_string(mode) << " mAP=" << row.run.mean_ap
          << " random=" << row.run.random_baseline << " seed=" << b.config.seed << '\n';
      rows.push_back(std::move(row));
    }
  }
  if (opt.out) io::write_file_atomic(*opt.out, csv.str());
  if (csv_out) *csv_out = csv.str();
  return rows;
}

// ---------------------------------------------------------------------------
// sweep-c
// ---------------------------------------------------------------------------

struct SweepOptions {
  fs::path features, labels, query_features, query_labels;
  PipelineConfig config;
  std::vector<double> c_values;
  std::optional<fs::path> out;
};

inline std::vector<SweepRow> cmd_sweep_c(const SweepOptions& opt, std::ostream& log,
                                         std::string* csv_out = nullptr) {
  const FeatureMatrix x = io::read_features(opt.features);
  std::size_t classes = 0, q_classes = 0;
  const auto labels = load_aligned_labels(opt.labels, static_cast<std::size_t>(x.rows()), &classes);
  QuerySet queries;
  queries.features = io::read_features(opt.query_features);
  queries.labels = load_aligned_labels(
      opt.query_labels, static_cast<std::size_t>(queries.features.rows()), &q_classes);
  if (q_classes != classes) throw FormatError("query and database label files disagree on C");

  const auto rows = run_c_sweep(x, labels, queries, classes, opt.config, opt.c_values);
  std::ostringstream csv;
  csv << "aggressiveness,map_sym,map_asym,bits,seed\n";
  for (const auto& r : rows) {
    csv << format_double(r.aggressiveness) << ',' << format_double(r.map_sym) << ','
        << format_double(r.map_asym) << ',' << opt.config.bits << ',' << opt.config.seed << '\n';
    log << "sweep-c: C=" << r.aggressiveness << " sym=" << r.map_sym << " asym=" << r.map_asym
        << '\n';
  }
  log << "sweep-c: seed=" << opt.config.seed << '\n';
  if (opt.out) io::write_file_atomic(*opt.out, csv.str());
  if (csv_out) *csv_out = csv.str();
  return rows;
}

}  // namespace ohweu::cli
