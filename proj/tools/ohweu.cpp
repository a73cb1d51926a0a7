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

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ohweu/commands.hpp"

namespace {

// Exit codes.
constexpr int kExitInvalidArgument = 3;
constexpr int kExitFormat = 4;
constexpr int kExitStale = 5;
constexpr int kExitDegenerate = 6;
constexpr int kExitOther = 1;

const std::map<std::string, ohweu::QueryMode> kModes{
    {"sym", ohweu::QueryMode::symmetric}, {"asym", ohweu::QueryMode::asymmetric}};

}  // namespace

int main(int argc, char** argv) {
  using namespace ohweu;
  CLI::App app{"Online hashing with projection-function updates"};
  app.require_subcommand(1);

  // gen-synth
  cli::GenSynthOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-synth", "Write a synthetic multi-label dataset");
  gen_cmd->add_option("--out", gen.out_dir, "Output directory")->default_val(".");
  gen_cmd->add_option("--points", gen.params.points, "Total points incl. queries")
      ->default_val(5000);
  gen_cmd->add_option("--dim", gen.params.dim, "Feature dimension")->default_val(64);
  gen_cmd->add_option("--classes", gen.params.classes, "Number of classes")->default_val(8);
  gen_cmd->add_option("--queries", gen.queries, "Held-out queries")->default_val(500);
  gen_cmd->add_option("--labels-mean", gen.params.labels_per_point_mean,
                      "Poisson mean of labels per point")
      ->default_val(1.5);
  gen_cmd->add_option("--spread", gen.params.cluster_spread, "Noise standard deviation")
      ->default_val(1.0);
  gen_cmd->add_option("--seed", gen.params.seed, "Generator seed")->default_val(0);

  // init
  cli::InitOptions init;
  auto* init_cmd = app.add_subcommand("init", "Fit the hash stage and write a model bundle");
  init_cmd->add_option("--features", init.features, "Feature file (OHWF)")->required();
  init_cmd->add_option("--labels", init.labels, "Label file")->required();
  init_cmd->add_option("--bundle", init.bundle_out, "Output bundle")->required();
  init_cmd->add_option("--bits", init.config.bits, "Code length K")->default_val(32);
  init_cmd->add_option("--init-size", init.config.initial_points, "Initial batch m")
      ->default_val(300);
  init_cmd->add_option("--itq-iters", init.config.itq_iters, "ITQ iterations")->default_val(50);
  init_cmd->add_option("--aggressiveness", init.config.aggressiveness, "PA aggressiveness C")
      ->default_val(0.1);
  init_cmd->add_option("--chunk", init.config.chunk_size, "Chunk size")->default_val(1000);
  init_cmd->add_option("--seed", init.config.seed, "Seed")->default_val(0);

  // stream
  cli::StreamOptions stream;
  std::string refresh = "per-chunk";
  std::string bundle_out, metrics_out;
  std::size_t chunk = 0;
  double stream_c = 0.0;
  auto* stream_cmd = app.add_subcommand("stream", "Stream points through the online learners");
  stream_cmd->add_option("--bundle", stream.bundle, "Input bundle")->required();
  stream_cmd->add_option("--bundle-out", bundle_out, "Output bundle (default: overwrite input)");
  stream_cmd->add_option("--features", stream.features, "Feature file (OHWF)")->required();
  stream_cmd->add_option("--labels", stream.labels, "Label file")->required();
  stream_cmd->add_option("--index", stream.index_out, "Output index file")->required();
  auto* chunk_opt = stream_cmd->add_option("--chunk", chunk, "Chunk size (default: bundle's)");
  auto* c_opt =
      stream_cmd->add_option("--aggressiveness", stream_c, "Override C (default: bundle's)");
  stream_cmd->add_option("--refresh", refresh, "per-chunk | never")
      ->check(CLI::IsMember({"per-chunk", "never"}))
      ->default_val("per-chunk");
  stream_cmd->add_option("--metrics-out", metrics_out, "Per-chunk timing CSV");
  stream_cmd->add_option("--snapshot-every", stream.snapshot_every,
                         "Write bundle/index snapshots every N chunks")
      ->default_val(0);

  // query
  cli::QueryOptions query;
  std::string query_mode = "asym";
  std::string query_out;
  auto* query_cmd = app.add_subcommand("query", "Top-k retrieval for a query feature file");
  query_cmd->add_option("--bundle", query.bundle, "Model bundle")->required();
  query_cmd->add_option("--index", query.index, "Index file")->required();
  query_cmd->add_option("--queries", query.query_features, "Query features (OHWF)")->required();
  query_cmd->add_option("--k", query.k, "Results per query")->default_val(10);
  query_cmd->add_option("--mode", query_mode, "sym | asym")
      ->check(CLI::IsMember({"sym", "asym"}))
      ->default_val("asym");
  query_cmd->add_option("--out", query_out, "Output CSV (default: stdout)");

  // eval
  cli::EvalOptions eval;
  std::string eval_mode = "both";
  std::string eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "mAP of held-out queries against the index");
  eval_cmd->add_option("--bundle", eval.bundle, "Model bundle")->required();
  eval_cmd->add_option("--index", eval.index, "Index file")->required();
  eval_cmd->add_option("--queries", eval.query_features, "Query features (OHWF)")->required();
  eval_cmd->add_option("--query-labels", eval.query_labels, "Query labels")->required();
  eval_cmd->add_option("--db-labels", eval.db_labels, "Database labels")->required();
  eval_cmd->add_option("--mode", eval_mode, "sym | asym | both")
      ->check(CLI::IsMember({"sym", "asym", "both"}))
      ->default_val("both");
  eval_cmd->add_option("--checkpoints", eval.checkpoints,
                       "Chunk numbers of stream snapshots to evaluate");
  eval_cmd->add_option("--out", eval_out, "Output CSV (default: stdout)");

  // sweep-c
  cli::SweepOptions sweep;
  std::string sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep-c", "Train one pipeline per C and report mAP");
  sweep_cmd->add_option("--features", sweep.features, "Database features")->required();
  sweep_cmd->add_option("--labels", sweep.labels, "Database labels")->required();
  sweep_cmd->add_option("--queries", sweep.query_features, "Query features")->required();
  sweep_cmd->add_option("--query-labels", sweep.query_labels, "Query labels")->required();
  sweep_cmd->add_option("--c-values", sweep.c_values, "Aggressiveness values")->required();
  sweep_cmd->add_option("--bits", sweep.config.bits, "Code length K")->default_val(32);
  sweep_cmd->add_option("--init-size", sweep.config.initial_points, "Initial batch m")
      ->default_val(300);
  sweep_cmd->add_option("--itq-iters", sweep.config.itq_iters, "ITQ iterations")
      ->default_val(50);
  sweep_cmd->add_option("--chunk", sweep.config.chunk_size, "Chunk size")->default_val(1000);
  sweep_cmd->add_option("--seed", sweep.config.seed, "Seed")->default_val(0);
  sweep_cmd->add_option("--out", sweep_out, "Output CSV (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) {
      cli::cmd_gen_synth(gen, std::cout);
    } else if (init_cmd->parsed()) {
      cli::cmd_init(init, std::cout);
    } else if (stream_cmd->parsed()) {
      if (!bundle_out.empty()) stream.bundle_out = bundle_out;
      if (!metrics_out.empty()) stream.metrics_out = metrics_out;
      if (chunk_opt->count() > 0) stream.chunk_size = chunk;
      if (c_opt->count() > 0) stream.aggressiveness = stream_c;
      stream.refresh = refresh == "never" ? cli::RefreshPolicy::never
                                          : cli::RefreshPolicy::per_chunk;
      const auto summary = cli::cmd_stream(stream, std::cerr);
      std::cout << "chunk,points_seen,train_seconds,refresh_seconds,cumulative_seconds\n";
      for (const auto& r : summary.chunks) {
        std::cout << r.chunk << ',' << r.points_seen << ',' << cli::format_double(r.train_seconds)
                  << ',' << cli::format_double(r.refresh_seconds) << ','
                  << cli::format_double(r.cumulative_seconds) << '\n';
      }
    } else if (query_cmd->parsed()) {
      query.mode = kModes.at(query_mode);
      if (!query_out.empty()) query.out = query_out;
      const auto csv = cli::cmd_query(query, std::cerr);
      if (!query.out) std::cout << csv;
    } else if (eval_cmd->parsed()) {
      if (eval_mode != "both") eval.modes = {kModes.at(eval_mode)};
      if (!eval_out.empty()) eval.out = eval_out;
      std::string csv;
      cli::cmd_eval(eval, std::cerr, &csv);
      if (!eval.out) std::cout << csv;
    } else if (sweep_cmd->parsed()) {
      if (!sweep_out.empty()) sweep.out = sweep_out;
      std::string csv;
      cli::cmd_sweep_c(sweep, std::cerr, &csv);
      if (!sweep.out) std::cout << csv;
    }
  } catch (const StaleProjection& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitStale;
  } catch (const DegenerateData& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalidArgument;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return 0;
}
