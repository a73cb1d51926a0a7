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

// Minimal in-memory use of the library: fit the hash stage on a small
// initial batch, stream the rest through the learners, refresh the
// projected codes and run one query each way.

#include <iostream>

#include "ohweu/ohweu.hpp"

int main() {
  using namespace ohweu;

  SyntheticParams params;
  params.points = 3000;
  params.seed = 7;
  auto [db, queries] = split_queries(gen_synthetic_multilabel(params), 200, 8);

  PipelineConfig config;  // K=32, C=0.1, m=300
  config.seed = 7;
  ModelBundle model = initialize_bundle(db.features, params.classes, config);

  CodeIndex index(config.bits);
  for (std::size_t i = 0; i < db.size(); ++i) {
    const Eigen::VectorXd x = db.features.row(static_cast<Eigen::Index>(i)).transpose();
    if (i < config.initial_points) {
      index.insert(encode(model.hash, x));
    } else {
      index.insert(process_stream_point(model.projection, model.labels, model.hash, x,
                                        db.labels[i])
                       .code);
    }
  }
  // The only step needed after learning: re-project stored codes, no features.
  index.refresh_projected_codes(model.projection.P);

  const Eigen::VectorXd q = queries.features.row(0).transpose();
  const auto sym = index.query_symmetric(model.projection.P, encode(model.hash, q), 5);
  const auto asym = index.query_asymmetric(model.projection.P, model.projection.R, q, 5);
  std::cout << "top-5 sym :";
  for (const auto& h : sym) std::cout << ' ' << h.id << '(' << h.distance << ')';
  std::cout << "\ntop-5 asym:";
  for (const auto& h : asym) std::cout << ' ' << h.id << '(' << h.distance << ')';
  std::cout << '\n';

  for (QueryMode mode : {QueryMode::symmetric, QueryMode::asymmetric}) {
    const auto run = mean_average_precision(index, queries, db.labels, model.hash,
                                            model.projection, mode);
    std::cout << to_string(mode) << " mAP = " << run.mean_ap
              << " (random ranking ~ " << run.random_baseline << ")\n";
  }
}
