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

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ohweu/eval.hpp"
#include "ohweu/io.hpp"
#include "support/temp_dir.hpp"

using namespace ohweu;
using testing_support::TempDir;

namespace {

ModelBundle small_bundle(std::uint64_t seed) {
  SyntheticParams p;
  p.points = 400;
  p.dim = 12;
  p.classes = 5;
  p.seed = seed;
  const auto ds = gen_synthetic_multilabel(p);
  PipelineConfig cfg;
  cfg.bits = 8;
  cfg.initial_points = 100;
  cfg.itq_iters = 5;
  cfg.seed = seed;
  auto b = initialize_bundle(ds.features, 5, cfg);
  for (Eigen::Index i = 100; i < 150; ++i) {
    process_stream_point(b.projection, b.labels, b.hash, ds.features.row(i).transpose(),
                         ds.labels[static_cast<std::size_t>(i)]);
  }
  return b;
}

void put_u32(std::string& s, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s[at + i] = static_cast<char>((v >> (8 * i)) & 0xff);
}

}  // namespace

TEST_CASE("feature file round trip and layout", "[io]") {
  FeatureMatrix x(2, 3);
  x << 1.0, -2.5, 0.0, 3.25, 1e-3, -7.0;
  const auto bytes = io::encode_features(x);
  REQUIRE(bytes.size() == 16 + 6 * 4);
  CHECK(bytes.substr(0, 4) == "OHWF");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);  // version, little-endian
  CHECK(static_cast<unsigned char>(bytes[8]) == 2);  // N
  CHECK(static_cast<unsigned char>(bytes[12]) == 3);  // D
  const auto back = io::decode_features(bytes, "mem");
  CHECK(back.rows() == 2);
  CHECK(back.cols() == 3);
  CHECK(back == x.cast<float>().cast<double>());

  TempDir dir;
  io::write_features(dir / "x.ohwf", x);
  CHECK(io::read_features(dir / "x.ohwf") == back);
  CHECK_FALSE(std::filesystem::exists(dir / "x.ohwf.tmp"));
}

TEST_CASE("malformed feature files are rejected", "[io]") {
  FeatureMatrix x = FeatureMatrix::Ones(3, 2);
  const auto good = io::encode_features(x);

  CHECK_THROWS_AS(io::decode_features("OHW", "m"), FormatError);
  auto magic = good;
  magic[0] = 'X';
  CHECK_THROWS_AS(io::decode_features(magic, "m"), FormatError);
  auto version = good;
  put_u32(version, 4, 2);
  CHECK_THROWS_AS(io::decode_features(version, "m"), FormatError);
  CHECK_THROWS_AS(io::decode_features(good.substr(0, good.size() - 1), "m"), FormatError);
  CHECK_THROWS_AS(io::decode_features(good + "x", "m"), FormatError);
  auto nan = good;
  put_u32(nan, 16, 0x7fc00000u);
  CHECK_THROWS_AS(io::decode_features(nan, "m"), FormatError);
  auto huge = good;
  put_u32(huge, 8, 0xffffffffu);
  CHECK_THROWS_AS(io::decode_features(huge, "m"), FormatError);
  CHECK_THROWS_AS(io::read_features("/nonexistent/dir/x.ohwf"), FormatError);
}

TEST_CASE("label file round trip", "[io]") {
  io::LabelTable t;
  t.classes = 5;
  t.labels = {LabelVector{0}, LabelVector{4, 1}, LabelVector{2, 3}};
  const auto text = io::encode_labels(t);
  CHECK(text == "C=5\n0\n1 4\n2 3\n");
  const auto back = io::decode_labels(text, "mem");
  CHECK(back.classes == 5);
  CHECK(back.labels == t.labels);
  // Whitespace and order are not significant.
  CHECK(io::decode_labels("C=5\n  3   2 \n", "m").labels[0] == LabelVector{2, 3});
}

TEST_CASE("malformed label files are rejected", "[io]") {
  CHECK_THROWS_AS(io::decode_labels("", "m"), FormatError);
  CHECK_THROWS_AS(io::decode_labels("classes=3\n0\n", "m"), FormatError);
  CHECK_THROWS_AS(io::decode_labels("C=0\n", "m"), FormatError);
  CHECK_THROWS_AS(io::decode_labels("C=3x\n", "m"), FormatError);
  CHECK_THROWS_AS(io::decode_labels("C=3\n3\n", "m"), FormatError);
  CHECK_THROWS_AS(io::decode_labels("C=3\n-1\n", "m"), FormatError);
  CHECK_THROWS_AS(io::decode_labels("C=3\n1 a\n", "m"), FormatError);
  CHECK_THROWS_AS(io::decode_labels("C=3\n0\n\n1\n", "m"), FormatError);
  CHECK_THROWS_AS(io::decode_labels("C=3\n1 1\n", "m"), FormatError);
  io::LabelTable t;
  t.classes = 2;
  t.labels = {LabelVector{2}};
  CHECK_THROWS_AS(io::encode_labels(t), InvalidArgument);
}

TEST_CASE("bundle round trip is exact and byte-stable", "[io]") {
  const auto b = small_bundle(4);
  TempDir dir;
  io::save_bundle(dir / "a.ohwb", b);
  const auto loaded = io::load_bundle(dir / "a.ohwb");
  CHECK(loaded.config.bits == b.config.bits);
  CHECK(loaded.config.aggressiveness == b.config.aggressiveness);
  CHECK(loaded.config.initial_points == b.config.initial_points);
  CHECK(loaded.config.chunk_size == b.config.chunk_size);
  CHECK(loaded.config.itq_iters == b.config.itq_iters);
  CHECK(loaded.config.seed == b.config.seed);
  CHECK(loaded.classes == 5);
  CHECK(loaded.hash.W == b.hash.W);
  CHECK(loaded.hash.b == b.hash.b);
  CHECK(loaded.hash.feature_mean == b.hash.feature_mean);
  CHECK(loaded.hash.itq_rotation == b.hash.itq_rotation);
  CHECK(loaded.labels.L == b.labels.L);
  CHECK(loaded.labels.seed == b.labels.seed);
  CHECK(loaded.projection.P == b.projection.P);
  CHECK(loaded.projection.R == b.projection.R);
  CHECK(loaded.projection.rounds_seen == 50);
  CHECK(loaded.projection.seed == b.projection.seed);

  io::save_bundle(dir / "b.ohwb", loaded);
  CHECK(io::read_file(dir / "a.ohwb") == io::read_file(dir / "b.ohwb"));
}

TEST_CASE("malformed bundles are rejected", "[io]") {
  const auto good = io::encode_bundle(small_bundle(1));
  CHECK_THROWS_AS(io::decode_bundle(good.substr(0, good.size() - 8), "m"), FormatError);
  CHECK_THROWS_AS(io::decode_bundle(good + std::string(1, '\0'), "m"), FormatError);
  auto magic = good;
  magic[3] = 'F';
  CHECK_THROWS_AS(io::decode_bundle(magic, "m"), FormatError);
  auto version = good;
  put_u32(version, 4, 99);
  CHECK_THROWS_AS(io::decode_bundle(version, "m"), FormatError);

  auto b = small_bundle(1);
  b.projection.R = Eigen::MatrixXd::Zero(3, 8);
  CHECK_THROWS_AS(io::decode_bundle(io::encode_bundle(b), "m"), FormatError);
  b = small_bundle(1);
  b.classes = 6;
  CHECK_THROWS_AS(io::decode_bundle(io::encode_bundle(b), "m"), FormatError);
}

TEST_CASE("index round trip keeps codes, cache and freshness", "[io]") {
  std::mt19937_64 rng(3);
  CodeIndex idx(70);
  auto code = [&] {
    std::vector<Sign> s(70);
    for (auto& v : s) v = (rng() & 1) ? 1 : -1;
    return BinaryCode(s);
  };
  for (int i = 0; i < 40; ++i) idx.insert(code());
  Eigen::MatrixXd P = Eigen::MatrixXd::Random(70, 70);
  idx.refresh_projected_codes(P);
  for (int i = 0; i < 3; ++i) idx.insert(code());  // unprojected tail

  TempDir dir;
  io::save_index(dir / "i.ohwi", idx);
  auto back = io::load_index(dir / "i.ohwi");
  CHECK(back.size() == 43);
  CHECK(back.codes_snapshot() == idx.codes_snapshot());
  CHECK(back.projected_snapshot() == idx.projected_snapshot());
  CHECK(back.projection_snapshot() == P);
  CHECK(back.projection_version() == 1);
  CHECK_FALSE(back.is_fresh(P));
  back.refresh_projected_codes(P);
  CHECK(back.is_fresh(P));

  io::save_index(dir / "j.ohwi", io::load_index(dir / "i.ohwi"));
  CHECK(io::read_file(dir / "i.ohwi") == io::read_file(dir / "j.ohwi"));

  // An index that was never refreshed has an empty projection snapshot.
  CodeIndex raw(5);
  raw.insert(BinaryCode{1, -1, 1, -1, 1});
  const auto raw_back = io::decode_index(io::encode_index(raw), "m");
  CHECK(raw_back.size() == 1);
  CHECK(raw_back.projected_snapshot().empty());
}

TEST_CASE("malformed index files are rejected", "[io]") {
  CodeIndex idx(3);
  idx.insert(BinaryCode{1, 1, -1});
  idx.refresh_projected_codes(Eigen::MatrixXd::Identity(3, 3));
  const auto good = io::encode_index(idx);
  CHECK_THROWS_AS(io::decode_index(good.substr(0, good.size() - 1), "m"), FormatError);
  CHECK_THROWS_AS(io::decode_index(good + "12345678", "m"), FormatError);
  // Set a padding bit in the last stored word.
  auto padded = good;
  padded[padded.size() - 1] = static_cast<char>(0x80);
  CHECK_THROWS_AS(io::decode_index(padded, "m"), FormatError);
  auto magic = good;
  magic[0] = 'Z';
  CHECK_THROWS_AS(io::decode_index(magic, "m"), FormatError);
}
