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

// Per-bit Passive-Aggressive learners.
//
// Every bit j owns two linear predictors: column j of P acts on the fixed
// binary code h (database side), column j of R acts on the raw feature x
// (query side). Both are trained with the PA-I soft-margin step against bit j
// of the label-derived target code g*. Bits never interact.

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ohweu/core.hpp"
#include "ohweu/hash_init.hpp"
#include "ohweu/label_lsh.hpp"

namespace ohweu {

constexpr double kDefaultAggressiveness = 0.1;

/// Result of one PA step on a single weight vector.
struct PaStep {
  Eigen::VectorXd weights;
  double tau = 0.0;
};

inline double hinge(double signed_margin) noexcept {
  return signed_margin >= 1.0 ? 0.0 : 1.0 - signed_margin;
}

inline double hinge_loss_code(Sign g_star, const Eigen::Ref<const Eigen::VectorXd>& p,
                              const BinaryCode& h) {
  detail::require(g_star == 1 || g_star == -1, "hinge_loss_code: label must be +-1");
  return hinge(g_star * h.dot(p));
}

inline double hinge_loss_feature(Sign g_star,
                                 const Eigen::Ref<const Eigen::VectorXd>& r,
                                 const Eigen::Ref<const Eigen::VectorXd>& x) {
  detail::require(g_star == 1 || g_star == -1, "hinge_loss_feature: label must be +-1");
  detail::require(r.size() == x.size(), "hinge_loss_feature: dimension mismatch");
  return hinge(g_star * r.dot(x));
}

namespace detail {

// In-place steps. Return tau; tau == 0 means the vector was not touched.

inline double pa_step_code(Eigen::Ref<Eigen::VectorXd> p, const BinaryCode& h,
                           Sign g_star, double aggressiveness) {
  const double loss = hinge_loss_code(g_star, p, h);
  if (loss == 0.0) return 0.0;
  // ||h||^2 = K for a sign vector.
  const double tau = std::min(aggressiveness, loss / static_cast<double>(h.size()));
  const double step = tau * g_star;
  for (std::size_t i = 0; i < h.size(); ++i) {
    p[static_cast<Eigen::Index>(i)] += h[i] > 0 ? step : -step;
  }
  return tau;
}

inline double pa_step_feature(Eigen::Ref<Eigen::VectorXd> r,
                              const Eigen::Ref<const Eigen::VectorXd>& x, Sign g_star,
                              double aggressiveness) {
  const double loss = hinge_loss_feature(g_star, r, x);
  if (loss == 0.0) return 0.0;
  const double norm2 = x.squaredNorm();
  if (norm2 == 0.0) {
    throw ZeroNormFeature("update_r: zero feature vector with positive loss");
  }
  const double tau = std::min(aggressiveness, loss / norm2);
  r.noalias() += (tau * g_star) * x;
  return tau;
}

inline void require_aggressiveness(double c) {
  require(c > 0.0 && std::isfinite(c), "aggressiveness C must be positive and finite");
}

}  // namespace detail

/// PA-I step on the code side: p + tau g* h with tau = min{C, loss / K}.
inline PaStep update_p(const Eigen::Ref<const Eigen::VectorXd>& p, const BinaryCode& h,
                       Sign g_star, double aggressiveness, std::size_t bits) {
  detail::require_aggressiveness(aggressiveness);
  detail::require(h.size() == bits && static_cast<std::size_t>(p.size()) == bits,
                  "update_p: p and h must both have length K=" + std::to_string(bits));
  PaStep out{p, 0.0};
  out.tau = detail::pa_step_code(out.weights, h, g_star, aggressiveness);
  return out;
}

/// PA-I step on the feature side: r + tau g* x with tau = min{C, loss / ||x||^2}.
inline PaStep update_r(const Eigen::Ref<const Eigen::VectorXd>& r,
                       const Eigen::Ref<const Eigen::VectorXd>& x, Sign g_star,
                       double aggressiveness) {
  detail::require_aggressiveness(aggressiveness);
  detail::require(r.size() == x.size(), "update_r: r and x dimensions differ");
  PaStep out{r, 0.0};
  out.tau = detail::pa_step_feature(out.weights, x, g_star, aggressiveness);
  return out;
}

// ---------------------------------------------------------------------------
// Online state
// ---------------------------------------------------------------------------

struct ProjectionState {
  Eigen::MatrixXd P;  // K x K, column j predicts bit j from h
  Eigen::MatrixXd R;  // D x K, column j predicts bit j from x
  double aggressiveness = kDefaultAggressiveness;
  std::uint64_t rounds_seen = 0;
  std::uint64_t seed = 0;

  std::size_t bits() const noexcept { return static_cast<std::size_t>(P.cols()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(R.rows()); }
};

/// P and R filled column-major from N(0, 1/K) and N(0, 1/D) respectively,
/// both from one generator seeded with `seed` (P first).
inline ProjectionState init_projection_state(std::size_t bits, std::size_t dim,
                                             double aggressiveness, std::uint64_t seed) {
  detail::require(bits >= 1 && dim >= 1, "init_projection_state: K and D must be positive");
  detail::require_aggressiveness(aggressiveness);
  ProjectionState s;
  s.aggressiveness = aggressiveness;
  s.seed = seed;
  std::mt19937_64 rng(seed);
  const auto k = static_cast<Eigen::Index>(bits);
  const auto d = static_cast<Eigen::Index>(dim);
  std::normal_distribution<double> p_init(0.0, 1.0 / std::sqrt(static_cast<double>(bits)));
  std::normal_distribution<double> r_init(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  s.P.resize(k, k);
  for (Eigen::Index c = 0; c < k; ++c)
    for (Eigen::Index r = 0; r < k; ++r) s.P(r, c) = p_init(rng);
  s.R.resize(d, k);
  for (Eigen::Index c = 0; c < k; ++c)
    for (Eigen::Index r = 0; r < d; ++r) s.R(r, c) = r_init(rng);
  return s;
}

// ---------------------------------------------------------------------------
// Mistake accounting
// ---------------------------------------------------------------------------

enum class LearnerSide { code, feature };

/// Per-bit mistake counters for both learners, and optionally the full
/// stream so competitor losses can be evaluated afterwards.
///
/// A mistake on bit j is a round where the prediction made *before* the
/// update, sgn(p_j^T h) or sgn(r_j^T x), disagrees with g*_j.
struct BoundLedger {
  std::size_t bits = 0;
  std::size_t dim = 0;
  double aggressiveness = kDefaultAggressiveness;
  std::uint64_t rounds = 0;
  std::vector<std::uint64_t> code_mistakes;
  std::vector<std::uint64_t> feature_mistakes;
  double max_feature_norm = 0.0;

  bool keep_stream = false;
  std::vector<BinaryCode> codes;
  std::vector<BinaryCode> targets;
  std::vector<Eigen::VectorXd> features;

  BoundLedger() = default;
  BoundLedger(std::size_t k, std::size_t d, double c, bool record_stream)
      : bits(k), dim(d), aggressiveness(c), code_mistakes(k, 0),
        feature_mistakes(k, 0), keep_stream(record_stream) {}

  std::uint64_t mistakes(LearnerSide side, std::size_t bit) const {
    return side == LearnerSide::code ? code_mistakes.at(bit) : feature_mistakes.at(bit);
  }
};

/// Sum over the recorded stream of the hinge loss suffered by a fixed
/// competitor u on bit `bit`.
inline double competitor_loss_sum(const BoundLedger& ledger,
                                  const Eigen::Ref<const Eigen::VectorXd>& u,
                                  LearnerSide side, std::size_t bit) {
  detail::require(ledger.rounds > 0, "competitor_loss_sum: ledger is empty");
  detail::require(ledger.keep_stream && ledger.targets.size() == ledger.rounds,
                  "competitor_loss_sum: ledger did not record the stream");
  detail::require(bit < ledger.bits, "competitor_loss_sum: bit out of range");
  double sum = 0.0;
  if (side == LearnerSide::code) {
    detail::require(static_cast<std::size_t>(u.size()) == ledger.bits,
                    "competitor_loss_sum: u must have length K in code mode");
    for (std::size_t i = 0; i < ledger.codes.size(); ++i) {
      sum += hinge_loss_code(ledger.targets[i][bit], u, ledger.codes[i]);
    }
  } else {
    detail::require(static_cast<std::size_t>(u.size()) == ledger.dim,
                    "competitor_loss_sum: u must have length D in feature mode");
    for (std::size_t i = 0; i < ledger.features.size(); ++i) {
      sum += hinge_loss_feature(ledger.targets[i][bit], u, ledger.features[i]);
    }
  }
  return sum;
}

/// Right-hand side of the PA-I mistake bound for competitor u:
///   code:    max{K, 1/C}      (||u||^2 + 2C sum l*)
///   feature: max{R_max^2, 1/C}(||u||^2 + 2C sum l*)
/// with R_max the largest feature norm seen on the stream.
inline double mistake_bound(const BoundLedger& ledger,
                            const Eigen::Ref<const Eigen::VectorXd>& u,
                            LearnerSide side, std::size_t bit) {
  detail::require(ledger.rounds > 0, "mistake_bound: ledger is empty");
  const double c = ledger.aggressiveness;
  const double scale = side == LearnerSide::code
                           ? static_cast<double>(ledger.bits)
                           : ledger.max_feature_norm * ledger.max_feature_norm;
  const double factor = std::max(scale, 1.0 / c);
  return factor * (u.squaredNorm() + 2.0 * c * competitor_loss_sum(ledger, u, side, bit));
}

// ---------------------------------------------------------------------------
// One round of the online loop
// ---------------------------------------------------------------------------

struct RoundResult {
  BinaryCode code;    // h = encode(x)
  BinaryCode target;  // g* = sgn(L^T y)
  std::size_t code_updates = 0;     // bits where P moved
  std::size_t feature_updates = 0;  // bits where R moved
};

/// Encode x, derive g* from y, and apply the PA step to every column of P
/// and R against the matching bit of g*. The state is untouched if any
/// precondition fails.
inline RoundResult process_stream_point(ProjectionState& state, const LabelHashMatrix& lm,
                                        const HashModel& hm,
                                        const Eigen::Ref<const Eigen::VectorXd>& x,
                                        const LabelVector& y,
                                        BoundLedger* ledger = nullptr) {
  const std::size_t k = state.bits();
  detail::require(lm.bits() == k && hm.bits() == k,
                  "process_stream_point: K differs between state, label matrix and hash model");
  detail::require(state.dim() == hm.dim() && static_cast<std::size_t>(x.size()) == hm.dim(),
                  "process_stream_point: feature dimension mismatch");
  detail::require(x.allFinite(), "process_stream_point: non-finite feature value");
  detail::require_aggressiveness(state.aggressiveness);
  const double norm2 = x.squaredNorm();
  if (norm2 == 0.0) {
    // r^T 0 = 0 gives loss 1 on every bit, and the step size is undefined.
    throw ZeroNormFeature("process_stream_point: zero feature vector");
  }
  if (ledger) {
    detail::require(ledger->bits == k && ledger->dim == state.dim(),
                    "process_stream_point: ledger shape mismatch");
  }

  RoundResult res{encode(hm, x), ideal_code(lm, y), 0, 0};
  const double c = state.aggressiveness;
  for (std::size_t j = 0; j < k; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const Sign g = res.target[j];
    if (ledger) {
      if (sgn(res.code.dot(state.P.col(col))) != g) ++ledger->code_mistakes[j];
      if (sgn(state.R.col(col).dot(x)) != g) ++ledger->feature_mistakes[j];
    }
    if (detail::pa_step_code(state.P.col(col), res.code, g, c) > 0.0) ++res.code_updates;
    if (detail::pa_step_feature(state.R.col(col), x, g, c) > 0.0) ++res.feature_updates;
  }
  ++state.rounds_seen;
  if (ledger) {
    ++ledger->rounds;
    ledger->max_feature_norm = std::max(ledger->max_feature_norm, std::sqrt(norm2));
    if (ledger->keep_stream) {
      ledger->codes.push_back(res.code);
      ledger->targets.push_back(res.target);
      ledger->features.emplace_back(x);
    }
  }
  return res;
}

}  // namespace ohweu
