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

// Fixed hash stage: PCA followed by Iterative Quantization, learned once on
// an initial batch, then used as h = sgn(W^T x + b) for every later point.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ohweu/core.hpp"

namespace ohweu {

struct HashModel {
  Eigen::MatrixXd W;              // D x K, PCA basis composed with the rotation
  Eigen::VectorXd b;              // K, equals -W^T feature_mean
  Eigen::VectorXd feature_mean;   // D
  Eigen::MatrixXd itq_rotation;   // K x K, orthogonal

  std::size_t bits() const noexcept { return static_cast<std::size_t>(W.cols()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(W.rows()); }
};

/// Per-iteration record of an ITQ fit. errors[0] is the error of the random
/// initial rotation; errors[i] the error after the i-th alternation.
struct ItqTrace {
  std::vector<double> errors;
  std::vector<double> orthogonality;  // max |R^T R - I| after each iteration
};

constexpr int kDefaultItqIterations = 50;
constexpr std::size_t kDefaultInitialPoints = 300;

/// ||B - V R||_F^2.
inline double quantization_error(const Eigen::Ref<const Eigen::MatrixXd>& V,
                                 const Eigen::Ref<const Eigen::MatrixXd>& B,
                                 const Eigen::Ref<const Eigen::MatrixXd>& R) {
  detail::require(V.rows() == B.rows() && V.cols() == B.cols(),
                  "quantization_error: V and B shapes differ");
  detail::require(R.rows() == V.cols() && R.cols() == V.cols(),
                  "quantization_error: rotation must be K x K");
  return (B - V * R).squaredNorm();
}

inline double orthogonality_defect(const Eigen::Ref<const Eigen::MatrixXd>& R) {
  const auto k = R.cols();
  return (R.transpose() * R - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
}

namespace detail {

inline Eigen::MatrixXd sign_matrix(const Eigen::MatrixXd& M) {
  return M.unaryExpr([](double v) { return static_cast<double>(sgn(v)); });
}

inline Eigen::MatrixXd random_orthogonal(Eigen::Index k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd G(k, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index r = 0; r < k; ++r) G(r, c) = normal(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
  // Make the factorization unique: positive diagonal of the triangular factor.
  const Eigen::MatrixXd& packed = qr.matrixQR();
  for (Eigen::Index c = 0; c < k; ++c) {
    if (packed(c, c) < 0) Q.col(c) = -Q.col(c);
  }
  return Q;
}

/// Orthogonal Procrustes: the rotation minimizing ||B - V R||_F.
inline Eigen::MatrixXd procrustes_rotation(const Eigen::MatrixXd& V,
                                           const Eigen::MatrixXd& B) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(V.transpose() * B,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace detail

/// Learn W, b from the rows of `initial` (one point per row).
///
/// Principal directions come from a symmetric eigendecomposition of the
/// sample covariance, ordered by descending eigenvalue, each with its
/// largest-magnitude entry made positive. Throws DegenerateData when the
/// covariance has fewer than K non-negligible eigenvalues.
inline HashModel fit_pca_itq(const Eigen::Ref<const FeatureMatrix>& initial,
                             std::size_t bits, int itq_iters, std::uint64_t seed,
                             ItqTrace* trace = nullptr) {
  const auto n = initial.rows();
  const auto d = initial.cols();
  const auto k = static_cast<Eigen::Index>(bits);
  detail::require(k >= 1, "fit_pca_itq: K must be positive");
  detail::require(d >= k, "fit_pca_itq: feature dimension D=" + std::to_string(d) +
                              " is smaller than K=" + std::to_string(k));
  detail::require(n >= k, "fit_pca_itq: need at least K=" + std::to_string(k) +
                              " samples, got " + std::to_string(n));
  detail::require(itq_iters >= 1, "fit_pca_itq: itq_iters must be >= 1");
  detail::require(initial.allFinite(), "fit_pca_itq: non-finite feature value");

  HashModel model;
  model.feature_mean = initial.colwise().mean().transpose();
  Eigen::MatrixXd centered = initial.rowwise() - model.feature_mean.transpose();

  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw DegenerateData("fit_pca_itq: covariance eigendecomposition failed");
  }
  const Eigen::VectorXd& evals = eig.eigenvalues();  // ascending
  const double largest = evals[d - 1];
  const double kth = evals[d - k];
  const double tol = std::max(largest, 0.0) * 1e-10;
  if (!(largest > 0.0) || kth <= tol) {
    throw DegenerateData("fit_pca_itq: covariance rank is below K=" +
                         std::to_string(k) + " (degenerate initial batch)");
  }

  Eigen::MatrixXd pca(d, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - c);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    pca.col(c) = v;
  }

  const Eigen::MatrixXd V = centered * pca;
  Eigen::MatrixXd R = detail::random_orthogonal(k, seed);
  Eigen::MatrixXd B = detail::sign_matrix(V * R);
  if (trace) {
    trace->errors.assign(1, quantization_error(V, B, R));
    trace->orthogonality.assign(1, orthogonality_defect(R));
  }
  for (int it = 0; it < itq_iters; ++it) {
    R = detail::procrustes_rotation(V, B);
    B = detail::sign_matrix(V * R);
    if (trace) {
      trace->errors.push_back(quantization_error(V, B, R));
      trace->orthogonality.push_back(orthogonality_defect(R));
    }
  }

  model.itq_rotation = R;
  model.W = pca * R;
  model.b = -(model.W.transpose() * model.feature_mean);
  return model;
}

/// h = sgn(W^T x + b).
inline BinaryCode encode(const HashModel& model,
                         const Eigen::Ref<const Eigen::VectorXd>& x) {
  detail::require(static_cast<std::size_t>(x.size()) == model.dim(),
                  "encode: feature dimension " + std::to_string(x.size()) +
                      " does not match model D=" + std::to_string(model.dim()));
  Eigen::VectorXd proj = model.W.transpose() * x;
  proj += model.b;
  return BinaryCode::from_signs(proj);
}

inline std::vector<BinaryCode> encode_rows(const HashModel& model,
                                           const Eigen::Ref<const FeatureMatrix>& X) {
  std::vector<BinaryCode> out;
  out.reserve(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    out.push_back(encode(model, X.row(i).transpose()));
  }
  return out;
}

}  // namespace ohweu
