#pragma once

// Principal component reduction of raw representations.
//
// The d x d sample covariance is formed explicitly and diagonalized, which
// is exact and cheap for the few-hundred-dimensional embeddings this engine
// sees, even when n is in the hundreds of thousands.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tsdshap/types.hpp"

namespace tsdshap {

struct PcaModel {
  std::vector<double> mean;                     // d
  std::vector<std::vector<double>> components;  // k rows of length d, orthonormal
  std::vector<double> explained_variance;       // k, non-increasing

  std::size_t input_dims() const noexcept { return mean.size(); }
  std::size_t output_dims() const noexcept { return components.size(); }
};

namespace detail {

// Flip the vector so its largest-magnitude entry is positive (first index
// wins ties).
inline void canonical_sign(std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (v[best] < 0.0) {
    for (double& x : v) x = -x;
  }
}

}  // namespace detail

// Fit on all rows of `matrix`; keeps min(k, cols, rows - 1) components.
inline PcaModel fit_pca(const EmbeddingMatrix& matrix, std::size_t k) {
  if (matrix.rows() < 2) throw InvalidArgument("PCA fit needs at least 2 rows");
  if (k < 1) throw InvalidArgument("PCA needs at least 1 component");
  const std::size_t n = matrix.rows();
  const std::size_t d = matrix.cols();
  const std::size_t keep = std::min({k, d, n - 1});

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = matrix.row(r);
    for (std::size_t c = 0; c < d; ++c) mean[static_cast<Eigen::Index>(c)] += row[c];
  }
  mean /= static_cast<double>(n);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  Eigen::VectorXd centered(static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = matrix.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      centered[ci] = row[c] - mean[ci];
    }
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("covariance eigendecomposition failed");

  // Eigen returns ascending eigenvalues; walk from the top.
  PcaModel model;
  model.mean.assign(mean.data(), mean.data() + mean.size());
  const auto& vals = solver.eigenvalues();
  const auto& vecs = solver.eigenvectors();
  for (std::size_t j = 0; j < keep; ++j) {
    const auto col = static_cast<Eigen::Index>(d - 1 - j);
    std::vector<double> component(vecs.col(col).data(), vecs.col(col).data() + d);
    detail::canonical_sign(component);
    model.components.push_back(std::move(component));
    model.explained_variance.push_back(std::max(0.0, vals[col]));
  }
  return model;
}

// row_out = components * (row_in - mean)
inline EmbeddingMatrix apply_pca(const PcaModel& model, const EmbeddingMatrix& matrix) {
  if (matrix.cols() != model.input_dims()) {
    throw InvalidArgument("PCA model expects " + std::to_string(model.input_dims()) +
                          " columns, matrix has " + std::to_string(matrix.cols()));
  }
  const std::size_t d = model.input_dims();
  EmbeddingMatrix out(matrix.rows(), model.output_dims());
  std::vector<double> centered(d);
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const auto row = matrix.row(r);
    for (std::size_t c = 0; c < d; ++c) centered[c] = row[c] - model.mean[c];
    auto dst = out.row(r);
    for (std::size_t j = 0; j < model.output_dims(); ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += model.components[j][c] * centered[c];
      dst[j] = static_cast<float>(acc);
    }
  }
  return out;
}

// Stack train and dev rows, the joint fitting set for a dataset.
inline EmbeddingMatrix stack_rows(const EmbeddingMatrix& top, const EmbeddingMatrix& bottom) {
  if (top.cols() != bottom.cols()) throw InvalidArgument("cannot stack matrices of different widths");
  std::vector<float> data(top.data());
  data.insert(data.end(), bottom.data().begin(), bottom.data().end());
  return {top.rows() + bottom.rows(), top.cols(), std::move(data)};
}

}  // namespace tsdshap
