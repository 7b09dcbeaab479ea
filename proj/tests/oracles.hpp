#pragma once

// Reference implementations that deliberately avoid the library's SVD route.

#include <icfrm/types.hpp>

#include <cmath>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using icfrm::Index;
using icfrm::Matrix;

// Row echelon form by partial pivoting; returns pivot (row, col) pairs.
inline std::vector<std::pair<Index, Index>> echelon_pivots(Matrix a, double tol = 1e-9) {
  std::vector<std::pair<Index, Index>> pivots;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  Index row = 0;
  std::vector<Index> perm(static_cast<std::size_t>(a.rows()));
  for (Index i = 0; i < a.rows(); ++i) perm[static_cast<std::size_t>(i)] = i;
  for (Index col = 0; col < a.cols() && row < a.rows(); ++col) {
    Index best = row;
    for (Index r = row + 1; r < a.rows(); ++r) {
      if (std::abs(a(r, col)) > std::abs(a(best, col))) best = r;
    }
    if (std::abs(a(best, col)) <= tol * scale) continue;
    for (Index c = 0; c < a.cols(); ++c) std::swap(a(row, c), a(best, c));
    std::swap(perm[static_cast<std::size_t>(row)], perm[static_cast<std::size_t>(best)]);
    for (Index r = row + 1; r < a.rows(); ++r) {
      const double f = a(r, col) / a(row, col);
      for (Index c = col; c < a.cols(); ++c) a(r, c) -= f * a(row, c);
    }
    pivots.emplace_back(perm[static_cast<std::size_t>(row)], col);
    ++row;
  }
  return pivots;
}

inline Index gauss_rank(const Matrix& a, double tol = 1e-9) {
  return static_cast<Index>(echelon_pivots(a, tol).size());
}

// Inverse of a small nonsingular matrix by Gauss-Jordan elimination.
inline Matrix gauss_jordan_inverse(Matrix a) {
  const Index n = a.rows();
  Matrix inv = Matrix::Identity(n, n);
  for (Index col = 0; col < n; ++col) {
    Index best = col;
    for (Index r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(best, col))) best = r;
    }
    a.row(col).swap(a.row(best));
    inv.row(col).swap(inv.row(best));
    const double p = a(col, col);
    a.row(col) /= p;
    inv.row(col) /= p;
    for (Index r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a(r, col);
      a.row(r) -= f * a.row(col);
      inv.row(r) -= f * inv.row(col);
    }
  }
  return inv;
}

// A (non Moore-Penrose) generalised inverse of a symmetric matrix: invert a
// maximal nonsingular principal block, zero elsewhere.
inline Matrix block_ginverse(const Matrix& a) {
  std::vector<Index> idx;
  for (Index j = 0; j < a.cols(); ++j) {
    std::vector<Index> trial = idx;
    trial.push_back(j);
    Matrix block(static_cast<Index>(trial.size()), static_cast<Index>(trial.size()));
    for (std::size_t r = 0; r < trial.size(); ++r)
      for (std::size_t c = 0; c < trial.size(); ++c) block(r, c) = a(trial[r], trial[c]);
    if (gauss_rank(block) == static_cast<Index>(trial.size())) idx = trial;
  }
  const Index r = static_cast<Index>(idx.size());
  Matrix block(r, r);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < r; ++j) block(i, j) = a(idx[i], idx[j]);
  const Matrix inv = gauss_jordan_inverse(block);
  Matrix g = Matrix::Zero(a.rows(), a.cols());
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < r; ++j) g(idx[i], idx[j]) = inv(i, j);
  return g;
}

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(gen);
  return m;
}

}  // namespace oracle
