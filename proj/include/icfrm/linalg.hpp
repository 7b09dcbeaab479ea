#pragma once

#include "icfrm/types.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <limits>

namespace icfrm {

/// Relative singular-value cutoff max(rows, cols) * eps * sigma_max.
template <typename Scalar>
Scalar default_rank_cutoff(Index rows, Index cols, Scalar sigma_max) {
  return static_cast<Scalar>(std::max(rows, cols)) *
         std::numeric_limits<Scalar>::epsilon() * sigma_max;
}

/// Number of singular values above the default relative cutoff.
template <typename Derived>
Index numerical_rank(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Dense> svd(a.eval());
  const auto& s = svd.singularValues();
  const Scalar cut = default_rank_cutoff<Scalar>(a.rows(), a.cols(), s[0]);
  return (s.array() > cut).count();
}

/// Moore-Penrose pseudoinverse via SVD. Singular values at or below
/// max(rows, cols) * eps * sigma_max are treated as zero.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
moore_penrose_pinv(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (!a.allFinite()) throw InputError("moore_penrose_pinv: non-finite entries");
  if (a.size() == 0) return Dense(a.cols(), a.rows());

  Eigen::JacobiSVD<Dense> svd(a.eval(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const Scalar cut = default_rank_cutoff<Scalar>(a.rows(), a.cols(), s[0]);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_s(s.size());
  for (Index i = 0; i < s.size(); ++i) inv_s[i] = s[i] > cut ? Scalar(1) / s[i] : Scalar(0);
  return svd.matrixV() * inv_s.asDiagonal() * svd.matrixU().adjoint();
}

/// Largest absolute entry of (a - b); the tolerance metric used throughout.
template <typename DA, typename DB>
typename DA::Scalar max_abs_diff(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  if (a.size() == 0) return 0;
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace icfrm
