#pragma once

#include "icfrm/types.hpp"

namespace icfrm {

/// Design matrix X (n x (p+1)) with its rank-revealing factorisation cached.
///
/// The rank k is counted from the singular values of X and is reused for the
/// residual degrees of freedom n - k and for (X'X)^+ = V_k S_k^{-2} V_k', so
/// every downstream quantity agrees on the same numerical rank.
class DesignMatrix {
 public:
  explicit DesignMatrix(Matrix x);

  const Matrix& x() const { return x_; }
  Index num_rows() const { return x_.rows(); }
  Index num_params() const { return x_.cols(); }
  Index rank() const { return rank_; }
  /// n - k.
  Index dof() const { return x_.rows() - rank_; }
  const Matrix& xtx_pinv() const { return xtx_pinv_; }
  /// I_n - X (X'X)^+ X'.
  const Matrix& residual_projector() const { return residual_projector_; }
  /// X (X'X)^+ X'; maps y(t) onto the fitted values.
  Matrix hat_matrix() const;
  /// True when rank < p + 1 (the ill-conditioned case).
  bool rank_deficient() const { return rank_ < x_.cols(); }

 private:
  Matrix x_;
  Index rank_ = 0;
  Matrix xtx_pinv_;
  Matrix residual_projector_;
};

DesignMatrix build_design(Matrix x);

struct CoefficientEstimate {
  TimeGrid grid;
  Matrix beta_hat;  ///< (p+1) x T
};

struct CovarianceEstimate {
  TimeGrid grid;
  Matrix gamma_hat;  ///< T x T
  Index dof = 0;
};

/// beta_hat(t) = (X'X)^+ X' y(t) at every grid point.
CoefficientEstimate estimate_beta(const FunctionalDataset& y, const DesignMatrix& d);

/// gamma_hat = Y' (I - X (X'X)^+ X') Y / (n - k). Throws DofError when n <= k.
CovarianceEstimate estimate_covariance(const FunctionalDataset& y, const DesignMatrix& d);

/// Diagonal of gamma_hat with the (-1e-10, 0) band clamped to zero; anything
/// more negative throws NumericError.
Vector clamped_variance_diagonal(const Matrix& gamma_hat);

/// C (X'X)^+ (X'X) == C within `tol` (elementwise, scaled by max|C|).
bool check_estimable(const Hypothesis& h, const DesignMatrix& d, double tol = 1e-8);
bool check_estimable(const Eigen::Ref<const Matrix>& contrast, const DesignMatrix& d,
                     double tol = 1e-8);

/// Sample covariance (divisor n - 1) of the raw curves, ignoring the design.
Matrix sample_covariance(const FunctionalDataset& y);

}  // namespace icfrm
