#include "icfrm/model.hpp"

#include "icfrm/linalg.hpp"

#include <Eigen/SVD>

#include <sstream>

namespace icfrm {

DesignMatrix::DesignMatrix(Matrix x) : x_(std::move(x)) {
  if (x_.rows() == 0 || x_.cols() == 0) throw InputError("DesignMatrix: empty matrix");
  require_finite(x_, "DesignMatrix");

  Eigen::JacobiSVD<Matrix> svd(x_, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cut = default_rank_cutoff<double>(x_.rows(), x_.cols(), s[0]);
  rank_ = (s.array() > cut).count();

  const Matrix vk = svd.matrixV().leftCols(rank_);
  const Matrix uk = svd.matrixU().leftCols(rank_);
  const Vector inv_s2 = s.head(rank_).array().square().inverse();
  xtx_pinv_ = vk * inv_s2.asDiagonal() * vk.transpose();
  xtx_pinv_ = (0.5 * (xtx_pinv_ + xtx_pinv_.transpose())).eval();

  // I - X (X'X)^+ X' = I - U_k U_k'.
  residual_projector_ = -uk * uk.transpose();
  residual_projector_.diagonal().array() += 1.0;
  residual_projector_ = (0.5 * (residual_projector_ + residual_projector_.transpose())).eval();
}

Matrix DesignMatrix::hat_matrix() const {
  Matrix h = -residual_projector_;
  h.diagonal().array() += 1.0;
  return h;
}

DesignMatrix build_design(Matrix x) { return DesignMatrix(std::move(x)); }

CoefficientEstimate estimate_beta(const FunctionalDataset& y, const DesignMatrix& d) {
  if (y.num_curves() != d.num_rows()) {
    std::ostringstream msg;
    msg << "estimate_beta: " << y.num_curves() << " curves for a design with " << d.num_rows()
        << " rows";
    throw InputError(msg.str());
  }
  return {y.grid(), d.xtx_pinv() * (d.x().transpose() * y.values())};
}

CovarianceEstimate estimate_covariance(const FunctionalDataset& y, const DesignMatrix& d) {
  if (y.num_curves() != d.num_rows()) throw InputError("estimate_covariance: row count mismatch");
  if (d.dof() <= 0) {
    std::ostringstream msg;
    msg << "estimate_covariance: n = " << d.num_rows() << " does not exceed rank k = " << d.rank();
    throw DofError(msg.str());
  }
  const Matrix r = d.residual_projector() * y.values();
  Matrix g = (r.transpose() * r) / static_cast<double>(d.dof());
  g = (0.5 * (g + g.transpose())).eval();
  return {y.grid(), std::move(g), d.dof()};
}

Vector clamped_variance_diagonal(const Matrix& gamma_hat) {
  Vector diag = gamma_hat.diagonal();
  for (Index j = 0; j < diag.size(); ++j) {
    if (diag[j] < 0) {
      if (diag[j] <= -1e-10) {
        std::ostringstream msg;
        msg << "negative variance estimate " << diag[j] << " at grid index " << j;
        throw NumericError(msg.str());
      }
      diag[j] = 0;
    }
  }
  return diag;
}

bool check_estimable(const Eigen::Ref<const Matrix>& contrast, const DesignMatrix& d, double tol) {
  if (contrast.cols() != d.num_params()) {
    throw InputError("check_estimable: contrast has the wrong number of columns");
  }
  const Matrix xtx = d.x().transpose() * d.x();
  const Matrix projected = contrast * d.xtx_pinv() * xtx;
  const double scale = std::max(1.0, contrast.cwiseAbs().maxCoeff());
  return max_abs_diff(projected, contrast) <= tol * scale;
}

bool check_estimable(const Hypothesis& h, const DesignMatrix& d, double tol) {
  return check_estimable(h.contrast(), d, tol);
}

Matrix sample_covariance(const FunctionalDataset& y) {
  if (y.num_curves() < 2) throw DofError("sample_covariance: need at least two curves");
  const Matrix centered = y.values().rowwise() - y.values().colwise().mean();
  Matrix s = centered.transpose() * centered / static_cast<double>(y.num_curves() - 1);
  return 0.5 * (s + s.transpose());
}

}  // namespace icfrm
