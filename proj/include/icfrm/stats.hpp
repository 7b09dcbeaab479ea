#pragma once

#include "icfrm/model.hpp"
#include "icfrm/types.hpp"

#include <string_view>

namespace icfrm {

enum class StatisticKind { L2, FRatio, Global, FMax };

/// Short CLI token: t, f, g, fmax.
std::string_view to_token(StatisticKind kind);
StatisticKind statistic_from_token(std::string_view token);

/// Everything the pointwise quadratic forms need for one (design, hypothesis)
/// pair, precomputed once.
///
/// With M = C (X'X)^+ C' and A = C (X'X)^+ X', C beta_hat(t) = A y(t) and
///   SSH(t) = || M^{-1/2} (A y(t) - c(t)) ||^2,
/// so `whitened_contrast()` holds M^{-1/2} A and `whitened_null()` holds
/// M^{-1/2} c. Construction verifies estimability and the rank of M.
class ContrastGeometry {
 public:
  ContrastGeometry(const DesignMatrix& d, const Hypothesis& h);

  Index q() const { return whitened_contrast_.rows(); }
  Index dof() const { return dof_; }
  Index num_points() const { return whitened_null_.cols(); }
  const Matrix& whitened_contrast() const { return whitened_contrast_; }
  const Matrix& whitened_null() const { return whitened_null_; }
  const Matrix& residual_projector() const { return residual_projector_; }
  /// Condition number of M (a warning is logged above 1e12).
  double middle_condition() const { return middle_condition_; }

  /// Pointwise SSH of the columns of `y` (n x T) against c(t).
  Vector ssh(const Eigen::Ref<const Matrix>& y) const;
  /// Pointwise SSH with c(t) taken as zero; for deviations from a centre.
  Vector ssh_centered(const Eigen::Ref<const Matrix>& deviation) const;
  /// Pointwise y(t)' (I - H) y(t).
  Vector sse(const Eigen::Ref<const Matrix>& y) const;

 private:
  Matrix whitened_contrast_;
  Matrix whitened_null_;
  Matrix residual_projector_;
  Index dof_ = 0;
  double middle_condition_ = 1.0;
};

struct PointwiseDecomposition {
  TimeGrid grid;
  Vector ssh;
  Vector sse;
  Vector gamma_diag;
  Index q = 0;
  Index dof = 0;
};

PointwiseDecomposition decompose(const FunctionalDataset& y, const DesignMatrix& d,
                                 const Hypothesis& h);
PointwiseDecomposition decompose(const FunctionalDataset& y, const ContrastGeometry& g);

/// Trapezoidal rule over the grid points.
template <typename Derived>
typename Derived::Scalar integrate_grid(const Eigen::MatrixBase<Derived>& values,
                                        const TimeGrid& grid) {
  using Scalar = typename Derived::Scalar;
  if (values.size() != grid.size()) throw InputError("integrate_grid: length mismatch");
  const Vector& t = grid.points();
  Scalar acc = 0;
  for (Index j = 1; j < t.size(); ++j) {
    acc += Scalar(0.5) * (values(j - 1) + values(j)) * static_cast<Scalar>(t[j] - t[j - 1]);
  }
  return acc;
}

/// Integral of SSH, F ratio, G (integrated SSH/gamma over q) or F_max.
/// Throws DegenerateVarianceError for Global/FMax when gamma(t,t) <= 0.
double statistic(const PointwiseDecomposition& dec, StatisticKind kind);

/// All four statistics from pointwise SSH and SSE curves, evaluated the same
/// way for observed data and bootstrap replicates.
struct StatisticSet {
  double l2 = 0;
  double f_ratio = 0;
  double global = 0;
  double f_max = 0;

  double get(StatisticKind kind) const;
};

/// `ratio_defined` is false when some SSE entry is non-positive; global and
/// f_max are then left at NaN.
StatisticSet statistics_from_sums(const Vector& ssh, const Vector& sse, Index q, Index dof,
                                  const TimeGrid& grid, bool* ratio_defined = nullptr);

/// Nonvanishing function h(t) on the grid.
class ScaleFunction {
 public:
  explicit ScaleFunction(Vector values);

  /// h(t) = 1 / (t + offset); offset defaults to 1/43.
  static ScaleFunction reciprocal_shift(const TimeGrid& grid, double offset = 1.0 / 43.0);

  const Vector& values() const { return values_; }
  ScaleFunction inverse() const;

 private:
  Vector values_;
};

/// y^h(t) = h(t) y(t).
FunctionalDataset scale_dataset(const FunctionalDataset& y, const ScaleFunction& h);
/// c^h(t) = h(t) c(t); the contrast matrix is unchanged.
Hypothesis scale_hypothesis(const Hypothesis& hyp, const ScaleFunction& h);

}  // namespace icfrm
