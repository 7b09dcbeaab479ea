#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace icfrm {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexVector = Eigen::Matrix<Index, Eigen::Dynamic, 1>;

// ---------------------------------------------------------------------------
// Error hierarchy. The CLI maps each class to its own exit status.
// ---------------------------------------------------------------------------
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension mismatch, non-finite input, empty matrices.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Non-positive residual degrees of freedom (n <= k).
class DofError : public Error {
 public:
  using Error::Error;
};

/// C beta(t) is not estimable under the design.
class EstimabilityError : public Error {
 public:
  using Error::Error;
};

/// The contrast middle matrix C (X'X)^+ C' is singular.
class RankError : public Error {
 public:
  using Error::Error;
};

/// gamma(t,t) vanishes where a scale-invariant statistic divides by it.
class DegenerateVarianceError : public Error {
 public:
  using Error::Error;
};

/// A scale function value is (numerically) zero.
class InvalidScaleError : public Error {
 public:
  using Error::Error;
};

/// Eigendecomposition failure or an impossible numerical state.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// File content has the wrong shape.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A cell could not be parsed as a number.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A structured config is missing a field or has one of the wrong type.
class SchemaError : public InputError {
 public:
  using InputError::InputError;
};

/// The external response data file is not where it was expected.
class DataUnavailableError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// TimeGrid: strictly increasing evaluation points inside [a, b].
// ---------------------------------------------------------------------------
class TimeGrid {
 public:
  TimeGrid(Vector points, double a, double b);
  /// Endpoints default to the first and last point.
  explicit TimeGrid(Vector points);

  /// `size` equispaced points covering [a, b] including both endpoints.
  static TimeGrid uniform(Index size, double a = 0.0, double b = 1.0);

  const Vector& points() const { return points_; }
  double operator[](Index j) const { return points_[j]; }
  Index size() const { return points_.size(); }
  double a() const { return a_; }
  double b() const { return b_; }

  friend bool operator==(const TimeGrid& lhs, const TimeGrid& rhs) {
    return lhs.a_ == rhs.a_ && lhs.b_ == rhs.b_ && lhs.points_ == rhs.points_;
  }

 private:
  Vector points_;
  double a_;
  double b_;
};

// ---------------------------------------------------------------------------
// FunctionalDataset: n curves evaluated on a shared grid (row i = y_i).
// ---------------------------------------------------------------------------
class FunctionalDataset {
 public:
  FunctionalDataset(TimeGrid grid, Matrix values);

  const TimeGrid& grid() const { return grid_; }
  const Matrix& values() const { return values_; }
  Index num_curves() const { return values_.rows(); }
  Index num_points() const { return values_.cols(); }

 private:
  TimeGrid grid_;
  Matrix values_;
};

// ---------------------------------------------------------------------------
// Hypothesis H0: C beta(t) = c(t) for every grid point.
// ---------------------------------------------------------------------------
class Hypothesis {
 public:
  /// Null values default to zero on a grid of `num_points` points.
  Hypothesis(Matrix contrast, Index num_points);
  Hypothesis(Matrix contrast, Matrix null_values);

  const Matrix& contrast() const { return contrast_; }
  const Matrix& null_values() const { return null_values_; }
  Index q() const { return contrast_.rows(); }
  Index num_points() const { return null_values_.cols(); }

 private:
  Matrix contrast_;
  Matrix null_values_;
};

/// Diagnostics go to standard error; machine-readable output never does.
void log_warning(const std::string& message);
void log_info(const std::string& message);
/// Silences log_info (warnings still print).
void set_quiet(bool quiet);

/// Throws InputError if any entry is NaN or infinite.
void require_finite(const Eigen::Ref<const Matrix>& m, const std::string& what);

}  // namespace icfrm
