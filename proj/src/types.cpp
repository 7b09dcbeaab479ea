#include "icfrm/types.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <mutex>
#include <sstream>
#include <utility>

namespace icfrm {

namespace {
std::atomic<bool> g_quiet{false};
std::mutex g_log_mutex;
}  // namespace

void log_warning(const std::string& message) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  std::cerr << "[icfrm] warning: " << message << '\n';
}

void log_info(const std::string& message) {
  if (g_quiet.load()) return;
  std::lock_guard<std::mutex> lock(g_log_mutex);
  std::cerr << "[icfrm] " << message << '\n';
}

void set_quiet(bool quiet) { g_quiet.store(quiet); }

void require_finite(const Eigen::Ref<const Matrix>& m, const std::string& what) {
  if (!m.allFinite()) throw InputError(what + ": non-finite entries");
}

TimeGrid::TimeGrid(Vector points, double a, double b)
    : points_(std::move(points)), a_(a), b_(b) {
  if (points_.size() < 2) throw InputError("TimeGrid: need at least two points");
  if (!points_.allFinite() || !std::isfinite(a_) || !std::isfinite(b_)) {
    throw InputError("TimeGrid: non-finite values");
  }
  for (Index j = 1; j < points_.size(); ++j) {
    if (!(points_[j] > points_[j - 1])) {
      std::ostringstream msg;
      msg << "TimeGrid: points not strictly increasing at index " << j;
      throw InputError(msg.str());
    }
  }
  if (a_ > points_[0] || points_[points_.size() - 1] > b_) {
    throw InputError("TimeGrid: points fall outside [a, b]");
  }
}

TimeGrid::TimeGrid(Vector points)
    : TimeGrid(points, points.size() ? points[0] : 0.0,
               points.size() ? points[points.size() - 1] : 0.0) {}

TimeGrid TimeGrid::uniform(Index size, double a, double b) {
  if (size < 2) throw InputError("TimeGrid::uniform: need at least two points");
  if (!(b > a)) throw InputError("TimeGrid::uniform: need a < b");
  Vector t = Vector::LinSpaced(size, a, b);
  t[0] = a;
  t[size - 1] = b;
  return TimeGrid(std::move(t), a, b);
}

FunctionalDataset::FunctionalDataset(TimeGrid grid, Matrix values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.rows() < 1) throw InputError("FunctionalDataset: no curves");
  if (values_.cols() != grid_.size()) {
    std::ostringstream msg;
    msg << "FunctionalDataset: " << values_.cols() << " columns for a grid of " << grid_.size()
        << " points";
    throw InputError(msg.str());
  }
  require_finite(values_, "FunctionalDataset");
}

Hypothesis::Hypothesis(Matrix contrast, Index num_points)
    : Hypothesis(contrast, Matrix::Zero(contrast.rows(), num_points)) {}

Hypothesis::Hypothesis(Matrix contrast, Matrix null_values)
    : contrast_(std::move(contrast)), null_values_(std::move(null_values)) {
  if (contrast_.rows() < 1 || contrast_.cols() < 1) throw InputError("Hypothesis: empty contrast");
  if (null_values_.rows() != contrast_.rows()) {
    throw InputError("Hypothesis: null values must have one row per contrast row");
  }
  require_finite(contrast_, "Hypothesis contrast");
  require_finite(null_values_, "Hypothesis null values");
  Eigen::ColPivHouseholderQR<Matrix> qr(contrast_);
  if (qr.rank() != contrast_.rows()) {
    throw RankError("Hypothesis: contrast matrix does not have full row rank");
  }
}

}  // namespace icfrm
