#include "icfrm/stats.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace icfrm {

std::string_view to_token(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::L2: return "t";
    case StatisticKind::FRatio: return "f";
    case StatisticKind::Global: return "g";
    case StatisticKind::FMax: return "fmax";
  }
  return "?";
}

StatisticKind statistic_from_token(std::string_view token) {
  if (token == "t") return StatisticKind::L2;
  if (token == "f") return StatisticKind::FRatio;
  if (token == "g") return StatisticKind::Global;
  if (token == "fmax") return StatisticKind::FMax;
  throw InputError("unknown statistic '" + std::string(token) + "' (expected t, f, g or fmax)");
}

ContrastGeometry::ContrastGeometry(const DesignMatrix& d, const Hypothesis& h)
    : residual_projector_(d.residual_projector()), dof_(d.dof()) {
  if (h.contrast().cols() != d.num_params()) {
    std::ostringstream msg;
    msg << "hypothesis has " << h.contrast().cols() << " columns, design has " << d.num_params();
    throw InputError(msg.str());
  }
  if (h.q() > d.rank()) {
    std::ostringstream msg;
    msg << "hypothesis rank q = " << h.q() << " exceeds design rank k = " << d.rank();
    throw RankError(msg.str());
  }
  if (!check_estimable(h, d)) {
    throw EstimabilityError("C beta(t) is not estimable: C (X'X)^+ X'X != C");
  }
  if (dof_ <= 0) throw DofError("no residual degrees of freedom (n <= k)");

  const Matrix& c = h.contrast();
  Matrix middle = c * d.xtx_pinv() * c.transpose();
  middle = (0.5 * (middle + middle.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(middle);
  if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition of C (X'X)^+ C' failed");
  const Vector& lambda = eig.eigenvalues();
  const double lmax = lambda.maxCoeff();
  const double lmin = lambda.minCoeff();
  const double floor = static_cast<double>(middle.rows()) *
                       std::numeric_limits<double>::epsilon() * std::max(lmax, 0.0);
  if (!(lmax > 0) || lmin <= floor) {
    throw RankError("C (X'X)^+ C' is singular");
  }
  middle_condition_ = lmax / lmin;
  if (middle_condition_ > 1e12) {
    std::ostringstream msg;
    msg << "C (X'X)^+ C' is ill-conditioned (condition number " << middle_condition_ << ")";
    log_warning(msg.str());
  }
  const Matrix inv_sqrt = eig.eigenvectors() * lambda.array().rsqrt().matrix().asDiagonal() *
                          eig.eigenvectors().transpose();
  whitened_contrast_ = inv_sqrt * (c * d.xtx_pinv() * d.x().transpose());
  whitened_null_ = inv_sqrt * h.null_values();
}

Vector ContrastGeometry::ssh(const Eigen::Ref<const Matrix>& y) const {
  if (y.cols() != whitened_null_.cols()) throw InputError("ssh: grid length mismatch");
  return (whitened_contrast_ * y - whitened_null_).colwise().squaredNorm().transpose();
}

Vector ContrastGeometry::ssh_centered(const Eigen::Ref<const Matrix>& deviation) const {
  return (whitened_contrast_ * deviation).colwise().squaredNorm().transpose();
}

Vector ContrastGeometry::sse(const Eigen::Ref<const Matrix>& y) const {
  Vector out = (residual_projector_ * y).colwise().squaredNorm().transpose();
  // Residuals at rounding level mean y(t) lies in the column space.
  const double tol = std::pow(static_cast<double>(y.rows()) * std::numeric_limits<double>::epsilon(), 2);
  const Vector total = y.colwise().squaredNorm().transpose();
  for (Index j = 0; j < out.size(); ++j) {
    if (out[j] <= tol * total[j]) out[j] = 0.0;
  }
  return out;
}

PointwiseDecomposition decompose(const FunctionalDataset& y, const ContrastGeometry& g) {
  if (y.num_curves() != g.residual_projector().rows()) {
    throw InputError("decompose: data and design row counts differ");
  }
  if (y.num_points() != g.num_points()) throw InputError("decompose: grid length mismatch");
  PointwiseDecomposition dec{y.grid(), g.ssh(y.values()), Vector(), Vector(), g.q(), g.dof()};
  dec.gamma_diag = g.sse(y.values()) / static_cast<double>(g.dof());
  dec.sse = static_cast<double>(g.dof()) * dec.gamma_diag;
  return dec;
}

PointwiseDecomposition decompose(const FunctionalDataset& y, const DesignMatrix& d,
                                 const Hypothesis& h) {
  return decompose(y, ContrastGeometry(d, h));
}

double StatisticSet::get(StatisticKind kind) const {
  switch (kind) {
    case StatisticKind::L2: return l2;
    case StatisticKind::FRatio: return f_ratio;
    case StatisticKind::Global: return global;
    case StatisticKind::FMax: return f_max;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

StatisticSet statistics_from_sums(const Vector& ssh, const Vector& sse, Index q, Index dof,
                                  const TimeGrid& grid, bool* ratio_defined) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double qd = static_cast<double>(q);
  const double dofd = static_cast<double>(dof);
  StatisticSet out;
  const double int_ssh = integrate_grid(ssh, grid);
  const double int_sse = integrate_grid(sse, grid);
  out.l2 = int_ssh;
  out.f_ratio = int_sse > 0 ? (int_ssh / qd) / (int_sse / dofd) : nan;

  const bool defined = (sse.array() > 0).all();
  if (ratio_defined) *ratio_defined = defined;
  if (defined) {
    const Vector ratio = (ssh.array() / (sse.array() / dofd)).matrix();
    out.global = integrate_grid(ratio, grid) / qd;
    out.f_max = ratio.maxCoeff() / qd;
  } else {
    out.global = nan;
    out.f_max = nan;
  }
  return out;
}

double statistic(const PointwiseDecomposition& dec, StatisticKind kind) {
  const double q = static_cast<double>(dec.q);
  switch (kind) {
    case StatisticKind::L2: return integrate_grid(dec.ssh, dec.grid);
    case StatisticKind::FRatio: {
      const double denom = integrate_grid(dec.sse, dec.grid) / static_cast<double>(dec.dof);
      if (!(denom > 0)) throw DegenerateVarianceError("F ratio: integrated SSE is zero");
      return (integrate_grid(dec.ssh, dec.grid) / q) / denom;
    }
    case StatisticKind::Global:
    case StatisticKind::FMax: {
      for (Index j = 0; j < dec.gamma_diag.size(); ++j) {
        if (!(dec.gamma_diag[j] > 0)) {
          std::ostringstream msg;
          msg << "gamma(t,t) = " << dec.gamma_diag[j] << " at grid index " << j;
          throw DegenerateVarianceError(msg.str());
        }
      }
      const Vector ratio = (dec.ssh.array() / dec.gamma_diag.array()).matrix();
      return kind == StatisticKind::Global ? integrate_grid(ratio, dec.grid) / q
                                           : ratio.maxCoeff() / q;
    }
  }
  throw InputError("statistic: unknown kind");
}

ScaleFunction::ScaleFunction(Vector values) : values_(std::move(values)) {
  for (Index j = 0; j < values_.size(); ++j) {
    if (!std::isfinite(values_[j]) || std::abs(values_[j]) < 1e-12) {
      std::ostringstream msg;
      msg << "scale function value " << values_[j] << " at grid index " << j;
      throw InvalidScaleError(msg.str());
    }
  }
}

ScaleFunction ScaleFunction::reciprocal_shift(const TimeGrid& grid, double offset) {
  return ScaleFunction((grid.points().array() + offset).inverse().matrix());
}

ScaleFunction ScaleFunction::inverse() const { return ScaleFunction(values_.cwiseInverse()); }

FunctionalDataset scale_dataset(const FunctionalDataset& y, const ScaleFunction& h) {
  if (h.values().size() != y.num_points()) throw InputError("scale_dataset: grid length mismatch");
  return FunctionalDataset(y.grid(), y.values() * h.values().asDiagonal());
}

Hypothesis scale_hypothesis(const Hypothesis& hyp, const ScaleFunction& h) {
  if (h.values().size() != hyp.num_points()) {
    throw InputError("scale_hypothesis: grid length mismatch");
  }
  return Hypothesis(hyp.contrast(), hyp.null_values() * h.values().asDiagonal());
}

}  // namespace icfrm
