#include "icfrm/bootstrap.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <sstream>

namespace icfrm {

std::string_view to_token(BootstrapKind kind) {
  return kind == BootstrapKind::Nonparametric ? "nb" : "pb";
}

BootstrapKind bootstrap_from_token(std::string_view token) {
  if (token == "nb") return BootstrapKind::Nonparametric;
  if (token == "pb") return BootstrapKind::Parametric;
  throw InputError("unknown bootstrap '" + std::string(token) + "' (expected nb or pb)");
}

FunctionalDataset residual_functions(const FunctionalDataset& y, const DesignMatrix& d,
                                     const CoefficientEstimate& beta) {
  if (y.num_curves() != d.num_rows() || beta.beta_hat.rows() != d.num_params() ||
      beta.beta_hat.cols() != y.num_points()) {
    throw InputError("residual_functions: inconsistent dimensions");
  }
  return FunctionalDataset(y.grid(), y.values() - d.x() * beta.beta_hat);
}

std::vector<Index> draw_resample_indices(Index n, Philox4x32& rng) {
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::vector<Index> rows(static_cast<std::size_t>(n));
  for (auto& r : rows) r = pick(rng);
  return rows;
}

GaussianCurveSampler::GaussianCurveSampler(const Matrix& covariance) {
  if (covariance.rows() != covariance.cols()) throw InputError("covariance must be square");
  require_finite(covariance, "GaussianCurveSampler");
  const Matrix sym = 0.5 * (covariance + covariance.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericError("covariance eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();  // ascending
  const double lmax = lambda.size() ? lambda.maxCoeff() : 0.0;
  const double cut = static_cast<double>(sym.rows()) * std::numeric_limits<double>::epsilon() *
                     std::max(lmax, 0.0);
  Index r = 0;
  for (Index i = 0; i < lambda.size(); ++i) r += (lambda[i] > cut && lambda[i] > 0) ? 1 : 0;
  factor_ = eig.eigenvectors().rightCols(r) *
            lambda.tail(r).cwiseSqrt().asDiagonal();
}

Matrix GaussianCurveSampler::sample(Index n, Philox4x32& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(n, factor_.cols());
  for (Index i = 0; i < n; ++i) {
    for (Index s = 0; s < z.cols(); ++s) z(i, s) = normal(rng);
  }
  return z * factor_.transpose();
}

namespace {

constexpr double kDegenerateFraction = 1e-12;

// Literal pointwise forms used by the stand-alone replicate functions.
struct LiteralForms {
  Matrix contrast;
  Eigen::LDLT<Matrix> middle;
  Matrix solve_map;  // (X'X)^+ X'

  LiteralForms(const DesignMatrix& d, const Hypothesis& h)
      : contrast(h.contrast()),
        middle(h.contrast() * d.xtx_pinv() * h.contrast().transpose()),
        solve_map(d.xtx_pinv() * d.x().transpose()) {
    if (!check_estimable(h, d)) throw EstimabilityError("C beta(t) is not estimable");
    if (middle.info() != Eigen::Success || !(middle.vectorD().array() > 0).all()) {
      throw RankError("C (X'X)^+ C' is singular");
    }
  }

  Vector ssh(const Matrix& diff) const {
    return (diff.array() * middle.solve(diff).array()).colwise().sum().transpose();
  }
};

Vector quadratic_sse(const DesignMatrix& d, const Matrix& y) {
  return (y.array() * (d.residual_projector() * y).array()).colwise().sum().transpose();
}

bool below_floor(const Vector& sse, const Vector& floor) {
  return ((sse.array() - floor.array()) <= 0).any();
}

}  // namespace

double nonparametric_null_replicate(const FunctionalDataset& resid, const CoefficientEstimate& beta,
                                    const DesignMatrix& d, const Hypothesis& h, StatisticKind kind,
                                    Philox4x32& rng) {
  const Index n = d.num_rows();
  if (resid.num_curves() != n || beta.beta_hat.rows() != d.num_params() ||
      beta.beta_hat.cols() != resid.num_points() || h.num_points() != resid.num_points()) {
    throw InputError("nonparametric_null_replicate: inconsistent dimensions");
  }
  const LiteralForms forms(d, h);
  const Matrix fitted = d.x() * beta.beta_hat;
  const Vector floor = kDegenerateFraction * resid.values().colwise().squaredNorm().transpose();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const auto rows = draw_resample_indices(n, rng);
    const Matrix y_star = fitted + resid.values()(rows, Eigen::all);
    const Matrix beta_star = forms.solve_map * y_star;
    const Vector ssh = forms.ssh(forms.contrast * (beta_star - beta.beta_hat));
    const Vector sse = quadratic_sse(d, y_star);
    if (below_floor(sse, floor)) continue;
    return statistics_from_sums(ssh, sse, h.q(), d.dof(), resid.grid()).get(kind);
  }
  throw NumericError("nonparametric_null_replicate: every resample was degenerate");
}

double parametric_null_replicate(const CovarianceEstimate& gamma, const DesignMatrix& d,
                                 const Hypothesis& h, StatisticKind kind, Philox4x32& rng) {
  if (h.num_points() != gamma.grid.size()) {
    throw InputError("parametric_null_replicate: grid length mismatch");
  }
  const LiteralForms forms(d, h);
  const GaussianCurveSampler sampler(gamma.gamma_hat);
  const Vector floor = kDegenerateFraction * static_cast<double>(d.dof()) *
                       clamped_variance_diagonal(gamma.gamma_hat);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Matrix y_star = sampler.sample(d.num_rows(), rng);
    const Vector ssh = forms.ssh(forms.contrast * (forms.solve_map * y_star));
    const Vector sse = quadratic_sse(d, y_star);
    if (below_floor(sse, floor)) {
      // A zero covariance produces the all-zero replicate rather than a redraw.
      if (sampler.rank() == 0) return 0.0;
      continue;
    }
    return statistics_from_sums(ssh, sse, h.q(), d.dof(), gamma.grid).get(kind);
  }
  throw NumericError("parametric_null_replicate: every sample was degenerate");
}

BootstrapEngine::BootstrapEngine(const FunctionalDataset& y, const DesignMatrix& d,
                                 const Hypothesis& h)
    : geometry_(d, h),
      residuals_(residual_functions(y, d, estimate_beta(y, d))),
      decomposition_(decompose(y, geometry_)),
      sampler_(estimate_covariance(y, d).gamma_hat) {
  if (h.num_points() != y.num_points()) throw InputError("hypothesis grid length mismatch");
  observed_ = statistics_from_sums(decomposition_.ssh, decomposition_.sse, geometry_.q(),
                                   geometry_.dof(), y.grid());
  sse_floor_ = kDegenerateFraction * decomposition_.sse;
}

std::optional<StatisticSet> BootstrapEngine::evaluate(const Eigen::Ref<const Matrix>& deviation,
                                                      const Eigen::Ref<const Matrix>& sample) const {
  const Vector sse = geometry_.sse(sample);
  if (below_floor(sse, sse_floor_)) return std::nullopt;
  return statistics_from_sums(geometry_.ssh_centered(deviation), sse, geometry_.q(),
                              geometry_.dof(), decomposition_.grid);
}

std::optional<StatisticSet> BootstrapEngine::nonparametric_from_indices(
    std::span<const Index> rows) const {
  if (static_cast<Index>(rows.size()) != residuals_.num_curves()) {
    throw InputError("nonparametric_from_indices: need one index per curve");
  }
  const std::vector<Index> idx(rows.begin(), rows.end());
  const Matrix v_star = residuals_.values()(idx, Eigen::all);
  // y* - X beta_hat = v*, and P y* = P v* since P X = 0.
  return evaluate(v_star, v_star);
}

std::optional<StatisticSet> BootstrapEngine::parametric_from_sample(
    const Eigen::Ref<const Matrix>& y_star) const {
  return evaluate(y_star, y_star);
}

StatisticSet BootstrapEngine::replicate(BootstrapKind kind, std::uint64_t seed, Index m,
                                        int max_attempts, Index* redraws) const {
  const Index n = residuals_.num_curves();
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Philox4x32 rng(seed, static_cast<std::uint64_t>(m), static_cast<std::uint32_t>(attempt));
    std::optional<StatisticSet> out;
    if (kind == BootstrapKind::Nonparametric) {
      const auto rows = draw_resample_indices(n, rng);
      out = nonparametric_from_indices(rows);
    } else {
      if (sampler_.rank() == 0) return StatisticSet{};
      out = parametric_from_sample(sampler_.sample(n, rng));
    }
    if (out) return *out;
    if (redraws) ++*redraws;
  }
  std::ostringstream msg;
  msg << "bootstrap replicate " << m << " was degenerate in " << max_attempts << " attempts";
  throw NumericError(msg.str());
}

std::vector<TestResult> BootstrapEngine::run(std::span<const StatisticKind> kinds,
                                             BootstrapKind bootstrap, Index m, std::uint64_t seed,
                                             const BootstrapOptions& options) const {
  if (m < 1) throw InputError("number of bootstrap replicates must be at least 1");
  for (const auto kind : kinds) {
    if (std::isnan(observed_.get(kind))) {
      // Re-derive through statistic() for its diagnostic message.
      statistic(decomposition_, kind);
      throw DegenerateVarianceError("observed statistic is undefined");
    }
  }

  std::vector<StatisticSet> reps(static_cast<std::size_t>(m));
  std::vector<Index> redraws(static_cast<std::size_t>(m), 0);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16) if (options.parallel)
  for (Index i = 0; i < m; ++i) {
    try {
      reps[static_cast<std::size_t>(i)] =
          replicate(bootstrap, seed, i, options.max_attempts, &redraws[static_cast<std::size_t>(i)]);
    } catch (...) {
#pragma omp critical(icfrm_bootstrap_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  Index total_redraws = 0;
  for (const auto r : redraws) total_redraws += r;
  if (total_redraws * 100 > m) {
    std::ostringstream msg;
    msg << total_redraws << " degenerate bootstrap draws were redrawn (" << m << " replicates)";
    log_warning(msg.str());
  }

  std::vector<TestResult> results;
  results.reserve(kinds.size());
  for (const auto kind : kinds) {
    TestResult r;
    r.kind = kind;
    r.bootstrap = bootstrap;
    r.observed = observed_.get(kind);
    r.m_replicates = m;
    r.seed = seed;
    r.redraws = total_redraws;
    Index exceed = 0;
    std::vector<double> values;
    if (options.keep_replicates) values.reserve(reps.size());
    for (const auto& rep : reps) {
      const double v = rep.get(kind);
      if (v > r.observed) ++exceed;
      if (options.keep_replicates) values.push_back(v);
    }
    r.p_value = static_cast<double>(exceed) / static_cast<double>(m);
    if (options.keep_replicates) r.replicates = std::move(values);
    results.push_back(std::move(r));
  }
  return results;
}

TestResult bootstrap_test(const FunctionalDataset& y, const DesignMatrix& d, const Hypothesis& h,
                          StatisticKind kind, BootstrapKind bootstrap, Index m, std::uint64_t seed,
                          const BootstrapOptions& options) {
  const BootstrapEngine engine(y, d, h);
  const StatisticKind kinds[] = {kind};
  return engine.run(kinds, bootstrap, m, seed, options).front();
}

}  // namespace icfrm
