#pragma once

#include "icfrm/model.hpp"
#include "icfrm/rng.hpp"
#include "icfrm/stats.hpp"
#include "icfrm/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace icfrm {

enum class BootstrapKind { Nonparametric, Parametric };

/// nb / pb.
std::string_view to_token(BootstrapKind kind);
BootstrapKind bootstrap_from_token(std::string_view token);

inline constexpr Index kDefaultReplicates = 1000;

struct TestResult {
  StatisticKind kind = StatisticKind::Global;
  BootstrapKind bootstrap = BootstrapKind::Nonparametric;
  double observed = 0;
  double p_value = 0;  ///< #{replicate > observed} / M
  Index m_replicates = 0;
  std::uint64_t seed = 0;
  Index redraws = 0;
  std::optional<std::vector<double>> replicates;
};

/// v_i(t) = y_i(t) - x_i' beta_hat(t).
FunctionalDataset residual_functions(const FunctionalDataset& y, const DesignMatrix& d,
                                     const CoefficientEstimate& beta);

/// n indices drawn uniformly with replacement.
std::vector<Index> draw_resample_indices(Index n, Philox4x32& rng);

/// Zero-mean Gaussian curves with a given (possibly singular) covariance.
/// Uses the eigendecomposition with eigenvalues below T * eps * lambda_max
/// (including all negative ones) set to zero.
class GaussianCurveSampler {
 public:
  explicit GaussianCurveSampler(const Matrix& covariance);

  /// n x T matrix of independent draws.
  Matrix sample(Index n, Philox4x32& rng) const;
  Index rank() const { return factor_.cols(); }
  Index num_points() const { return factor_.rows(); }

 private:
  Matrix factor_;  ///< T x r, factor * factor' = clipped covariance
};

/// Nonparametric bootstrap replicate following the textbook recipe:
/// resample residual curves, rebuild y* = X beta_hat + v*, refit, centre SSH*
/// at beta_hat. Degenerate SSE* draws are redrawn from the same stream.
double nonparametric_null_replicate(const FunctionalDataset& resid, const CoefficientEstimate& beta,
                                    const DesignMatrix& d, const Hypothesis& h, StatisticKind kind,
                                    Philox4x32& rng);

/// Parametric bootstrap replicate: y* ~ GP(0, gamma_hat), SSH* centred at 0.
double parametric_null_replicate(const CovarianceEstimate& gamma, const DesignMatrix& d,
                                 const Hypothesis& h, StatisticKind kind, Philox4x32& rng);

struct BootstrapOptions {
  bool keep_replicates = false;
  /// Evaluate replicates on the OpenMP team; results do not depend on it.
  bool parallel = true;
  /// Upper bound on redraws for a single replicate before giving up.
  int max_attempts = 1000;
};

/// Bootstrap null distributions for one (data, design, hypothesis) triple.
///
/// Each replicate statistic is computed from the whitened contrast operator:
/// for the nonparametric branch C(beta* - beta_hat) = A v*, and for both
/// branches SSE* = || P y* ||^2 with P the residual projector. Replicate m uses
/// the Philox stream (seed, m, attempt), so results are identical for any
/// thread count. A replicate is redrawn when SSE*(t) <= 1e-12 * SSE(t) at
/// some grid point, whichever statistic is requested, so every statistic
/// sees the same replicate sequence.
class BootstrapEngine {
 public:
  BootstrapEngine(const FunctionalDataset& y, const DesignMatrix& d, const Hypothesis& h);

  const PointwiseDecomposition& decomposition() const { return decomposition_; }
  /// Observed statistics; global / f_max are NaN when gamma(t,t) vanishes.
  const StatisticSet& observed() const { return observed_; }
  const FunctionalDataset& residuals() const { return residuals_; }
  const ContrastGeometry& geometry() const { return geometry_; }
  const GaussianCurveSampler& sampler() const { return sampler_; }

  /// Replicate from explicit resampling indices; nullopt if degenerate.
  std::optional<StatisticSet> nonparametric_from_indices(std::span<const Index> rows) const;
  /// Replicate from an explicit null sample y* (n x T); nullopt if degenerate.
  std::optional<StatisticSet> parametric_from_sample(const Eigen::Ref<const Matrix>& y_star) const;

  StatisticSet replicate(BootstrapKind kind, std::uint64_t seed, Index m, int max_attempts,
                         Index* redraws) const;

  /// One TestResult per requested statistic, all sharing the same replicates.
  std::vector<TestResult> run(std::span<const StatisticKind> kinds, BootstrapKind bootstrap,
                              Index m, std::uint64_t seed,
                              const BootstrapOptions& options = {}) const;

 private:
  std::optional<StatisticSet> evaluate(const Eigen::Ref<const Matrix>& deviation,
                                       const Eigen::Ref<const Matrix>& sample) const;
  ContrastGeometry geometry_;
  FunctionalDataset residuals_;
  PointwiseDecomposition decomposition_;
  StatisticSet observed_;
  Vector sse_floor_;
  GaussianCurveSampler sampler_;
};

TestResult bootstrap_test(const FunctionalDataset& y, const DesignMatrix& d, const Hypothesis& h,
                          StatisticKind kind, BootstrapKind bootstrap,
                          Index m = kDefaultReplicates, std::uint64_t seed = 1,
                          const BootstrapOptions& options = {});

}  // namespace icfrm
