#pragma once

#include "icfrm/bootstrap.hpp"
#include "icfrm/model.hpp"
#include "icfrm/rng.hpp"
#include "icfrm/stats.hpp"
#include "icfrm/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace icfrm {

/// Wiener dispersion h^2 = 0.3^2 of the Case 3 subject effects.
inline constexpr double kWienerDispersionSq = 0.09;

/// Subject-effect generator for the Monte-Carlo study.
struct NoiseCase {
  enum class Kind { KarhunenLoeveGaussian, KarhunenLoeveStudent, Wiener };

  Kind kind = Kind::KarhunenLoeveGaussian;
  double rho = 0.5;  ///< eigenvalue decay lambda_s = rho^s (Cases 1 and 2)
  int m0 = 13;       ///< number of Fourier basis functions, odd

  static NoiseCase case1(double rho, int m0 = 13);
  static NoiseCase case2(double rho, int m0 = 13);
  static NoiseCase case3();

  /// 1, 2 or 3.
  int number() const;
  std::string label() const;
};

/// Rows psi_1 = 1, psi_{2r} = sqrt2 sin(2 pi r t), psi_{2r+1} = sqrt2 cos(2 pi r t).
Matrix fourier_basis(const TimeGrid& grid, int m0);

/// Pointwise variance of the subject effects, sum_s lambda_s psi_s(t)^2 for
/// Cases 1-2 and h^2 t for Case 3 (with the same origin shift the generator uses).
Vector subject_effect_variance(const NoiseCase& noise, const TimeGrid& grid);

/// n independent subject-effect curves.
///
/// Case 3 is a Wiener process with dispersion 0.09. Its path starts at
/// v(t_1) ~ N(0, 0.09 * s_1); s_1 = t_1 when t_1 > 0, otherwise one grid step,
/// which keeps gamma(t_1, t_1) away from zero on grids that include t = 0.
FunctionalDataset gen_subject_effects(const NoiseCase& noise, Index n, const TimeGrid& grid,
                                      Philox4x32& rng);

/// y = X beta + v.
FunctionalDataset gen_responses(const DesignMatrix& d, const CoefficientEstimate& beta,
                                const FunctionalDataset& v);

/// Report columns in table order. The naive and bias-reduced columns are
/// never computed and print as n/a.
enum class TestColumn {
  L2Naive,
  L2BiasReduced,
  L2Nb,
  FNaive,
  FBiasReduced,
  FNb,
  GlobalNb,
  GlobalPb,
  FMaxNb,
  FMaxPb,
};
inline constexpr std::size_t kNumColumns = 10;
inline constexpr std::array<TestColumn, kNumColumns> kAllColumns = {
    TestColumn::L2Naive, TestColumn::L2BiasReduced, TestColumn::L2Nb,     TestColumn::FNaive,
    TestColumn::FBiasReduced, TestColumn::FNb,    TestColumn::GlobalNb, TestColumn::GlobalPb,
    TestColumn::FMaxNb,  TestColumn::FMaxPb};

/// T^N, T^B, T^nb, F^N, F^B, F^nb, G^nb, G^pb, Fmax^nb, Fmax^pb.
std::string_view column_label(TestColumn c);
bool column_implemented(TestColumn c);
/// (statistic, bootstrap) behind an implemented column.
std::pair<StatisticKind, BootstrapKind> column_test(TestColumn c);

struct ScenarioConfig {
  NoiseCase noise;
  double delta = 0.0;
  Index n_sims = 500;
  Index m_boot = 500;
  double alpha = 0.05;
  bool apply_scaling = false;
  Index grid_size = 43;
  std::uint64_t seed = 1;
  /// Coefficient functions at delta = 1; interpolated onto the simulation grid.
  std::optional<CoefficientEstimate> beta_ref;
};

struct SizePowerReport {
  std::string label;  ///< free-form row tag, e.g. a case or factor name
  NoiseCase noise;
  double delta = 0;
  bool scaled = false;
  Index n_sims = 0;
  Index m_boot = 0;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::array<std::optional<Index>, kNumColumns> rejections{};
  double wall_seconds = 0;

  /// rejections / n_sims, or nullopt for an n/a column.
  std::optional<double> rate(TestColumn c) const;
};

/// Seed of one table cell. Depends on the case, rho and delta but not on the
/// scaling flag, so scaled and unscaled runs share noise realisations.
std::uint64_t cell_seed(std::uint64_t base, const NoiseCase& noise, double delta);

/// Linear interpolation of each coefficient curve onto `grid`.
CoefficientEstimate interpolate_coefficients(const CoefficientEstimate& beta, const TimeGrid& grid);

/// Runs n_sims simulated datasets under y = X (delta beta_ref) + v and applies
/// every implemented test at level alpha (reject when p < alpha). Outer
/// replicates run on the OpenMP team, each with streams derived from
/// (seed, sim index).
SizePowerReport run_scenario(const ScenarioConfig& cfg, const DesignMatrix& d, const Hypothesis& h);

/// Gaussian simulation around a fitted model: y_i ~ N(x_i' beta, sigma).
struct RealDataSimConfig {
  Index n_sims = 500;
  Index m_boot = 500;
  double alpha = 0.05;
  bool apply_scaling = false;
  std::uint64_t seed = 1;
};

SizePowerReport realdata_simulation(const Matrix& sigma, const DesignMatrix& d,
                                    const Hypothesis& h, const CoefficientEstimate& beta,
                                    const RealDataSimConfig& cfg);

}  // namespace icfrm
