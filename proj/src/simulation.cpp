#include "icfrm/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

namespace icfrm {

NoiseCase NoiseCase::case1(double rho, int m0) {
  return {Kind::KarhunenLoeveGaussian, rho, m0};
}

NoiseCase NoiseCase::case2(double rho, int m0) {
  return {Kind::KarhunenLoeveStudent, rho, m0};
}

NoiseCase NoiseCase::case3() { return {Kind::Wiener, 0.0, 13}; }

int NoiseCase::number() const {
  switch (kind) {
    case Kind::KarhunenLoeveGaussian: return 1;
    case Kind::KarhunenLoeveStudent: return 2;
    case Kind::Wiener: return 3;
  }
  return 0;
}

std::string NoiseCase::label() const {
  std::ostringstream out;
  out << "case" << number();
  if (kind != Kind::Wiener) out << "(rho=" << rho << ")";
  return out.str();
}

namespace {

void validate(const NoiseCase& noise) {
  if (noise.kind == NoiseCase::Kind::Wiener) return;
  if (!(noise.rho > 0 && noise.rho < 1)) throw InputError("rho must lie in (0, 1)");
  if (noise.m0 < 1 || noise.m0 % 2 == 0) throw InputError("m0 must be a positive odd integer");
}

// Case 3 time origin: s_j = t_j + shift with shift = one grid step when t_1 = 0.
double wiener_shift(const TimeGrid& grid) { return grid[0] > 0 ? 0.0 : grid[1] - grid[0]; }

std::uint64_t double_bits(double x) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &x, sizeof bits);
  return bits;
}

}  // namespace

Matrix fourier_basis(const TimeGrid& grid, int m0) {
  if (m0 < 1 || m0 % 2 == 0) throw InputError("fourier_basis: m0 must be a positive odd integer");
  const Index t_len = grid.size();
  Matrix basis(m0, t_len);
  basis.row(0).setOnes();
  const double two_pi = 2.0 * std::numbers::pi;
  for (int r = 1; r <= (m0 - 1) / 2; ++r) {
    for (Index j = 0; j < t_len; ++j) {
      basis(2 * r - 1, j) = std::numbers::sqrt2 * std::sin(two_pi * r * grid[j]);
      basis(2 * r, j) = std::numbers::sqrt2 * std::cos(two_pi * r * grid[j]);
    }
  }
  return basis;
}

Vector subject_effect_variance(const NoiseCase& noise, const TimeGrid& grid) {
  validate(noise);
  if (noise.kind == NoiseCase::Kind::Wiener) {
    return kWienerDispersionSq * (grid.points().array() + wiener_shift(grid)).matrix();
  }
  const Matrix psi = fourier_basis(grid, noise.m0);
  Vector var = Vector::Zero(grid.size());
  for (int s = 1; s <= noise.m0; ++s) {
    var += std::pow(noise.rho, s) * psi.row(s - 1).array().square().matrix().transpose();
  }
  return var;
}

FunctionalDataset gen_subject_effects(const NoiseCase& noise, Index n, const TimeGrid& grid,
                                      Philox4x32& rng) {
  validate(noise);
  if (n < 1) throw InputError("gen_subject_effects: n must be positive");
  const Index t_len = grid.size();
  std::normal_distribution<double> normal(0.0, 1.0);

  if (noise.kind == NoiseCase::Kind::Wiener) {
    const double shift = wiener_shift(grid);
    Matrix v(n, t_len);
    for (Index i = 0; i < n; ++i) {
      double previous_time = 0.0;
      double level = 0.0;
      for (Index j = 0; j < t_len; ++j) {
        const double s = grid[j] + shift;
        level += std::sqrt(kWienerDispersionSq * (s - previous_time)) * normal(rng);
        v(i, j) = level;
        previous_time = s;
      }
    }
    return FunctionalDataset(grid, std::move(v));
  }

  const Matrix psi = fourier_basis(grid, noise.m0);
  Matrix scores(n, noise.m0);
  std::student_t_distribution<double> student(4.0);
  for (Index i = 0; i < n; ++i) {
    for (int s = 1; s <= noise.m0; ++s) {
      const double sd = std::sqrt(std::pow(noise.rho, s));
      scores(i, s - 1) = noise.kind == NoiseCase::Kind::KarhunenLoeveGaussian
                             ? sd * normal(rng)
                             : sd * student(rng) / std::numbers::sqrt2;
    }
  }
  return FunctionalDataset(grid, scores * psi);
}

FunctionalDataset gen_responses(const DesignMatrix& d, const CoefficientEstimate& beta,
                                const FunctionalDataset& v) {
  if (v.num_curves() != d.num_rows() || beta.beta_hat.rows() != d.num_params() ||
      beta.beta_hat.cols() != v.num_points()) {
    throw InputError("gen_responses: inconsistent dimensions");
  }
  return FunctionalDataset(v.grid(), d.x() * beta.beta_hat + v.values());
}

std::string_view column_label(TestColumn c) {
  switch (c) {
    case TestColumn::L2Naive: return "T^N";
    case TestColumn::L2BiasReduced: return "T^B";
    case TestColumn::L2Nb: return "T^nb";
    case TestColumn::FNaive: return "F^N";
    case TestColumn::FBiasReduced: return "F^B";
    case TestColumn::FNb: return "F^nb";
    case TestColumn::GlobalNb: return "G^nb";
    case TestColumn::GlobalPb: return "G^pb";
    case TestColumn::FMaxNb: return "Fmax^nb";
    case TestColumn::FMaxPb: return "Fmax^pb";
  }
  return "?";
}

bool column_implemented(TestColumn c) {
  return c != TestColumn::L2Naive && c != TestColumn::L2BiasReduced && c != TestColumn::FNaive &&
         c != TestColumn::FBiasReduced;
}

std::pair<StatisticKind, BootstrapKind> column_test(TestColumn c) {
  switch (c) {
    case TestColumn::L2Nb: return {StatisticKind::L2, BootstrapKind::Nonparametric};
    case TestColumn::FNb: return {StatisticKind::FRatio, BootstrapKind::Nonparametric};
    case TestColumn::GlobalNb: return {StatisticKind::Global, BootstrapKind::Nonparametric};
    case TestColumn::GlobalPb: return {StatisticKind::Global, BootstrapKind::Parametric};
    case TestColumn::FMaxNb: return {StatisticKind::FMax, BootstrapKind::Nonparametric};
    case TestColumn::FMaxPb: return {StatisticKind::FMax, BootstrapKind::Parametric};
    default: break;
  }
  throw InputError("column " + std::string(column_label(c)) + " is not implemented");
}

std::optional<double> SizePowerReport::rate(TestColumn c) const {
  const auto& count = rejections[static_cast<std::size_t>(c)];
  if (!count || n_sims == 0) return std::nullopt;
  return static_cast<double>(*count) / static_cast<double>(n_sims);
}

std::uint64_t cell_seed(std::uint64_t base, const NoiseCase& noise, double delta) {
  std::uint64_t s = derive_seed(base, static_cast<std::uint64_t>(noise.number()));
  if (noise.kind != NoiseCase::Kind::Wiener) {
    s = derive_seed(s, double_bits(noise.rho));
    s = derive_seed(s, static_cast<std::uint64_t>(noise.m0));
  }
  return derive_seed(s, double_bits(delta));
}

CoefficientEstimate interpolate_coefficients(const CoefficientEstimate& beta,
                                             const TimeGrid& grid) {
  const Vector& src = beta.grid.points();
  if (src.size() == grid.size() && (src - grid.points()).cwiseAbs().maxCoeff() < 1e-12) {
    return {grid, beta.beta_hat};
  }
  Matrix out(beta.beta_hat.rows(), grid.size());
  Index k = 0;
  for (Index j = 0; j < grid.size(); ++j) {
    const double t = grid[j];
    while (k + 2 < src.size() && src[k + 1] < t) ++k;
    const double w = std::clamp((t - src[k]) / (src[k + 1] - src[k]), 0.0, 1.0);
    out.col(j) = (1.0 - w) * beta.beta_hat.col(k) + w * beta.beta_hat.col(k + 1);
  }
  return {grid, std::move(out)};
}

namespace {

constexpr std::uint64_t kNoiseStream = ~0ull;

// Shared outer loop: each simulated dataset gets every implemented test.
SizePowerReport simulate_rejections(
    Index n_sims, Index m_boot, double alpha, std::uint64_t seed, const DesignMatrix& d,
    const Hypothesis& h, const std::function<FunctionalDataset(Philox4x32&)>& generate) {
  if (n_sims < 1) throw InputError("n_sims must be at least 1");
  if (m_boot < 1) throw InputError("m_boot must be at least 1");
  if (!(alpha > 0 && alpha < 1)) throw InputError("alpha must lie in (0, 1)");

  const auto start = std::chrono::steady_clock::now();
  std::vector<std::array<bool, kNumColumns>> rejected(static_cast<std::size_t>(n_sims));
  std::exception_ptr failure;

  static constexpr StatisticKind kNbKinds[] = {StatisticKind::L2, StatisticKind::FRatio,
                                               StatisticKind::Global, StatisticKind::FMax};
  static constexpr TestColumn kNbColumns[] = {TestColumn::L2Nb, TestColumn::FNb,
                                              TestColumn::GlobalNb, TestColumn::FMaxNb};
  static constexpr StatisticKind kPbKinds[] = {StatisticKind::Global, StatisticKind::FMax};
  static constexpr TestColumn kPbColumns[] = {TestColumn::GlobalPb, TestColumn::FMaxPb};

  BootstrapOptions inner;
  inner.parallel = false;

#pragma omp parallel for schedule(dynamic, 1)
  for (Index s = 0; s < n_sims; ++s) {
    try {
      const std::uint64_t sim_seed = derive_seed(seed, static_cast<std::uint64_t>(s));
      Philox4x32 noise_rng(sim_seed, kNoiseStream);
      const FunctionalDataset y = generate(noise_rng);
      const BootstrapEngine engine(y, d, h);
      auto& row = rejected[static_cast<std::size_t>(s)];
      row.fill(false);
      const auto nb = engine.run(kNbKinds, BootstrapKind::Nonparametric, m_boot,
                                 derive_seed(sim_seed, 1), inner);
      for (std::size_t i = 0; i < nb.size(); ++i) {
        row[static_cast<std::size_t>(kNbColumns[i])] = nb[i].p_value < alpha;
      }
      const auto pb = engine.run(kPbKinds, BootstrapKind::Parametric, m_boot,
                                 derive_seed(sim_seed, 2), inner);
      for (std::size_t i = 0; i < pb.size(); ++i) {
        row[static_cast<std::size_t>(kPbColumns[i])] = pb[i].p_value < alpha;
      }
    } catch (...) {
#pragma omp critical(icfrm_simulation_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  SizePowerReport report;
  report.n_sims = n_sims;
  report.m_boot = m_boot;
  report.alpha = alpha;
  report.seed = seed;
  for (const auto c : kAllColumns) {
    if (!column_implemented(c)) continue;
    Index count = 0;
    for (const auto& row : rejected) count += row[static_cast<std::size_t>(c)] ? 1 : 0;
    report.rejections[static_cast<std::size_t>(c)] = count;
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace

SizePowerReport run_scenario(const ScenarioConfig& cfg, const DesignMatrix& d,
                             const Hypothesis& h) {
  validate(cfg.noise);
  if (cfg.delta < 0) throw InputError("delta must be nonnegative");
  const TimeGrid grid = TimeGrid::uniform(cfg.grid_size);
  if (h.num_points() != grid.size()) throw InputError("hypothesis grid length mismatch");

  CoefficientEstimate beta{grid, Matrix::Zero(d.num_params(), grid.size())};
  if (cfg.delta != 0) {
    if (!cfg.beta_ref) throw InputError("run_scenario: delta > 0 needs beta_ref");
    beta = interpolate_coefficients(*cfg.beta_ref, grid);
    beta.beta_hat *= cfg.delta;
  }
  if (beta.beta_hat.rows() != d.num_params()) {
    throw InputError("beta_ref has the wrong number of coefficients for the design");
  }

  std::optional<ScaleFunction> scale;
  if (cfg.apply_scaling) scale = ScaleFunction::reciprocal_shift(grid);
  const Hypothesis hyp = scale ? scale_hypothesis(h, *scale) : h;

  auto generate = [&](Philox4x32& rng) {
    FunctionalDataset y = gen_responses(d, beta, gen_subject_effects(cfg.noise, d.num_rows(), grid, rng));
    return scale ? scale_dataset(y, *scale) : y;
  };
  SizePowerReport report =
      simulate_rejections(cfg.n_sims, cfg.m_boot, cfg.alpha, cfg.seed, d, hyp, generate);
  report.noise = cfg.noise;
  report.delta = cfg.delta;
  report.scaled = cfg.apply_scaling;
  report.label = cfg.noise.label();
  return report;
}

SizePowerReport realdata_simulation(const Matrix& sigma, const DesignMatrix& d,
                                    const Hypothesis& h, const CoefficientEstimate& beta,
                                    const RealDataSimConfig& cfg) {
  const TimeGrid& grid = beta.grid;
  if (sigma.rows() != grid.size() || sigma.cols() != grid.size()) {
    throw InputError("realdata_simulation: covariance does not match the grid");
  }
  if (beta.beta_hat.rows() != d.num_params()) throw InputError("realdata_simulation: beta rows");
  const GaussianCurveSampler sampler(sigma);
  const Matrix mean = d.x() * beta.beta_hat;

  std::optional<ScaleFunction> scale;
  if (cfg.apply_scaling) scale = ScaleFunction::reciprocal_shift(grid);
  const Hypothesis hyp = scale ? scale_hypothesis(h, *scale) : h;

  auto generate = [&](Philox4x32& rng) {
    FunctionalDataset y(grid, mean + sampler.sample(d.num_rows(), rng));
    return scale ? scale_dataset(y, *scale) : y;
  };
  SizePowerReport report =
      simulate_rejections(cfg.n_sims, cfg.m_boot, cfg.alpha, cfg.seed, d, hyp, generate);
  report.scaled = cfg.apply_scaling;
  report.label = "realdata";
  return report;
}

}  // namespace icfrm
