#include "oracles.hpp"

#include <icfrm/bootstrap.hpp>
#include <icfrm/io.hpp>
#include <icfrm/simulation.hpp>

#include <doctest.h>

#include <omp.h>

using namespace icfrm;

namespace {

FunctionalDataset case1_data(double rho, std::uint64_t seed, Index t = 43) {
  const DesignMatrix d = build_factorial_design();
  Philox4x32 rng(seed, 0);
  return gen_subject_effects(NoiseCase::case1(rho), d.num_rows(), TimeGrid::uniform(t), rng);
}

constexpr StatisticKind kAll[] = {StatisticKind::L2, StatisticKind::FRatio, StatisticKind::Global,
                                  StatisticKind::FMax};

}  // namespace

TEST_CASE("literal nonparametric replicate equals the engine replicate") {
  const DesignMatrix d = build_factorial_design();
  const FunctionalDataset y = case1_data(0.5, 4);
  const Hypothesis h = build_contrast_all();
  const BootstrapEngine engine(y, d, h);
  const CoefficientEstimate beta = estimate_beta(y, d);
  const FunctionalDataset resid = residual_functions(y, d, beta);
  for (Index m = 0; m < 5; ++m) {
    const StatisticSet rep = engine.replicate(BootstrapKind::Nonparametric, 99, m, 10, nullptr);
    for (const auto kind : kAll) {
      Philox4x32 rng(99, static_cast<std::uint64_t>(m), 0);
      const double literal = nonparametric_null_replicate(resid, beta, d, h, kind, rng);
      CHECK(rep.get(kind) == doctest::Approx(literal).epsilon(1e-8));
    }
  }
}

TEST_CASE("literal parametric replicate equals the engine replicate") {
  const DesignMatrix d = build_factorial_design();
  const FunctionalDataset y = case1_data(0.3, 5);
  const Hypothesis h = build_contrast(4);
  const BootstrapEngine engine(y, d, h);
  const CovarianceEstimate gamma = estimate_covariance(y, d);
  for (Index m = 0; m < 5; ++m) {
    const StatisticSet rep = engine.replicate(BootstrapKind::Parametric, 7, m, 10, nullptr);
    for (const auto kind : kAll) {
      Philox4x32 rng(7, static_cast<std::uint64_t>(m), 0);
      const double literal = parametric_null_replicate(gamma, d, h, kind, rng);
      CHECK(rep.get(kind) == doctest::Approx(literal).epsilon(1e-8));
    }
  }
}

TEST_CASE("bootstrap results do not depend on the thread count") {
  const DesignMatrix d = build_factorial_design();
  const FunctionalDataset y = case1_data(0.5, 6);
  const BootstrapEngine engine(y, d, build_contrast_all());
  BootstrapOptions keep;
  keep.keep_replicates = true;
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = engine.run(kAll, BootstrapKind::Nonparametric, 200, 3, keep);
  omp_set_num_threads(4);
  const auto four = engine.run(kAll, BootstrapKind::Nonparametric, 200, 3, keep);
  keep.parallel = false;
  const auto serial = engine.run(kAll, BootstrapKind::Parametric, 200, 3, keep);
  const auto par = engine.run(kAll, BootstrapKind::Parametric, 200, 3, {true, true, 1000});
  omp_set_num_threads(saved);
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].p_value == four[i].p_value);
    CHECK(*one[i].replicates == *four[i].replicates);
    CHECK(*serial[i].replicates == *par[i].replicates);
  }
}

TEST_CASE("p-value counts strict exceedances") {
  const DesignMatrix d = build_factorial_design();
  const FunctionalDataset y = case1_data(0.5, 8);
  const BootstrapEngine engine(y, d, build_contrast(2));
  BootstrapOptions keep;
  keep.keep_replicates = true;
  const auto r = engine.run(kAll, BootstrapKind::Nonparametric, 300, 11, keep);
  for (const auto& res : r) {
    Index exceed = 0;
    for (const double v : *res.replicates) exceed += v > res.observed ? 1 : 0;
    CHECK(res.p_value == doctest::Approx(static_cast<double>(exceed) / 300.0));
    CHECK(res.m_replicates == 300);
  }
}

TEST_CASE("nonparametric p-values are exactly scale invariant for G and Fmax") {
  const DesignMatrix d = build_factorial_design();
  const FunctionalDataset y = case1_data(0.5, 9);
  const Hypothesis h = build_contrast(1);
  const ScaleFunction s = ScaleFunction::reciprocal_shift(y.grid());
  const StatisticKind kinds[] = {StatisticKind::Global, StatisticKind::FMax};
  const auto a = BootstrapEngine(y, d, h).run(kinds, BootstrapKind::Nonparametric, 300, 5);
  const auto b = BootstrapEngine(scale_dataset(y, s), d, scale_hypothesis(h, s))
                     .run(kinds, BootstrapKind::Nonparametric, 300, 5);
  for (std::size_t i = 0; i < 2; ++i) CHECK(a[i].p_value == b[i].p_value);
}

TEST_CASE("Gaussian sampler reproduces a singular covariance") {
  std::mt19937_64 gen(12);
  const Matrix f = oracle::random_matrix(6, 2, gen);
  const Matrix cov = f * f.transpose();  // rank 2
  const GaussianCurveSampler sampler(cov);
  CHECK(sampler.rank() == 2);
  Philox4x32 rng(1, 0);
  const Matrix z = sampler.sample(40000, rng);
  const Matrix emp = z.transpose() * z / 40000.0;
  CHECK((emp - cov).cwiseAbs().maxCoeff() < 0.05 * cov.cwiseAbs().maxCoeff());
  CHECK(GaussianCurveSampler(Matrix::Zero(3, 3)).rank() == 0);
}

TEST_CASE("degenerate data") {
  const DesignMatrix d = build_factorial_design();
  std::mt19937_64 gen(1);
  // Zero residual variance everywhere: G and Fmax are undefined.
  const FunctionalDataset y(TimeGrid::uniform(5), d.x() * oracle::random_matrix(15, 5, gen));
  const BootstrapEngine engine(y, d, build_contrast(1, 5));
  CHECK_THROWS_AS(engine.run(kAll, BootstrapKind::Nonparametric, 10, 1), DegenerateVarianceError);
  CHECK_THROWS_AS(engine.run(kAll, BootstrapKind::Nonparametric, 0, 1), InputError);
}

TEST_CASE("bootstrap tokens") {
  CHECK(bootstrap_from_token("pb") == BootstrapKind::Parametric);
  CHECK(to_token(BootstrapKind::Nonparametric) == "nb");
  CHECK_THROWS_AS(bootstrap_from_token("xx"), InputError);
}
