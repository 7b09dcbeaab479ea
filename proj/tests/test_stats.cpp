#include "oracles.hpp"

#include <icfrm/io.hpp>
#include <icfrm/stats.hpp>

#include <doctest.h>

#include <numbers>

using namespace icfrm;

TEST_CASE("trapezoid rule integrates sin over [0, pi]") {
  const TimeGrid grid = TimeGrid::uniform(2001, 0.0, std::numbers::pi);
  const Vector f = grid.points().array().sin().matrix();
  CHECK(integrate_grid(f, grid) == doctest::Approx(2.0).epsilon(1e-6));
  // Exact for linear functions on an uneven grid.
  Vector t(4);
  t << 0.0, 0.1, 0.5, 1.0;
  const TimeGrid uneven(t);
  CHECK(integrate_grid(Vector(3.0 * t.array() + 1.0), uneven) == doctest::Approx(2.5));
}

TEST_CASE("q = 1 SSH matches the scalar formula") {
  std::mt19937_64 gen(21);
  const DesignMatrix d = build_factorial_design();
  const FunctionalDataset y(TimeGrid::uniform(43), oracle::random_matrix(36, 43, gen));
  for (int f = 1; f <= kNumFactors; ++f) {
    const Hypothesis h = build_contrast(f);
    const PointwiseDecomposition dec = decompose(y, d, h);
    const Matrix c = h.contrast();
    const double m = (c * d.xtx_pinv() * c.transpose())(0, 0);
    const Vector est = (c * d.xtx_pinv() * d.x().transpose() * y.values()).transpose();
    const Vector expected = est.array().square() / m;
    CHECK((dec.ssh - expected).cwiseAbs().maxCoeff() < 1e-9 * expected.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("q = 7 SSH matches the explicit quadratic form") {
  std::mt19937_64 gen(22);
  const DesignMatrix d = build_factorial_design();
  const FunctionalDataset y(TimeGrid::uniform(9), oracle::random_matrix(36, 9, gen));
  const Hypothesis h = build_contrast_all(9);
  const PointwiseDecomposition dec = decompose(y, d, h);
  const Matrix c = h.contrast();
  const Matrix m_inv = oracle::gauss_jordan_inverse(c * d.xtx_pinv() * c.transpose());
  const Matrix est = c * d.xtx_pinv() * d.x().transpose() * y.values();
  for (Index j = 0; j < 9; ++j) {
    const double expected = est.col(j).dot(m_inv * est.col(j));
    CHECK(dec.ssh[j] == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("statistics from the pointwise sums") {
  const TimeGrid grid = TimeGrid::uniform(3);
  PointwiseDecomposition dec{grid, Vector::Constant(3, 4.0), Vector::Constant(3, 8.0),
                             Vector::Constant(3, 2.0), 2, 4};
  CHECK(statistic(dec, StatisticKind::L2) == doctest::Approx(4.0));
  CHECK(statistic(dec, StatisticKind::FRatio) == doctest::Approx(1.0));
  CHECK(statistic(dec, StatisticKind::Global) == doctest::Approx(1.0));
  dec.ssh[1] = 10.0;
  CHECK(statistic(dec, StatisticKind::FMax) == doctest::Approx(2.5));
  dec.gamma_diag[2] = 0.0;
  CHECK_THROWS_AS(statistic(dec, StatisticKind::Global), DegenerateVarianceError);
  CHECK_NOTHROW(statistic(dec, StatisticKind::L2));
}

TEST_CASE("scale invariance of G and Fmax, not of T and F") {
  std::mt19937_64 gen(33);
  std::uniform_real_distribution<double> mag(0.2, 5.0);
  std::bernoulli_distribution sign(0.5);
  const DesignMatrix d = build_factorial_design();
  const FunctionalDataset y(TimeGrid::uniform(43), oracle::random_matrix(36, 43, gen));
  const Hypothesis h = build_contrast_all();
  const PointwiseDecomposition base = decompose(y, d, h);
  for (int trial = 0; trial < 20; ++trial) {
    Vector hv(43);
    for (Index j = 0; j < 43; ++j) hv[j] = (sign(gen) ? 1 : -1) * mag(gen);
    const ScaleFunction sf(hv);
    const PointwiseDecomposition scaled = decompose(scale_dataset(y, sf), d, scale_hypothesis(h, sf));
    for (const auto kind : {StatisticKind::Global, StatisticKind::FMax}) {
      CHECK(statistic(scaled, kind) == doctest::Approx(statistic(base, kind)).epsilon(1e-9));
    }
  }
  const ScaleFunction h43 = ScaleFunction::reciprocal_shift(y.grid());
  const PointwiseDecomposition scaled = decompose(scale_dataset(y, h43), d, scale_hypothesis(h, h43));
  for (const auto kind : {StatisticKind::L2, StatisticKind::FRatio}) {
    const double a = statistic(base, kind);
    const double b = statistic(scaled, kind);
    CHECK(std::abs(a - b) / std::abs(a) > 1e-3);
  }
}

TEST_CASE("scale functions") {
  CHECK_THROWS_AS(ScaleFunction(Vector::Zero(3)), InvalidScaleError);
  const ScaleFunction h = ScaleFunction::reciprocal_shift(TimeGrid::uniform(43));
  CHECK(h.values()[0] == doctest::Approx(43.0));
  CHECK(h.values()[42] == doctest::Approx(43.0 / 44.0));
  CHECK((h.inverse().values().array() * h.values().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("contrast geometry rejects bad hypotheses") {
  const DesignMatrix d = build_factorial_design();
  Matrix bad = Matrix::Zero(1, 15);
  bad(0, 3) = 1.0;
  CHECK_THROWS_AS(ContrastGeometry(d, Hypothesis(bad, 4)), EstimabilityError);
  CHECK_THROWS_AS(ContrastGeometry(d, Hypothesis(Matrix::Identity(9, 15), 4)), RankError);
  CHECK_THROWS_AS(ContrastGeometry(d, Hypothesis(Matrix::Ones(1, 14), 4)),
                  InputError);
  CHECK(statistic_from_token("fmax") == StatisticKind::FMax);
  CHECK_THROWS_AS(statistic_from_token("x"), InputError);
}
