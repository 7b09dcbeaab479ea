// Writes the synthetic stand-in for the audible-noise data and its fitted
// coefficient functions:
//   make_surrogate <out_dir>   ->  audible_noise_surrogate.csv, beta_hat.csv
//
// Curves are eta(t) + sum_i (+/-) d_i(t)/2 + v(t) on 43 speeds from 1000 to
// 2500 rpm, with smooth correlated noise v. The contrast shapes d_i are made
// up: G and D broad and large, A and C moderate, F a narrow peak, B and E
// small, all damped towards the lowest speed.

#include <icfrm/io.hpp>
#include <icfrm/model.hpp>
#include <icfrm/rng.hpp>
#include <icfrm/simulation.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <random>

using namespace icfrm;

namespace {

constexpr std::uint64_t kSeed = 20020917;
// Overall contrast size in dB units.
constexpr double kAmplitude = 1.0;
constexpr double kNoiseScale = 0.8;

double bump(double t, double centre, double width) {
  const double z = (t - centre) / width;
  return std::exp(-z * z);
}

// Effects grow from near zero at the lowest speed.
double ramp(double t) { return t / (t + 0.12); }

Vector contrast_shape(int factor, const Vector& t) {
  Vector d(t.size());
  for (Index j = 0; j < t.size(); ++j) {
    const double s = t[j];
    const double r = ramp(s);
    switch (factor) {
      case 1: d[j] = 1.0 * r * (0.7 + 0.3 * std::cos(2 * std::numbers::pi * 0.8 * s)); break;
      case 2: d[j] = 0.4 * r * std::sin(3 * std::numbers::pi * s); break;
      case 3: d[j] = -1.0 * r * (1.1 - 0.6 * s) - 0.8 * bump(s, 0.3, 0.07); break;
      case 4: d[j] = 1.8 * r * (0.5 + 0.6 * s) + 1.8 * bump(s, 0.78, 0.05); break;
      case 5: d[j] = 0.5 * r * std::cos(2 * std::numbers::pi * s); break;
      case 6: d[j] = 0.2 * r + 3.5 * bump(s, 0.62, 0.035); break;
      case 7: d[j] = 7.0 * r * (0.6 + 0.5 * s) + 6.0 * bump(s, 0.4, 0.045); break;
      default: d[j] = 0;
    }
    d[j] *= kAmplitude;
  }
  return d;
}

// Smooth curve-to-curve noise: a Fourier expansion with decaying variances
// plus a little independent measurement noise.
Matrix surrogate_noise(Index n, const TimeGrid& grid, Philox4x32& rng) {
  const Matrix psi = fourier_basis(grid, 13);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix v(n, grid.size());
  for (Index i = 0; i < n; ++i) {
    Vector scores(psi.rows());
    for (Index s = 0; s < scores.size(); ++s) scores[s] = kNoiseScale * std::sqrt(1.4 * std::pow(0.55, s)) * normal(rng);
    v.row(i) = scores.transpose() * psi;
    for (Index j = 0; j < grid.size(); ++j) v(i, j) += kNoiseScale * 0.2 * normal(rng);
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_surrogate <out_dir>\n";
    return 2;
  }
  const std::filesystem::path out(argv[1]);
  std::filesystem::create_directories(out);

  RawNoiseTable table;
  table.rpm = Vector::LinSpaced(kNumSpeeds, 1000.0, 2500.0);
  const TimeGrid grid = normalized_speed_grid(table.rpm);
  const Vector& t = grid.points();

  Matrix beta = Matrix::Zero(kNumDesignColumns, kNumSpeeds);
  beta.row(0) = (68.0 + 9.0 * t.array() + 1.5 * (std::numbers::pi * t.array()).sin()).matrix().transpose();
  for (int f = 1; f <= kNumFactors; ++f) {
    const Vector d = contrast_shape(f, t);
    beta.row(2 * f - 1) = 0.5 * d.transpose();
    beta.row(2 * f) = -0.5 * d.transpose();
  }

  const Matrix x = factorial_design_matrix();
  Philox4x32 rng(kSeed, 0);
  table.spl = x * beta + surrogate_noise(kNumRuns, grid, rng);
  for (Index i = 0; i < kNumRuns; ++i) table.run_labels.push_back("run" + std::to_string(i + 1));
  write_noise_csv(out / "audible_noise_surrogate.csv", table);

  const FunctionalDataset y = to_dataset(read_noise_csv(out / "audible_noise_surrogate.csv"));
  const DesignMatrix d(x);
  write_coefficients_csv(out / "beta_hat.csv", estimate_beta(y, d));
  std::cout << "wrote " << (out / "audible_noise_surrogate.csv").string() << " and "
            << (out / "beta_hat.csv").string() << "\n";
  return 0;
}
