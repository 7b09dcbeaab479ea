#include <icfrm/io.hpp>

#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>

using namespace icfrm;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "icfrm_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

RawNoiseTable small_table() {
  RawNoiseTable t;
  t.rpm = Vector::LinSpaced(kNumSpeeds, 1000.0, 2500.0);
  t.spl.resize(kNumRuns, kNumSpeeds);
  for (Index i = 0; i < kNumRuns; ++i) {
    t.run_labels.push_back("r" + std::to_string(i));
    for (Index j = 0; j < kNumSpeeds; ++j) t.spl(i, j) = 60.0 + 0.1 * i + 1.0 / (j + 3.0);
  }
  return t;
}

}  // namespace

TEST_CASE("embedded design matrix") {
  const Matrix x = factorial_design_matrix();
  REQUIRE(x.rows() == 36);
  REQUIRE(x.cols() == 15);
  Vector first(15);
  first << 1, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 0, 1, 0, 1;
  CHECK(x.row(0) == first.transpose());
  for (Index i = 32; i < 36; ++i) CHECK(x.row(i) == x.row(31));
  CHECK((x.col(0).array() == 1.0).all());
  for (int f = 1; f <= 7; ++f) CHECK(x.col(2 * f - 1) + x.col(2 * f) == x.col(0));
  // Checksum over all entries weighted by position.
  std::uint64_t sum = 0;
  for (Index i = 0; i < 36; ++i)
    for (Index j = 0; j < 15; ++j) sum += static_cast<std::uint64_t>(x(i, j)) * (i * 15 + j + 1);
  CHECK(sum == 77792);
  CHECK(build_factorial_design().rank() == 8);
  // Each factor is at its low level in 16 runs.
  for (int f = 1; f <= 7; ++f) CHECK(x.col(2 * f - 1).sum() == 16);
}

TEST_CASE("contrast matrices") {
  const Hypothesis a = build_contrast(1);
  CHECK(a.q() == 1);
  CHECK(a.contrast()(0, 1) == 1.0);
  CHECK(a.contrast()(0, 2) == -1.0);
  CHECK(a.contrast().cwiseAbs().sum() == 2.0);
  CHECK((a.null_values().array() == 0).all());
  const Hypothesis all = build_contrast_all();
  CHECK(all.q() == 7);
  CHECK(all.contrast().row(6) == build_contrast(7).contrast());
  const DesignMatrix d = build_factorial_design();
  for (int f = 1; f <= 7; ++f) {
    const Matrix c = build_contrast(f).contrast();
    CHECK((c * d.xtx_pinv() * d.x().transpose() * d.x() - c).cwiseAbs().maxCoeff() < 1e-8);
  }
  CHECK_THROWS_AS(build_contrast(8), InputError);
  CHECK(factor_from_token("d") == 4);
  CHECK(factor_from_token("7") == 7);
  CHECK_THROWS_AS(factor_from_token("H"), InputError);
}

TEST_CASE("noise CSV round trip is exact") {
  const RawNoiseTable t = small_table();
  const fs::path p = temp_path("roundtrip.csv");
  write_noise_csv(p, t);
  const RawNoiseTable back = read_noise_csv(p);
  CHECK(back.spl == t.spl);
  CHECK(back.rpm == t.rpm);
  CHECK(back.run_labels == t.run_labels);
  const FunctionalDataset y = to_dataset(back);
  CHECK(y.num_curves() == 36);
  CHECK(y.num_points() == 43);
  CHECK(y.grid()[0] == 0.0);
  CHECK(y.grid()[42] == 1.0);
  CHECK(y.grid()[21] == doctest::Approx((t.rpm[21] - 1000.0) / 1500.0));
}

TEST_CASE("curves-as-columns layout") {
  const RawNoiseTable t = small_table();
  std::ostringstream out;
  out.precision(17);
  out << "rpm";
  for (Index i = 0; i < kNumRuns; ++i) out << ",r" << i;
  out << "\n";
  for (Index j = 0; j < kNumSpeeds; ++j) {
    out << t.rpm[j];
    for (Index i = 0; i < kNumRuns; ++i) out << ',' << t.spl(i, j);
    out << "\n";
  }
  const fs::path p = temp_path("columns.csv");
  write(p, out.str());
  const RawNoiseTable back = read_noise_csv(p, CsvLayout::CurvesAsColumns);
  CHECK((back.spl - t.spl).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_THROWS_AS(read_noise_csv(p, CsvLayout::CurvesAsRows), FormatError);
}

TEST_CASE("malformed noise CSV files") {
  RawNoiseTable t = small_table();
  const fs::path p = temp_path("short.csv");
  t.spl.conservativeResize(35, kNumSpeeds);
  t.run_labels.pop_back();
  write_noise_csv(p, t);
  try {
    read_noise_csv(p);
    FAIL("expected a shape error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("35 curves") != std::string::npos);
  }

  write_noise_csv(p, small_table());
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  const auto pos = text.find('\n', text.find('\n') + 1);
  text.replace(pos + 1, text.find(',', pos + 1) - pos - 1, "x");  // label, still fine
  const auto cell = text.find(',', pos + 1);
  text.replace(cell + 1, 3, "abc");
  write(p, text);
  try {
    read_noise_csv(p);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  CHECK_THROWS_AS(load_noise_data(temp_path("missing.csv")), DataUnavailableError);
}

TEST_CASE("coefficient CSV round trip") {
  const CoefficientEstimate b{TimeGrid::uniform(7), Matrix::Random(15, 7)};
  const fs::path p = temp_path("beta.csv");
  write_coefficients_csv(p, b);
  const CoefficientEstimate back = read_coefficients_csv(p);
  CHECK(back.beta_hat == b.beta_hat);
  CHECK(back.grid == b.grid);
}

TEST_CASE("bundled coefficient file fits the design") {
  const CoefficientEstimate b = read_coefficients_csv(bundled_beta_path());
  CHECK(b.beta_hat.rows() == 15);
  CHECK(b.beta_hat.cols() == 43);
}

TEST_CASE("scenario JSON parsing") {
  const std::string good = R"({"name": "x", "case": "case1", "n_sims": 3, "m_boot": 9, "seed": 4,
    "cells": [{"rho": 0.5, "delta": [0, 0.1]}, {"rho": 0.9, "delta": 0.2}]})";
  const ScenarioFile f = parse_scenario_json(good, data_dir());
  REQUIRE(f.cells.size() == 3);
  CHECK(f.cells[0].n_sims == 3);
  CHECK(f.cells[1].delta == 0.1);
  CHECK(f.cells[2].noise.rho == 0.9);
  CHECK(f.cells[1].beta_ref.has_value());
  CHECK(f.cells[0].seed == cell_seed(4, NoiseCase::case1(0.5), 0.0));

  const auto schema_error = [](const std::string& text, const std::string& field) {
    try {
      parse_scenario_json(text);
      return false;
    } catch (const SchemaError& e) {
      return std::string(e.what()).find(field) != std::string::npos;
    }
  };
  CHECK(schema_error(R"({"case": "case1", "cells": []})", "seed"));
  CHECK(schema_error(R"({"case": "case1", "seed": 1, "cells": [{"delta": 0}]})", "rho"));
  CHECK(schema_error(R"({"case": "case4", "seed": 1, "cells": [{"delta": 0}]})", "case"));
  CHECK(schema_error(R"({"case": "case3", "seed": 1, "n_sims": "many", "cells": [{"delta": 0}]})", "n_sims"));
  CHECK(schema_error(R"({"case": "case3", "seed": 1, "alpha": 2, "cells": [{"delta": 0}]})", "alpha"));
  CHECK(schema_error("{not json", "JSON"));
}

TEST_CASE("every bundled scenario file parses") {
  for (const auto& entry : fs::directory_iterator(scenario_dir())) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_scenario_file(entry.path()));
  }
}

TEST_CASE("report tables") {
  const std::string header_only = format_report_csv({});
  CHECK(header_only.find('\n') == header_only.size() - 1);
  CHECK(header_only.find("T^N,T^B,T^nb,F^N,F^B,F^nb,G^nb,G^pb,Fmax^nb,Fmax^pb") != std::string::npos);

  SizePowerReport r;
  r.label = "case1(rho=0.5)";
  r.noise = NoiseCase::case1(0.5);
  r.n_sims = 500;
  r.rejections[static_cast<std::size_t>(TestColumn::GlobalNb)] = 26;
  r.rejections[static_cast<std::size_t>(TestColumn::FMaxNb)] = 37;
  const auto rows = parse_report_csv(format_report_csv({r}));
  REQUIRE(rows.size() == 1);
  CHECK(*rows[0].rates[static_cast<std::size_t>(TestColumn::GlobalNb)] == doctest::Approx(0.052));
  CHECK_FALSE(rows[0].rates[static_cast<std::size_t>(TestColumn::L2Naive)].has_value());
  const std::string text = format_report_text({r});
  CHECK(text.find("7.4*") != std::string::npos);  // liberal at delta = 0
  CHECK(text.find("5.2*") == std::string::npos);

  PValueRow p;
  p.label = "D";
  p.p_values[static_cast<std::size_t>(TestColumn::FMaxPb)] = 0.0012;
  const std::string csv = format_pvalue_csv({p});
  CHECK(csv.find("D,n/a,n/a,n/a,n/a,n/a,n/a,n/a,n/a,n/a,0.001") != std::string::npos);
}
