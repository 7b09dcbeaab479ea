#pragma once

#include "icfrm/bootstrap.hpp"
#include "icfrm/model.hpp"
#include "icfrm/simulation.hpp"
#include "icfrm/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace icfrm {

// ---------------------------------------------------------------------------
// Audible-noise factorial layout: 2^(7-2) fractional factorial plus four
// replicate runs at the high level of every factor (36 runs). Columns are
// (eta, alpha_11, alpha_12, ..., alpha_71, alpha_72).
// ---------------------------------------------------------------------------
inline constexpr int kNumFactors = 7;
inline constexpr Index kNumRuns = 36;
inline constexpr Index kNumDesignColumns = 15;
inline constexpr Index kNumSpeeds = 43;

/// "A" .. "G".
std::string factor_label(int factor);
/// Accepts A..G (any case) or 1..7; returns 1..7.
int factor_from_token(const std::string& token);

/// The 36 x 15 cell-means design matrix, rank 8.
Matrix factorial_design_matrix();
DesignMatrix build_factorial_design();

/// Main-effect contrast row of one factor (1..7): +1 / -1 on its two columns.
Hypothesis build_contrast(int factor, Index num_points = kNumSpeeds);
/// All seven rows (q = 7).
Hypothesis build_contrast_all(Index num_points = kNumSpeeds);

// ---------------------------------------------------------------------------
// Response CSV. Two layouts, selected explicitly:
//   CurvesAsRows:    header "run,<rpm_1>,...,<rpm_T>", then one row per run.
//   CurvesAsColumns: header "rpm,<run_1>,...,<run_n>", then one row per speed.
// ---------------------------------------------------------------------------
enum class CsvLayout { CurvesAsRows, CurvesAsColumns };

struct RawNoiseTable {
  Vector rpm;
  Matrix spl;  ///< runs x speeds
  std::vector<std::string> run_labels;
};

RawNoiseTable read_noise_csv(const std::filesystem::path& path,
                             CsvLayout layout = CsvLayout::CurvesAsRows,
                             Index expected_runs = kNumRuns, Index expected_points = kNumSpeeds);
void write_noise_csv(const std::filesystem::path& path, const RawNoiseTable& table);

/// Speeds mapped affinely onto [0, 1]: t = (rpm - rpm_min) / (rpm_max - rpm_min).
TimeGrid normalized_speed_grid(const Vector& rpm);
FunctionalDataset to_dataset(const RawNoiseTable& table);

/// read_noise_csv + to_dataset.
FunctionalDataset ingest_noise_csv(const std::filesystem::path& path,
                                   CsvLayout layout = CsvLayout::CurvesAsRows);

/// Coefficient functions as CSV: header "coef,<t_1>,...", one row per coefficient.
void write_coefficients_csv(const std::filesystem::path& path, const CoefficientEstimate& beta);
CoefficientEstimate read_coefficients_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Bundled data and scenario locations.
// ---------------------------------------------------------------------------
/// $ICFRM_DATA_DIR or the source-tree data/ directory.
std::filesystem::path data_dir();
/// $ICFRM_SCENARIO_DIR or the source-tree scenarios/ directory.
std::filesystem::path scenario_dir();
/// $AUDIBLE_NOISE_DATA or data/audible_noise.csv.
std::filesystem::path default_noise_data_path();
std::filesystem::path surrogate_noise_data_path();
std::filesystem::path bundled_beta_path();

/// Loads the real data, throwing DataUnavailableError with a fetch hint.
FunctionalDataset load_noise_data(const std::filesystem::path& path,
                                  CsvLayout layout = CsvLayout::CurvesAsRows);

// ---------------------------------------------------------------------------
// Scenario files (JSON). A file holds shared defaults plus a list of cells:
// {
//   "name": "table_s1_desk", "case": "case1", "m0": 13, "apply_scaling": false,
//   "n_sims": 500, "m_boot": 500, "alpha": 0.05, "grid_size": 43, "seed": 20240,
//   "beta_ref": "beta_hat.csv",                       (optional, relative to file)
//   "cells": [ {"rho": 0.1, "delta": [0.0, 0.02]}, ... ]
// }
// ---------------------------------------------------------------------------
struct ScenarioFile {
  std::string name;
  std::vector<ScenarioConfig> cells;
};

ScenarioFile parse_scenario_json(const std::string& text,
                                 const std::filesystem::path& base_dir = {});
ScenarioFile load_scenario_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Tables. Rates print as percentages with one decimal, p-values with three.
// ---------------------------------------------------------------------------
inline constexpr double kLiberalSizeThreshold = 0.064;

std::string format_report_csv(const std::vector<SizePowerReport>& reports);
/// Aligned text; a column is starred throughout a (case, rho, scaling) block
/// when that block's delta = 0 rate exceeds kLiberalSizeThreshold.
std::string format_report_text(const std::vector<SizePowerReport>& reports);

/// Rates parsed back from format_report_csv output (percent / 100).
struct ParsedReportRow {
  std::string label;
  int case_number = 0;
  double rho = 0;
  double delta = 0;
  bool scaled = false;
  std::array<std::optional<double>, kNumColumns> rates{};
};
std::vector<ParsedReportRow> parse_report_csv(const std::string& text);

/// p-values by factor row; each row holds one TestResult per implemented column.
struct PValueRow {
  std::string label;
  std::array<std::optional<double>, kNumColumns> p_values{};
};
std::string format_pvalue_csv(const std::vector<PValueRow>& rows);
std::string format_pvalue_text(const std::vector<PValueRow>& rows);

}  // namespace icfrm
