#include "icfrm/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace icfrm {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Factorial design
// ---------------------------------------------------------------------------

std::string factor_label(int factor) {
  if (factor < 1 || factor > kNumFactors) throw InputError("factor index must be 1..7");
  return std::string(1, static_cast<char>('A' + factor - 1));
}

int factor_from_token(const std::string& token) {
  if (token.size() == 1) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(token[0])));
    if (c >= 'A' && c < 'A' + kNumFactors) return c - 'A' + 1;
    if (c >= '1' && c < '1' + kNumFactors) return c - '1' + 1;
  }
  throw InputError("unknown factor '" + token + "' (expected A-G or 1-7)");
}

namespace {

// Runs 1-32: the 2^(7-2) fraction; runs 33-36 repeat the all-high run 32.
constexpr const char* kDesignRows[kNumRuns] = {
    "110101010100101", "110101010010110", "110101001101010", "110101001011001",
    "110100110101001", "110100110011010", "110100101100110", "110100101010101",
    "110011010101010", "110011010011001", "110011001100101", "110011001010110",
    "110010110100110", "110010110010101", "110010101101001", "110010101011010",
    "101101010101010", "101101010011001", "101101001100101", "101101001010110",
    "101100110100110", "101100110010101", "101100101101001", "101100101011010",
    "101011010100101", "101011010010110", "101011001101010", "101011001011001",
    "101010110101001", "101010110011010", "101010101100110", "101010101010101",
    "101010101010101", "101010101010101", "101010101010101", "101010101010101",
};

}  // namespace

Matrix factorial_design_matrix() {
  Matrix x(kNumRuns, kNumDesignColumns);
  for (Index i = 0; i < kNumRuns; ++i) {
    for (Index j = 0; j < kNumDesignColumns; ++j) x(i, j) = kDesignRows[i][j] == '1' ? 1.0 : 0.0;
  }
  return x;
}

DesignMatrix build_factorial_design() { return DesignMatrix(factorial_design_matrix()); }

Hypothesis build_contrast(int factor, Index num_points) {
  if (factor < 1 || factor > kNumFactors) throw InputError("factor index must be 1..7");
  Matrix c = Matrix::Zero(1, kNumDesignColumns);
  c(0, 2 * factor - 1) = 1.0;
  c(0, 2 * factor) = -1.0;
  return Hypothesis(std::move(c), num_points);
}

Hypothesis build_contrast_all(Index num_points) {
  Matrix c = Matrix::Zero(kNumFactors, kNumDesignColumns);
  for (int f = 1; f <= kNumFactors; ++f) {
    c(f - 1, 2 * f - 1) = 1.0;
    c(f - 1, 2 * f) = -1.0;
  }
  return Hypothesis(std::move(c), num_points);
}

// ---------------------------------------------------------------------------
// CSV helpers
// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (const char c : line) {
    if (c == '"') {
      quoted = !quoted;
      cell.push_back(c);
    } else if (c == ',' && !quoted) {
      cells.push_back(trim(cell));
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataUnavailableError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

double parse_cell(const std::string& cell, const fs::path& path, std::size_t line,
                  std::size_t column) {
  double value = 0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    std::ostringstream msg;
    msg << path.string() << ":" << line << ": column " << column << ": cannot parse '" << cell
        << "' as a number";
    throw ParseError(msg.str());
  }
  return value;
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

}  // namespace

RawNoiseTable read_noise_csv(const fs::path& path, CsvLayout layout, Index expected_runs,
                             Index expected_points) {
  const auto rows = read_csv_rows(path);
  if (rows.empty()) throw FormatError(path.string() + ": empty file");
  const auto& header = rows.front();
  const std::size_t width = header.size();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != width) {
      std::ostringstream msg;
      msg << path.string() << ":" << i + 1 << ": " << rows[i].size() << " cells, header has "
          << width;
      throw FormatError(msg.str());
    }
  }
  const Index body_rows = static_cast<Index>(rows.size()) - 1;
  const Index body_cols = static_cast<Index>(width) - 1;
  const Index runs = layout == CsvLayout::CurvesAsRows ? body_rows : body_cols;
  const Index points = layout == CsvLayout::CurvesAsRows ? body_cols : body_rows;
  if ((expected_runs > 0 && runs != expected_runs) ||
      (expected_points > 0 && points != expected_points)) {
    std::ostringstream msg;
    msg << path.string() << ": found " << runs << " curves x " << points
        << " measurements, expected " << expected_runs << " x " << expected_points;
    throw FormatError(msg.str());
  }

  RawNoiseTable table;
  table.rpm.resize(points);
  table.spl.resize(runs, points);
  table.run_labels.resize(static_cast<std::size_t>(runs));
  if (layout == CsvLayout::CurvesAsRows) {
    for (Index j = 0; j < points; ++j) {
      table.rpm[j] = parse_cell(header[static_cast<std::size_t>(j + 1)], path, 1, j + 2);
    }
    for (Index i = 0; i < runs; ++i) {
      const auto& row = rows[static_cast<std::size_t>(i + 1)];
      table.run_labels[static_cast<std::size_t>(i)] = row[0];
      for (Index j = 0; j < points; ++j) {
        table.spl(i, j) =
            parse_cell(row[static_cast<std::size_t>(j + 1)], path, i + 2, j + 2);
      }
    }
  } else {
    for (Index i = 0; i < runs; ++i) {
      table.run_labels[static_cast<std::size_t>(i)] = header[static_cast<std::size_t>(i + 1)];
    }
    for (Index j = 0; j < points; ++j) {
      const auto& row = rows[static_cast<std::size_t>(j + 1)];
      table.rpm[j] = parse_cell(row[0], path, j + 2, 1);
      for (Index i = 0; i < runs; ++i) {
        table.spl(i, j) =
            parse_cell(row[static_cast<std::size_t>(i + 1)], path, j + 2, i + 2);
      }
    }
  }
  if (!table.spl.allFinite()) throw ParseError(path.string() + ": non-finite measurement");
  return table;
}

void write_noise_csv(const fs::path& path, const RawNoiseTable& table) {
  std::ostringstream out;
  out << "run";
  for (Index j = 0; j < table.rpm.size(); ++j) out << ',' << format_double(table.rpm[j]);
  out << '\n';
  for (Index i = 0; i < table.spl.rows(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out << (idx < table.run_labels.size() ? table.run_labels[idx] : std::to_string(i + 1));
    for (Index j = 0; j < table.spl.cols(); ++j) out << ',' << format_double(table.spl(i, j));
    out << '\n';
  }
  write_text(path, out.str());
}

TimeGrid normalized_speed_grid(const Vector& rpm) {
  if (rpm.size() < 2) throw FormatError("need at least two speeds");
  const double lo = rpm[0];
  const double hi = rpm[rpm.size() - 1];
  if (!(hi > lo)) throw FormatError("speeds must be increasing");
  Vector t = ((rpm.array() - lo) / (hi - lo)).matrix();
  t[0] = 0.0;
  t[t.size() - 1] = 1.0;
  return TimeGrid(std::move(t), 0.0, 1.0);
}

FunctionalDataset to_dataset(const RawNoiseTable& table) {
  return FunctionalDataset(normalized_speed_grid(table.rpm), table.spl);
}

FunctionalDataset ingest_noise_csv(const fs::path& path, CsvLayout layout) {
  return to_dataset(read_noise_csv(path, layout));
}

void write_coefficients_csv(const fs::path& path, const CoefficientEstimate& beta) {
  std::ostringstream out;
  out << "coef";
  for (Index j = 0; j < beta.grid.size(); ++j) out << ',' << format_double(beta.grid[j]);
  out << '\n';
  for (Index i = 0; i < beta.beta_hat.rows(); ++i) {
    out << (i == 0 ? std::string("eta") : "alpha_" + std::to_string((i + 1) / 2) +
                                              std::to_string(2 - i % 2));
    for (Index j = 0; j < beta.beta_hat.cols(); ++j) out << ',' << format_double(beta.beta_hat(i, j));
    out << '\n';
  }
  write_text(path, out.str());
}

CoefficientEstimate read_coefficients_csv(const fs::path& path) {
  const auto rows = read_csv_rows(path);
  if (rows.size() < 2) throw FormatError(path.string() + ": no coefficient rows");
  const Index points = static_cast<Index>(rows.front().size()) - 1;
  Vector t(points);
  for (Index j = 0; j < points; ++j) {
    t[j] = parse_cell(rows.front()[static_cast<std::size_t>(j + 1)], path, 1, j + 2);
  }
  Matrix beta(static_cast<Index>(rows.size()) - 1, points);
  for (Index i = 0; i < beta.rows(); ++i) {
    const auto& row = rows[static_cast<std::size_t>(i + 1)];
    if (static_cast<Index>(row.size()) != points + 1) {
      throw FormatError(path.string() + ": ragged coefficient row " + std::to_string(i + 2));
    }
    for (Index j = 0; j < points; ++j) {
      beta(i, j) = parse_cell(row[static_cast<std::size_t>(j + 1)], path, i + 2, j + 2);
    }
  }
  return {TimeGrid(std::move(t)), std::move(beta)};
}

// ---------------------------------------------------------------------------
// Locations
// ---------------------------------------------------------------------------

namespace {
fs::path env_or(const char* name, const fs::path& fallback) {
  if (const char* v = std::getenv(name); v && *v) return fs::path(v);
  return fallback;
}
}  // namespace

fs::path data_dir() { return env_or("ICFRM_DATA_DIR", ICFRM_DEFAULT_DATA_DIR); }
fs::path scenario_dir() { return env_or("ICFRM_SCENARIO_DIR", ICFRM_DEFAULT_SCENARIO_DIR); }
fs::path default_noise_data_path() {
  return env_or("AUDIBLE_NOISE_DATA", data_dir() / "audible_noise.csv");
}
fs::path surrogate_noise_data_path() { return data_dir() / "audible_noise_surrogate.csv"; }
fs::path bundled_beta_path() { return data_dir() / "beta_hat.csv"; }

FunctionalDataset load_noise_data(const fs::path& path, CsvLayout layout) {
  if (!fs::exists(path)) {
    throw DataUnavailableError(
        "audible-noise data not found at '" + path.string() +
        "'. Fetch it with tools/fetch_audible_noise.sh, convert it to the CSV layout "
        "described in data/README.md, then pass --data <path> or set AUDIBLE_NOISE_DATA. "
        "Use --surrogate to run on the bundled synthetic stand-in instead.");
  }
  return ingest_noise_csv(path, layout);
}

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

const json& require_field(const json& obj, const char* field, const std::string& where) {
  if (!obj.contains(field)) throw SchemaError(where + ": missing field '" + field + "'");
  return obj.at(field);
}

template <typename T>
T field_or(const json& obj, const char* field, T fallback, const std::string& where) {
  if (!obj.contains(field)) return fallback;
  try {
    return obj.at(field).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(where + ": field '" + field + "' has the wrong type");
  }
}

template <typename T>
T required_as(const json& obj, const char* field, const std::string& where) {
  try {
    return require_field(obj, field, where).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(where + ": field '" + field + "' has the wrong type");
  }
}

}  // namespace

ScenarioFile parse_scenario_json(const std::string& text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("scenario file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("scenario: top level must be an object");
  const std::string where = "scenario";

  ScenarioFile file;
  file.name = field_or<std::string>(doc, "name", "scenario", where);
  const auto case_name = required_as<std::string>(doc, "case", where);
  const int m0 = field_or<int>(doc, "m0", 13, where);
  const bool scaled = field_or<bool>(doc, "apply_scaling", false, where);
  const Index n_sims = field_or<Index>(doc, "n_sims", 500, where);
  const Index m_boot = field_or<Index>(doc, "m_boot", 500, where);
  const double alpha = field_or<double>(doc, "alpha", 0.05, where);
  const Index grid_size = field_or<Index>(doc, "grid_size", 43, where);
  const auto seed = required_as<std::uint64_t>(doc, "seed", where);
  if (case_name != "case1" && case_name != "case2" && case_name != "case3") {
    throw SchemaError(where + ": field 'case' must be case1, case2 or case3");
  }
  if (n_sims < 1) throw SchemaError(where + ": field 'n_sims' must be positive");
  if (m_boot < 1) throw SchemaError(where + ": field 'm_boot' must be positive");
  if (!(alpha > 0 && alpha < 1)) throw SchemaError(where + ": field 'alpha' must lie in (0, 1)");
  if (grid_size < 2) throw SchemaError(where + ": field 'grid_size' must be at least 2");

  fs::path beta_path = bundled_beta_path();
  if (doc.contains("beta_ref")) {
    beta_path = fs::path(field_or<std::string>(doc, "beta_ref", "", where));
    if (beta_path.is_relative() && !base_dir.empty()) beta_path = base_dir / beta_path;
  }

  const auto& cells = require_field(doc, "cells", where);
  if (!cells.is_array() || cells.empty()) {
    throw SchemaError(where + ": field 'cells' must be a non-empty array");
  }
  bool needs_beta = false;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const std::string cell_where = where + ".cells[" + std::to_string(c) + "]";
    const json& cell = cells[c];
    if (!cell.is_object()) throw SchemaError(cell_where + ": must be an object");
    NoiseCase noise = NoiseCase::case3();
    if (case_name != "case3") {
      const auto rho = required_as<double>(cell, "rho", cell_where);
      if (!(rho > 0 && rho < 1)) throw SchemaError(cell_where + ": field 'rho' must lie in (0, 1)");
      noise = case_name == "case1" ? NoiseCase::case1(rho, m0) : NoiseCase::case2(rho, m0);
    }
    std::vector<double> deltas;
    const json& dj = require_field(cell, "delta", cell_where);
    try {
      if (dj.is_array()) {
        deltas = dj.get<std::vector<double>>();
      } else {
        deltas.push_back(dj.get<double>());
      }
    } catch (const json::exception&) {
      throw SchemaError(cell_where + ": field 'delta' must be a number or an array of numbers");
    }
    for (const double delta : deltas) {
      if (!(delta >= 0)) throw SchemaError(cell_where + ": field 'delta' must be nonnegative");
      ScenarioConfig cfg;
      cfg.noise = noise;
      cfg.delta = delta;
      cfg.n_sims = n_sims;
      cfg.m_boot = m_boot;
      cfg.alpha = alpha;
      cfg.apply_scaling = scaled;
      cfg.grid_size = grid_size;
      cfg.seed = cell_seed(seed, noise, delta);
      needs_beta = needs_beta || delta > 0;
      file.cells.push_back(std::move(cfg));
    }
  }
  if (needs_beta) {
    const CoefficientEstimate beta = read_coefficients_csv(beta_path);
    for (auto& cfg : file.cells) cfg.beta_ref = beta;
  }
  return file;
}

ScenarioFile load_scenario_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario_json(buf.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

namespace {

std::string percent(std::optional<double> rate) {
  if (!rate) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *rate);
  return buf;
}

std::string fixed3(std::optional<double> p) {
  if (!p) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *p);
  return buf;
}

std::string rho_text(const NoiseCase& noise) {
  if (noise.kind == NoiseCase::Kind::Wiener) return "n/a";
  std::ostringstream out;
  out << noise.rho;
  return out.str();
}

std::string delta_text(double delta) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", delta);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string format_report_csv(const std::vector<SizePowerReport>& reports) {
  std::ostringstream out;
  out << "label,case,rho,delta,scaled,n_sims,m_boot,alpha,seed";
  for (const auto c : kAllColumns) out << ',' << column_label(c);
  out << '\n';
  for (const auto& r : reports) {
    out << r.label << ',' << r.noise.number() << ',' << rho_text(r.noise) << ','
        << delta_text(r.delta) << ',' << (r.scaled ? 1 : 0) << ',' << r.n_sims << ','
        << r.m_boot << ',' << r.alpha << ',' << r.seed;
    for (const auto c : kAllColumns) out << ',' << percent(r.rate(c));
    out << '\n';
  }
  return out.str();
}

std::string format_report_text(const std::vector<SizePowerReport>& reports) {
  // Liberal flags per (case, rho, scaled) block from the delta = 0 row.
  std::map<std::tuple<int, double, bool>, std::array<bool, kNumColumns>> liberal;
  for (const auto& r : reports) {
    if (r.delta != 0) continue;
    auto& flags = liberal[{r.noise.number(), r.noise.rho, r.scaled}];
    for (const auto c : kAllColumns) {
      const auto rate = r.rate(c);
      flags[static_cast<std::size_t>(c)] = rate && *rate > kLiberalSizeThreshold;
    }
  }
  constexpr std::size_t kWidth = 9;
  std::ostringstream out;
  out << pad("label", 17) << pad("rho", 6) << pad("delta", 7) << pad("scaled", 7);
  for (const auto c : kAllColumns) out << pad(std::string(column_label(c)), kWidth);
  out << '\n';
  for (const auto& r : reports) {
    out << pad(r.label.substr(0, 16), 17) << pad(rho_text(r.noise), 6) << pad(delta_text(r.delta), 7)
        << pad(r.scaled ? "yes" : "no", 7);
    const auto it = liberal.find({r.noise.number(), r.noise.rho, r.scaled});
    for (const auto c : kAllColumns) {
      std::string cell = percent(r.rate(c));
      if (it != liberal.end() && it->second[static_cast<std::size_t>(c)]) cell += "*";
      out << pad(cell, kWidth);
    }
    out << '\n';
  }
  out << "(* empirical size above " << 100.0 * kLiberalSizeThreshold
      << "% at delta = 0: too liberal)\n";
  return out.str();
}

std::vector<ParsedReportRow> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<ParsedReportRow> rows;
  if (!std::getline(in, line)) return rows;
  const auto header = split_csv_line(line);
  constexpr std::size_t kFixed = 9;
  if (header.size() != kFixed + kNumColumns) throw FormatError("report CSV: unexpected header");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw FormatError("report CSV: ragged row");
    const fs::path src("report.csv");
    ParsedReportRow row;
    row.label = cells[0];
    row.case_number = static_cast<int>(parse_cell(cells[1], src, line_no, 2));
    row.rho = cells[2] == "n/a" ? 0.0 : parse_cell(cells[2], src, line_no, 3);
    row.delta = parse_cell(cells[3], src, line_no, 4);
    row.scaled = cells[4] == "1";
    for (std::size_t c = 0; c < kNumColumns; ++c) {
      const auto& cell = cells[kFixed + c];
      if (cell != "n/a") row.rates[c] = parse_cell(cell, src, line_no, kFixed + c + 1) / 100.0;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_pvalue_csv(const std::vector<PValueRow>& rows) {
  std::ostringstream out;
  out << "factor";
  for (const auto c : kAllColumns) out << ',' << column_label(c);
  out << '\n';
  for (const auto& r : rows) {
    out << r.label;
    for (const auto c : kAllColumns) out << ',' << fixed3(r.p_values[static_cast<std::size_t>(c)]);
    out << '\n';
  }
  return out.str();
}

std::string format_pvalue_text(const std::vector<PValueRow>& rows) {
  constexpr std::size_t kWidth = 9;
  std::ostringstream out;
  out << pad("factor", 7);
  for (const auto c : kAllColumns) out << pad(std::string(column_label(c)), kWidth);
  out << '\n';
  for (const auto& r : rows) {
    out << pad(r.label, 7);
    for (const auto c : kAllColumns) {
      out << pad(fixed3(r.p_values[static_cast<std::size_t>(c)]), kWidth);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace icfrm
