// icfrm: fit, test and simulate general linear hypotheses in the
// ill-conditioned functional response model.

#include <icfrm/bootstrap.hpp>
#include <icfrm/io.hpp>
#include <icfrm/model.hpp>
#include <icfrm/simulation.hpp>
#include <icfrm/stats.hpp>

#include <CLI11.hpp>

#include <omp.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace icfrm;
namespace fs = std::filesystem;

namespace {

// Exit status per error class.
enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kInput = 3,
  kDataUnavailable = 4,
  kFormat = 5,
  kModel = 6,
  kNumeric = 7,
};

struct DataArgs {
  std::string path;
  bool surrogate = false;
  std::string layout = "rows";
  bool scaled = false;
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--data", a.path, "response CSV (default: $AUDIBLE_NOISE_DATA or data/audible_noise.csv)");
  cmd->add_flag("--surrogate", a.surrogate, "use the bundled synthetic stand-in data");
  cmd->add_option("--layout", a.layout, "CSV orientation: rows (one curve per row) or cols")
      ->check(CLI::IsMember({"rows", "cols"}));
  cmd->add_flag("--scaled", a.scaled, "multiply the curves by h(t) = 1/(t + 1/43)");
}

FunctionalDataset load_data(const DataArgs& a) {
  const CsvLayout layout = a.layout == "cols" ? CsvLayout::CurvesAsColumns : CsvLayout::CurvesAsRows;
  if (a.surrogate) {
    if (!a.path.empty()) throw InputError("--data and --surrogate are mutually exclusive");
    log_info("using the synthetic surrogate data set " + surrogate_noise_data_path().string());
    return ingest_noise_csv(surrogate_noise_data_path(), layout);
  }
  return load_noise_data(a.path.empty() ? default_noise_data_path() : fs::path(a.path), layout);
}

void write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  fs::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw InputError("cannot write " + (dir / name).string());
  out << text;
  log_info("wrote " + (dir / name).string());
}

std::string seconds(double s) {
  std::ostringstream out;
  out.precision(3);
  out << std::fixed << s << " s";
  return out.str();
}

// ---------------------------------------------------------------------------

struct FitArgs {
  DataArgs data;
  std::string out;
};

int cmd_fit(const FitArgs& a) {
  FunctionalDataset y = load_data(a.data);
  const DesignMatrix d = build_factorial_design();
  if (a.data.scaled) y = scale_dataset(y, ScaleFunction::reciprocal_shift(y.grid()));
  const CoefficientEstimate beta = estimate_beta(y, d);
  const CovarianceEstimate gamma = estimate_covariance(y, d);

  std::cout << "n = " << d.num_rows() << ", p + 1 = " << d.num_params() << ", rank = " << d.rank()
            << ", dof = " << d.dof() << ", T = " << y.num_points() << "\n";
  std::cout << "factor  contrast_min  contrast_max  integral\n";
  const Hypothesis all = build_contrast_all(y.num_points());
  const Matrix contrasts = all.contrast() * beta.beta_hat;
  for (int f = 1; f <= kNumFactors; ++f) {
    const Vector c = contrasts.row(f - 1).transpose();
    std::printf("%6s  %12.4f  %12.4f  %8.4f\n", factor_label(f).c_str(), c.minCoeff(),
                c.maxCoeff(), integrate_grid(c, y.grid()));
  }
  const Vector var = clamped_variance_diagonal(gamma.gamma_hat);
  std::printf("residual variance: min %.4f  mean %.4f  max %.4f\n", var.minCoeff(), var.mean(),
              var.maxCoeff());
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_coefficients_csv(fs::path(a.out) / "beta_hat.csv", beta);
    log_info("wrote " + (fs::path(a.out) / "beta_hat.csv").string());
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct TestArgs {
  DataArgs data;
  std::string factor;
  bool all = false;
  std::string stat = "g";
  std::string boot = "nb";
  Index m = kDefaultReplicates;
  std::uint64_t seed = 1;
  std::string out;
};

std::vector<PValueRow> pvalue_grid(const FunctionalDataset& y, const DesignMatrix& d,
                                   const std::vector<int>& factors, Index m, std::uint64_t seed,
                                   const std::optional<ScaleFunction>& scale) {
  static constexpr StatisticKind kNb[] = {StatisticKind::L2, StatisticKind::FRatio,
                                          StatisticKind::Global, StatisticKind::FMax};
  static constexpr TestColumn kNbCols[] = {TestColumn::L2Nb, TestColumn::FNb, TestColumn::GlobalNb,
                                           TestColumn::FMaxNb};
  static constexpr StatisticKind kPb[] = {StatisticKind::Global, StatisticKind::FMax};
  static constexpr TestColumn kPbCols[] = {TestColumn::GlobalPb, TestColumn::FMaxPb};
  std::vector<PValueRow> rows;
  for (const int f : factors) {
    Hypothesis h = build_contrast(f, y.num_points());
    if (scale) h = scale_hypothesis(h, *scale);
    const BootstrapEngine engine(y, d, h);
    PValueRow row;
    row.label = factor_label(f);
    const auto nb = engine.run(kNb, BootstrapKind::Nonparametric, m, derive_seed(seed, 2 * f));
    const auto pb = engine.run(kPb, BootstrapKind::Parametric, m, derive_seed(seed, 2 * f + 1));
    for (std::size_t i = 0; i < nb.size(); ++i) row.p_values[static_cast<std::size_t>(kNbCols[i])] = nb[i].p_value;
    for (std::size_t i = 0; i < pb.size(); ++i) row.p_values[static_cast<std::size_t>(kPbCols[i])] = pb[i].p_value;
    rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_test(const TestArgs& a) {
  if (a.all == !a.factor.empty()) throw InputError("give exactly one of --factor or --all");
  FunctionalDataset y = load_data(a.data);
  const DesignMatrix d = build_factorial_design();
  std::optional<ScaleFunction> scale;
  if (a.data.scaled) {
    scale = ScaleFunction::reciprocal_shift(y.grid());
    y = scale_dataset(y, *scale);
  }

  if (a.all) {
    std::vector<int> factors;
    for (int f = 1; f <= kNumFactors; ++f) factors.push_back(f);
    const auto start = std::chrono::steady_clock::now();
    const auto rows = pvalue_grid(y, d, factors, a.m, a.seed, scale);
    std::cout << format_pvalue_text(rows);
    if (!a.out.empty()) write_file(a.out, "pvalues.csv", format_pvalue_csv(rows));
    log_info("seed " + std::to_string(a.seed) + ", M = " + std::to_string(a.m) + ", " +
             seconds(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()));
    return kOk;
  }

  const int f = factor_from_token(a.factor);
  Hypothesis h = build_contrast(f, y.num_points());
  if (scale) h = scale_hypothesis(h, *scale);
  const StatisticKind kind = statistic_from_token(a.stat);
  const BootstrapKind boot = bootstrap_from_token(a.boot);
  const TestResult r = bootstrap_test(y, d, h, kind, boot, a.m, a.seed);
  std::printf("factor,statistic,bootstrap,observed,p_value,M,seed\n%s,%s,%s,%.10g,%.3f,%lld,%llu\n",
              factor_label(f).c_str(), std::string(to_token(kind)).c_str(),
              std::string(to_token(boot)).c_str(), r.observed, r.p_value,
              static_cast<long long>(r.m_replicates), static_cast<unsigned long long>(r.seed));
  return kOk;
}

// ---------------------------------------------------------------------------

struct SimArgs {
  std::string scenario;
  std::string out;
  Index n_sims = 0;
  Index m_boot = 0;
};

int run_scenarios(const ScenarioFile& file, const std::string& out) {
  const DesignMatrix d = build_factorial_design();
  std::vector<SizePowerReport> reports;
  double wall = 0;
  for (const auto& cfg : file.cells) {
    const Hypothesis h = build_contrast_all(cfg.grid_size);
    reports.push_back(run_scenario(cfg, d, h));
    wall += reports.back().wall_seconds;
    std::ostringstream msg;
    msg << file.name << ": " << cfg.noise.label() << " delta=" << cfg.delta
        << (cfg.apply_scaling ? " scaled" : "") << " seed=" << cfg.seed << " ("
        << seconds(reports.back().wall_seconds) << ")";
    log_info(msg.str());
  }
  std::cout << format_report_text(reports);
  if (!out.empty()) {
    write_file(out, file.name + ".csv", format_report_csv(reports));
    write_file(out, file.name + ".txt", format_report_text(reports));
  }
  log_info(file.name + ": total wall time " + seconds(wall));
  return kOk;
}

int cmd_simulate(const SimArgs& a) {
  ScenarioFile file = load_scenario_file(a.scenario);
  for (auto& cfg : file.cells) {
    if (a.n_sims > 0) cfg.n_sims = a.n_sims;
    if (a.m_boot > 0) cfg.m_boot = a.m_boot;
  }
  return run_scenarios(file, a.out);
}

struct TableArgs {
  std::string table;
  bool paper_scale = false;
  std::string out;
};

int cmd_reproduce_table(const TableArgs& a) {
  std::string id = a.table;
  for (auto& ch : id) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (id.size() != 2 || id[0] != 's' || id[1] < '1' || id[1] > '6') {
    throw InputError("table must be one of S1..S6");
  }
  const fs::path path =
      scenario_dir() / ("table_" + id + (a.paper_scale ? "_paper.json" : "_desk.json"));
  return run_scenarios(load_scenario_file(path), a.out);
}

// ---------------------------------------------------------------------------

struct RealDataArgs {
  DataArgs data;
  Index m = kDefaultReplicates;
  Index n_sims = 500;
  Index m_boot = 500;
  std::uint64_t seed = 1;
  bool residual_cov = false;
  bool skip_sim = false;
  std::string out;
};

int cmd_reproduce_realdata(const RealDataArgs& a) {
  const FunctionalDataset raw = load_data(a.data);
  const DesignMatrix d = build_factorial_design();
  std::optional<ScaleFunction> scale;
  if (a.data.scaled) scale = ScaleFunction::reciprocal_shift(raw.grid());
  const FunctionalDataset y = scale ? scale_dataset(raw, *scale) : raw;

  std::vector<int> factors;
  for (int f = 1; f <= kNumFactors; ++f) factors.push_back(f);
  const auto rows = pvalue_grid(y, d, factors, a.m, a.seed, scale);
  std::cout << "p-values\n" << format_pvalue_text(rows);
  if (!a.out.empty()) write_file(a.out, "realdata_pvalues.csv", format_pvalue_csv(rows));
  if (a.skip_sim) return kOk;

  // Simulations run on the unscaled data; scaling, when asked, is applied to
  // each simulated sample.
  const CoefficientEstimate beta = estimate_beta(raw, d);
  const Matrix sigma =
      a.residual_cov ? estimate_covariance(raw, d).gamma_hat : sample_covariance(raw);
  RealDataSimConfig cfg;
  cfg.n_sims = a.n_sims;
  cfg.m_boot = a.m_boot;
  cfg.apply_scaling = a.data.scaled;

  std::vector<SizePowerReport> reports;
  cfg.seed = derive_seed(a.seed, 100);
  SizePowerReport size = realdata_simulation(
      sigma, d, build_contrast_all(raw.num_points()),
      CoefficientEstimate{raw.grid(), Matrix::Zero(d.num_params(), raw.num_points())}, cfg);
  size.label = "size";
  reports.push_back(size);
  for (const int f : factors) {
    cfg.seed = derive_seed(a.seed, 100 + static_cast<std::uint64_t>(f));
    SizePowerReport power = realdata_simulation(sigma, d, build_contrast(f, raw.num_points()), beta, cfg);
    power.label = "power_" + factor_label(f);
    power.delta = 1.0;
    reports.push_back(power);
  }
  std::cout << "\nempirical sizes (beta = 0, all factors) and powers (beta = beta_hat)\n";
  std::printf("%-8s", "");
  for (const auto c : kAllColumns) std::printf("%9s", std::string(column_label(c)).c_str());
  std::printf("\n");
  for (const auto& r : reports) {
    std::printf("%-8s", r.label.c_str());
    for (const auto c : kAllColumns) {
      const auto rate = r.rate(c);
      if (rate) {
        std::printf("%9.1f", 100.0 * *rate);
      } else {
        std::printf("%9s", "n/a");
      }
    }
    std::printf("\n");
  }
  if (!a.out.empty()) write_file(a.out, "realdata_simulation.csv", format_report_csv(reports));
  return kOk;
}

int run(int argc, char** argv) {
  CLI::App app{"General linear hypothesis tests for functional responses with a rank-deficient design"};
  app.require_subcommand(1);
  int threads = 0;
  bool quiet = false;
  app.add_option("--threads", threads, "worker threads (default: OpenMP default)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--quiet", quiet, "suppress progress messages on standard error");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "fit the factorial model and summarise the contrasts");
  add_data_options(fit_cmd, fit.data);
  fit_cmd->add_option("--out", fit.out, "directory for beta_hat.csv");

  TestArgs test;
  auto* test_cmd = app.add_subcommand("test", "bootstrap p-values for factor main effects");
  add_data_options(test_cmd, test.data);
  test_cmd->add_option("--factor", test.factor, "A..G or 1..7");
  test_cmd->add_flag("--all", test.all, "every factor, every implemented test");
  test_cmd->add_option("--stat", test.stat, "t, f, g or fmax")->check(CLI::IsMember({"t", "f", "g", "fmax"}));
  test_cmd->add_option("--boot", test.boot, "nb or pb")->check(CLI::IsMember({"nb", "pb"}));
  test_cmd->add_option("--M", test.m, "bootstrap replicates")->check(CLI::PositiveNumber);
  test_cmd->add_option("--seed", test.seed, "random seed");
  test_cmd->add_option("--out", test.out, "directory for pvalues.csv (with --all)");

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "run a size/power scenario file");
  sim_cmd->add_option("scenario", sim.scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--out", sim.out, "directory for the report CSV and text table");
  sim_cmd->add_option("--n-sims", sim.n_sims, "override n_sims for every cell")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--m-boot", sim.m_boot, "override m_boot for every cell")->check(CLI::PositiveNumber);

  TableArgs table;
  auto* table_cmd = app.add_subcommand("reproduce-table", "run a bundled supplement table scenario");
  table_cmd->add_option("table", table.table, "S1..S6")->required();
  table_cmd->add_flag("--paper-scale", table.paper_scale, "1000 simulations x 1000 bootstrap samples");
  table_cmd->add_option("--out", table.out, "directory for the report files");

  RealDataArgs real;
  auto* real_cmd = app.add_subcommand("reproduce-realdata", "p-value table plus data-based sizes and powers");
  add_data_options(real_cmd, real.data);
  real_cmd->add_option("--M", real.m, "bootstrap replicates for the p-values")->check(CLI::PositiveNumber);
  real_cmd->add_option("--n-sims", real.n_sims, "simulated data sets per row")->check(CLI::PositiveNumber);
  real_cmd->add_option("--m-boot", real.m_boot, "bootstrap replicates per simulated data set")->check(CLI::PositiveNumber);
  real_cmd->add_option("--seed", real.seed, "random seed");
  real_cmd->add_flag("--residual-cov", real.residual_cov, "simulate with the model residual covariance instead of the raw-curve covariance");
  real_cmd->add_flag("--no-sim", real.skip_sim, "p-values only");
  real_cmd->add_option("--out", real.out, "directory for the CSV files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  set_quiet(quiet);
  if (threads > 0) omp_set_num_threads(threads);
  omp_set_max_active_levels(1);

  if (*fit_cmd) return cmd_fit(fit);
  if (*test_cmd) return cmd_test(test);
  if (*sim_cmd) return cmd_simulate(sim);
  if (*table_cmd) return cmd_reproduce_table(table);
  if (*real_cmd) return cmd_reproduce_realdata(real);
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const DataUnavailableError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataUnavailable;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFormat;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFormat;
  } catch (const DofError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kModel;
  } catch (const EstimabilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kModel;
  } catch (const RankError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kModel;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
