#pragma once

// Monte-Carlo driver for the simulation studies: grids of (d, m, n, lambda,
// nu, c) points, replications with pre-split seeds, per-estimator errors,
// log-log slope fits and CSV / plot-data output.

#include "rdpca/datagen.hpp"
#include "rdpca/estimators.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace rdpca {

enum class Scenario { TailSweep, ParetoServers, TComparison, OutlierSweep, SteinSweep };

/// "tail-sweep", "pareto-servers", "t-comparison", "outlier-sweep", "stein-sweep".
std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& name);

enum class Scale { Desk, Paper };
Scale parse_scale(const std::string& name);

struct GridPoint {
  Index d = 100;
  Index m = 10;
  /// Samples per server.
  Index n = 1000;
  double lambda = 50.0;
  double nu = 5.0;
  double c = 2.0;
  double shape_k = 4.1;
  Index outliers = 0;

  bool operator==(const GridPoint&) const = default;
};

struct LabeledEstimator {
  std::string label;
  /// For SteinSweep: Truncation with an empty tau tunes per server, Sample
  /// uses the plain average, Truncation with tau set uses that level.
  EstimatorSpec spec;
};

struct ExperimentSpec {
  Scenario scenario = Scenario::TailSweep;
  /// Model family and fixed parameters; per-point fields come from the grid.
  ModelSpec model;
  std::vector<GridPoint> grid;
  Index k_target = 3;
  int reps = 20;
  std::vector<LabeledEstimator> estimators;
  std::uint64_t master_seed = 1;

  void validate() const;
};

struct ResultRow {
  std::string scenario;
  std::string estimator;
  Index d = 0;
  Index m = 0;
  Index n = 0;
  double lambda = 0.0;
  /// Population eigengap lambda_K - lambda_{K+1} (Stein: the constant C).
  double delta_gap = 0.0;
  double nu = 0.0;
  double c = 0.0;
  int rep = 0;
  /// NaN marks a failed replication.
  double error = 0.0;
  double log_error = 0.0;
  double wall_ms = 0.0;

  /// Not written to CSV.
  std::size_t point = 0;
  std::string failure;

  bool failed() const { return error != error; }
};

struct RunOptions {
  /// Worker threads; one task is one (grid point, replication).
  int jobs = 1;
  /// Record wall_ms; off by default so CSVs are byte-identical across runs.
  bool timing = false;
  /// Treat a tau with no root as a failed replication.
  bool fail_on_tau_no_root = true;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Seed of one task: mix_seed(master, {point, rep}).
std::uint64_t task_seed(std::uint64_t master, std::size_t point, int rep);

/// Rows sorted by (grid point, rep, estimator order).
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, const RunOptions& opts = {});

/// Built-in grids. Desk presets are sized for a workstation; paper presets
/// follow the published study sizes.
ExperimentSpec preset(Scenario scenario, Scale scale);

enum class Axis { D, M, N, Delta, Lambda, Nu, C };
std::string to_string(Axis a);
Axis parse_axis(const std::string& name);
double axis_value(const ResultRow& row, Axis a);

enum class FitMode { PointMeans, PerRep };
FitMode parse_fit_mode(const std::string& name);

struct SlopeFit {
  double slope = 0.0;
  /// Joint R^2 of log error on (log d, log m, log n, log delta) when all four
  /// vary; otherwise the R^2 of the marginal fit.
  double r_squared = 0.0;
  double marginal_r_squared = 0.0;
  bool joint = false;
  double intercept = 0.0;
  std::size_t points = 0;
};

/// Least squares of log error against log(axis) on the sub-grid where only
/// `axis` varies (the largest such slice). Rows must share one estimator;
/// failed rows are skipped.
SlopeFit fit_loglog_slope(const std::vector<ResultRow>& rows, Axis axis,
                          FitMode mode = FitMode::PointMeans);

/// Joint coefficients on log d, log m, log n, log delta plus intercept and R^2.
struct JointFit {
  double coef[4] = {0, 0, 0, 0};
  double intercept = 0.0;
  double r_squared = 0.0;
};
JointFit fit_joint(const std::vector<ResultRow>& rows, FitMode mode = FitMode::PointMeans);

std::vector<ResultRow> rows_for(const std::vector<ResultRow>& rows, const std::string& estimator);
std::vector<std::string> estimator_labels(const std::vector<ResultRow>& rows);

/// Mean of log_error over successful rows matching `pred`; NaN when none.
double mean_log_error(const std::vector<ResultRow>& rows,
                      const std::function<bool(const ResultRow&)>& pred);

// Output.
inline constexpr const char* kCsvHeader =
    "scenario,estimator,d,m,n,lambda,delta_gap,nu,c,rep,error,log_error,wall_ms";

/// Shortest round-trip decimal, '.' separator, "nan" / "inf" for non-finite.
std::string format_number(double v);

void write_csv(const std::vector<ResultRow>& rows, std::ostream& out);
void emit_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
std::vector<ResultRow> read_csv(const std::filesystem::path& path);

/// Whitespace-separated blocks "x mean_log_error stderr", one block per
/// (estimator, varying axis), separated by two blank lines.
void write_plotdata(const std::vector<ResultRow>& rows, std::ostream& out);
void emit_plotdata(const std::vector<ResultRow>& rows, const std::filesystem::path& path);

/// Per-estimator failure counts, slopes along each varying axis and per-point
/// mean log errors.
void write_summary(const std::vector<ResultRow>& rows, FitMode mode, std::ostream& out);

}  // namespace rdpca
