#pragma once

#include "hdspa/correction.hpp"
#include "hdspa/model_io.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hdspa {

enum class ExperimentMode { error_scaling, correction_study, clt_study, assumptions };

ExperimentMode parse_mode(std::string_view name);
std::string_view mode_name(ExperimentMode mode);

/// A parameter sweep. Query points are either explicit (`a_points`, used for
/// every d they fit) or `a_shells` radii times `a_directions` seeded random
/// unit directions per d; radius 0 contributes a single point. In clt_study
/// the points are the CLT coordinates x rather than a.
struct ExperimentSpec {
  std::filesystem::path model_file;
  ModelSpec model;
  std::vector<int> d_grid{1, 2, 4, 8};
  std::vector<long> n_grid{100, 200, 400, 800, 1600, 3200, 6400};
  std::vector<Vector> a_points;
  std::vector<double> a_shells{0.0, 0.3};
  int a_directions = 4;
  ExperimentMode mode = ExperimentMode::error_scaling;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";

  double tol = 1e-12;
  int quad_nodes = 16;
  double kappa = 1.0;
  int assumption_samples = 3000;
  int threads = 0;             ///< 0: hardware concurrency
  bool record_timing = false;  ///< wall_ms is written only when set

  void validate() const;
  /// Query points for dimension d, in a fixed order.
  std::vector<Vector> points_for(int d) const;
};

/// Spec file: same `key = value` format as model files. Keys: model,
/// d_grid, n_grid, a_points (vectors separated by ';'), a_shells,
/// a_directions, mode, seed, output_dir, tol, quad_nodes, kappa,
/// assumption_samples, threads, record_timing. `model` is resolved
/// relative to the spec file.
ExperimentSpec parse_experiment_spec(std::string_view text,
                                     const std::filesystem::path& base_dir = {});
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

/// One (d, n, a) row of a sweep.
struct ResultRecord {
  int d = 0;
  long n = 0;
  double a_norm = 0.0;
  double rho_spa = 0.0;
  double rho_exact = 0.0;
  double rel_err = 0.0;                ///< |rho_exact / rho_spa - 1| = |I(a) - 1|
  std::optional<double> i_minus_one;   ///< Re I(a) - 1 (correction study)
  double eps = 0.0;                    ///< d^2 / n
  double bound_total = 0.0;
  double wall_ms = 0.0;
  std::string status = "ok";
};

inline constexpr const char* kCsvHeader =
    "d,n,a_norm,rho_spa,rho_exact,rel_err,i_minus_one,eps,bound_total,wall_ms,status";

std::vector<ResultRecord> run_error_scaling(const ExperimentSpec& spec);
std::vector<ResultRecord> run_correction_study(const ExperimentSpec& spec);
std::vector<ResultRecord> run_clt_study(const ExperimentSpec& spec);

struct AssumptionRow {
  int d = 0;
  long n = 0;
  AssumptionReport report;
};
std::vector<AssumptionRow> run_assumptions(const ExperimentSpec& spec);

enum class SlopeAxis { eps, inv_n, d2 };

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int points = 0;
};

/// Least squares of log(rel_err) on log(axis value). Needs at least 4 rows
/// after filtering, all with rel_err > 0, spanning at least half a decade.
SlopeFit fit_slope(std::span<const ResultRecord> records, SlopeAxis axis,
                   const std::function<bool(const ResultRecord&)>& filter = {});

void write_records_csv(const std::filesystem::path& path, std::span<const ResultRecord> records,
                       bool with_timing = false);
std::vector<ResultRecord> read_records_csv(const std::filesystem::path& path);
void write_assumptions_csv(const std::filesystem::path& path, std::span<const AssumptionRow> rows);

/// Plot tables: `kind` is error_scaling (eps rel_err d), correction
/// (eps i_minus_one d) or clt (n rel_err a_norm). Whitespace-separated,
/// one `#` header line, full double precision.
std::filesystem::path emit_plot_data(std::span<const ResultRecord> records, std::string_view kind,
                                     const std::filesystem::path& dir);

struct PlotTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};
PlotTable read_plot_data(const std::filesystem::path& path);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Writes manifest.json listing every file with its size and SHA-256.
std::filesystem::path write_manifest(const std::filesystem::path& dir, const ExperimentSpec& spec,
                                     std::span<const std::filesystem::path> files);

/// Runs spec.mode, writes CSV, plot table and manifest under spec.output_dir,
/// and returns the written paths (manifest last).
std::vector<std::filesystem::path> run_experiment(const ExperimentSpec& spec);

}  // namespace hdspa
