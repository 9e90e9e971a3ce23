#include "hdspa/experiments.hpp"

#include "hdspa/errors.hpp"
#include "hdspa/kv_config.hpp"
#include "hdspa/oracle.hpp"
#include "hdspa/saddle.hpp"
#include "hdspa/spa.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <thread>

namespace hdspa {

namespace fs = std::filesystem;

namespace {

template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  unsigned workers = threads > 0 ? static_cast<unsigned>(threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) fn(i);
  };
  if (workers <= 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

void sort_records(std::vector<ResultRecord>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRecord& x, const ResultRecord& y) {
    if (x.d != y.d) return x.d < y.d;
    if (x.n != y.n) return x.n < y.n;
    return x.a_norm < y.a_norm;
  });
}

struct Task {
  int d;
  long n;
  Vector a;
  std::shared_ptr<const MixtureParams> params;
  std::shared_ptr<const MixtureModel> model;
  double c3;
  double c4;
};

// Tasks in (d, n, point) order with the per-(d, n) budget constants filled in.
std::vector<Task> build_tasks(const ExperimentSpec& spec) {
  std::vector<Task> tasks;
  for (int d : spec.d_grid) {
    auto params = std::make_shared<const MixtureParams>(spec.model.instantiate(d));
    const auto points = spec.points_for(d);
    double a_max = 0.0;
    for (const auto& a : points) a_max = std::max(a_max, a.norm());
    const double tau_radius = 2.0 * a_max;
    auto model = std::make_shared<const MixtureModel>(
        *params, tau_radius > 0.0 ? tau_radius : std::numeric_limits<double>::infinity());
    for (long n : spec.n_grid) {
      const double t_radius = ErrorBudget::kLocalRadius * std::sqrt(d / static_cast<double>(n));
      const double c3 = model->c3_sup(tau_radius, t_radius);
      const double c4 = model->c4_sup(tau_radius, t_radius);
      for (const auto& a : points) tasks.push_back({d, n, a, params, model, c3, c4});
    }
  }
  return tasks;
}

using RowFn = std::function<void(const Task&, ResultRecord&)>;

std::vector<ResultRecord> run_rows(const ExperimentSpec& spec, const RowFn& body) {
  spec.validate();
  const auto tasks = build_tasks(spec);
  std::vector<ResultRecord> rows(tasks.size());
  parallel_for(tasks.size(), spec.threads, [&](std::size_t i) {
    const Task& task = tasks[i];
    ResultRecord& r = rows[i];
    r.d = task.d;
    r.n = task.n;
    r.a_norm = task.a.norm();
    r.eps = static_cast<double>(task.d) * task.d / static_cast<double>(task.n);
    const auto start = std::chrono::steady_clock::now();
    try {
      body(task, r);
    } catch (const std::exception& e) {
      r.status = "error: " + sanitize(e.what());
    }
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
  });
  sort_records(rows);
  return rows;
}

// Fills rho_spa, rho_exact, rel_err, bound_total; returns (log_spa, log_exact).
std::pair<double, double> spa_vs_exact(const ExperimentSpec& spec, const Task& task,
                                       ResultRecord& r, SaddlePoint* saddle_out = nullptr) {
  SolverOptions opts;
  opts.tol = spec.tol;
  const SaddlePoint sp = solve_saddle(*task.model, task.a, opts);
  const SpaEstimate spa = spa_density(sp, task.n);
  const double log_exact = ExactMeanDensity(*task.params, task.n).log_density(task.a);
  r.rho_spa = spa.density;
  r.rho_exact = std::exp(log_exact);
  r.rel_err = std::abs(std::expm1(log_exact - spa.log_density));
  r.bound_total = error_bound(task.d, task.n, task.c3, task.c4, spec.kappa).total;
  if (saddle_out) *saddle_out = sp;
  return {spa.log_density, log_exact};
}

}  // namespace

// ---------------------------------------------------------------------------
// spec

ExperimentMode parse_mode(std::string_view name) {
  if (name == "error_scaling") return ExperimentMode::error_scaling;
  if (name == "correction_study") return ExperimentMode::correction_study;
  if (name == "clt_study") return ExperimentMode::clt_study;
  if (name == "assumptions") return ExperimentMode::assumptions;
  throw ArgumentError("unknown experiment mode '" + std::string(name) + "'");
}

std::string_view mode_name(ExperimentMode mode) {
  switch (mode) {
    case ExperimentMode::error_scaling: return "error_scaling";
    case ExperimentMode::correction_study: return "correction_study";
    case ExperimentMode::clt_study: return "clt_study";
    case ExperimentMode::assumptions: return "assumptions";
  }
  return "?";
}

void ExperimentSpec::validate() const {
  if (d_grid.empty() || n_grid.empty()) throw ArgumentError("experiment: grids must be nonempty");
  for (int d : d_grid) {
    if (d < 1) throw ArgumentError("experiment: d must be >= 1");
    if (mode == ExperimentMode::correction_study && d > 3) {
      throw ArgumentError("experiment: correction_study needs d <= 3");
    }
    if (points_for(d).empty()) {
      throw ArgumentError("experiment: no query points for d = " + std::to_string(d));
    }
  }
  for (long n : n_grid) {
    if (n < 1) throw ArgumentError("experiment: n must be >= 1");
  }
  if (a_directions < 1) throw ArgumentError("experiment: a_directions must be >= 1");
  if (!(tol > 0.0)) throw ArgumentError("experiment: tol must be positive");
}

std::vector<Vector> ExperimentSpec::points_for(int d) const {
  std::vector<Vector> pts;
  for (const auto& a : a_points) {
    if (a.size() == d) pts.push_back(a);
  }
  std::seed_seq seq{seed, static_cast<std::uint64_t>(d)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  bool have_origin = false;
  for (double r : a_shells) {
    if (r == 0.0) {
      if (!have_origin) pts.push_back(Vector::Zero(d));
      have_origin = true;
      continue;
    }
    for (int k = 0; k < a_directions; ++k) {
      Vector u(d);
      do {
        for (int i = 0; i < d; ++i) u(i) = normal(rng);
      } while (u.norm() == 0.0);
      pts.push_back(r * u / u.norm());
    }
  }
  return pts;
}

ExperimentSpec parse_experiment_spec(std::string_view text, const fs::path& base_dir) {
  const KvConfig cfg = KvConfig::parse(text);
  cfg.require_known({"model", "d_grid", "n_grid", "a_points", "a_shells", "a_directions", "mode",
                     "seed", "output_dir", "tol", "quad_nodes", "kappa", "assumption_samples",
                     "threads", "record_timing"});
  ExperimentSpec spec;
  spec.model_file = cfg.get("model");
  if (spec.model_file.is_relative() && !base_dir.empty()) spec.model_file = base_dir / spec.model_file;
  spec.model = load_model_spec(spec.model_file);
  if (cfg.has("d_grid")) {
    spec.d_grid.clear();
    for (auto v : parse_integer_list(cfg.get("d_grid"))) spec.d_grid.push_back(static_cast<int>(v));
  }
  if (cfg.has("n_grid")) {
    spec.n_grid.clear();
    for (auto v : parse_integer_list(cfg.get("n_grid"))) spec.n_grid.push_back(static_cast<long>(v));
  }
  if (cfg.has("a_points")) {
    for (const auto& row : parse_number_rows(cfg.get("a_points"))) {
      spec.a_points.push_back(Eigen::Map<const Vector>(row.data(), static_cast<Eigen::Index>(row.size())));
    }
    if (!cfg.has("a_shells")) spec.a_shells.clear();
  }
  if (cfg.has("a_shells")) spec.a_shells = parse_number_list(cfg.get("a_shells"));
  if (cfg.has("a_directions")) spec.a_directions = static_cast<int>(parse_integer(cfg.get("a_directions")));
  if (cfg.has("mode")) spec.mode = parse_mode(cfg.get("mode"));
  if (cfg.has("seed")) spec.seed = static_cast<std::uint64_t>(parse_integer(cfg.get("seed")));
  if (cfg.has("output_dir")) spec.output_dir = cfg.get("output_dir");
  if (cfg.has("tol")) spec.tol = parse_real(cfg.get("tol"));
  if (cfg.has("quad_nodes")) spec.quad_nodes = static_cast<int>(parse_integer(cfg.get("quad_nodes")));
  if (cfg.has("kappa")) spec.kappa = parse_real(cfg.get("kappa"));
  if (cfg.has("assumption_samples")) {
    spec.assumption_samples = static_cast<int>(parse_integer(cfg.get("assumption_samples")));
  }
  if (cfg.has("threads")) spec.threads = static_cast<int>(parse_integer(cfg.get("threads")));
  if (cfg.has("record_timing")) spec.record_timing = parse_bool(cfg.get("record_timing"));
  return spec;
}

ExperimentSpec load_experiment_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open experiment spec " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_spec(buf.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// sweeps

std::vector<ResultRecord> run_error_scaling(const ExperimentSpec& spec) {
  return run_rows(spec, [&](const Task& task, ResultRecord& r) { spa_vs_exact(spec, task, r); });
}

std::vector<ResultRecord> run_correction_study(const ExperimentSpec& spec) {
  ExperimentSpec checked = spec;
  checked.mode = ExperimentMode::correction_study;
  checked.validate();
  QuadSpec quad;
  quad.nodes_per_axis = spec.quad_nodes;
  quad.kappa = spec.kappa;
  return run_rows(spec, [&](const Task& task, ResultRecord& r) {
    SaddlePoint sp;
    const auto [log_spa, log_exact] = spa_vs_exact(spec, task, r, &sp);
    const CorrectionResult c = correction_integral(*task.model, sp, task.n, quad);
    r.i_minus_one = c.i_value.real() - 1.0;
    // rho_exact = rho_spa * I(a) is an identity; compare I - 1 on both routes.
    const double oracle_i_minus_one = std::expm1(log_exact - log_spa);
    const double gap = std::abs(oracle_i_minus_one - *r.i_minus_one);
    if (gap > 1e-6 + c.refine_gap) r.status = "mismatch " + format_double(gap);
  });
}

std::vector<ResultRecord> run_clt_study(const ExperimentSpec& spec) {
  return run_rows(spec, [&](const Task& task, ResultRecord& r) {
    const CltRatio c = clt_ratio(*task.params, task.n, task.a, spec.kappa);
    r.rho_spa = std::exp(standard_gaussian_log_density(task.a));
    r.rho_exact = c.ratio * r.rho_spa;
    r.rel_err = std::abs(c.ratio - 1.0);
    r.bound_total = c.bound;
  });
}

std::vector<AssumptionRow> run_assumptions(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<std::pair<int, long>> cells;
  for (int d : spec.d_grid) {
    for (long n : spec.n_grid) cells.emplace_back(d, n);
  }
  std::vector<AssumptionRow> rows(cells.size());
  parallel_for(cells.size(), spec.threads, [&](std::size_t i) {
    const auto [d, n] = cells[i];
    const MixtureModel model(spec.model.instantiate(d));
    double a_max = 0.0;
    for (const auto& a : spec.points_for(d)) a_max = std::max(a_max, a.norm());
    std::vector<Vector> taus{Vector::Zero(d)};
    std::seed_seq seq{spec.seed, static_cast<std::uint64_t>(d), std::uint64_t{0x7a0}};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif;
    if (a_max > 0.0) {
      for (int k = 0; k < 8; ++k) {
        Vector u(d);
        for (int j = 0; j < d; ++j) u(j) = normal(rng);
        taus.push_back(u.normalized() * 2.0 * a_max * std::pow(unif(rng), 1.0 / d));
      }
    }
    rows[i] = {d, n, check_assumptions(model, taus, n, spec.assumption_samples, spec.seed)};
  });
  return rows;
}

// ---------------------------------------------------------------------------
// fitting

SlopeFit fit_slope(std::span<const ResultRecord> records, SlopeAxis axis,
                   const std::function<bool(const ResultRecord&)>& filter) {
  std::vector<double> xs, ys;
  for (const auto& r : records) {
    if (filter && !filter(r)) continue;
    if (!(r.rel_err > 0.0) || !std::isfinite(r.rel_err)) {
      throw ArgumentError("fit_slope: rel_err must be positive and finite");
    }
    double x = 0.0;
    switch (axis) {
      case SlopeAxis::eps: x = r.eps; break;
      case SlopeAxis::inv_n: x = 1.0 / static_cast<double>(r.n); break;
      case SlopeAxis::d2: x = static_cast<double>(r.d) * r.d; break;
    }
    xs.push_back(std::log(x));
    ys.push_back(std::log(r.rel_err));
  }
  const int m = static_cast<int>(xs.size());
  if (m < 4) throw ArgumentError("fit_slope: need at least 4 points");
  const auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
  if ((*xmax - *xmin) / std::log(10.0) < 0.5) {
    throw ArgumentError("fit_slope: x range spans less than half a decade");
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < m; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < m; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  SlopeFit fit;
  fit.points = m;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (int i = 0; i < m; ++i) {
    const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

// ---------------------------------------------------------------------------
// persistence

void write_records_csv(const fs::path& path, std::span<const ResultRecord> records,
                       bool with_timing) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.d << ',' << r.n << ',' << format_double(r.a_norm) << ',' << format_double(r.rho_spa)
        << ',' << format_double(r.rho_exact) << ',' << format_double(r.rel_err) << ','
        << (r.i_minus_one ? format_double(*r.i_minus_one) : "") << ',' << format_double(r.eps)
        << ',' << format_double(r.bound_total) << ','
        << (with_timing ? format_double(r.wall_ms) : "") << ',' << sanitize(r.status) << '\n';
  }
}

std::vector<ResultRecord> read_records_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (trim(line) != kCsvHeader) throw ArgumentError("unexpected CSV header in " + path.string());
  std::vector<ResultRecord> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() == 10) f.emplace_back();
    if (f.size() != 11) throw ArgumentError("malformed CSV row: " + line);
    ResultRecord r;
    r.d = static_cast<int>(parse_integer(f[0]));
    r.n = static_cast<long>(parse_integer(f[1]));
    r.a_norm = parse_real(f[2]);
    r.rho_spa = parse_real(f[3]);
    r.rho_exact = parse_real(f[4]);
    r.rel_err = parse_real(f[5]);
    if (!trim(f[6]).empty()) r.i_minus_one = parse_real(f[6]);
    r.eps = parse_real(f[7]);
    r.bound_total = parse_real(f[8]);
    r.wall_ms = trim(f[9]).empty() ? 0.0 : parse_real(f[9]);
    r.status = trim(f[10]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_assumptions_csv(const fs::path& path, std::span<const AssumptionRow> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "d,n,kappa_est,delta_arg,delta_mod,magnitude_violations,exp_branch_violations,samples,"
         "gaussian_dominated,t_min,t_max\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    out << row.d << ',' << row.n << ',' << format_double(r.kappa_est) << ','
        << format_double(r.delta_arg) << ',' << format_double(r.delta_mod) << ','
        << r.magnitude_violations << ',' << r.exp_branch_violations << ',' << r.samples << ','
        << (r.gaussian_dominated ? "true" : "false") << ',' << format_double(r.t_min) << ','
        << format_double(r.t_max) << '\n';
  }
}

fs::path emit_plot_data(std::span<const ResultRecord> records, std::string_view kind,
                        const fs::path& dir) {
  std::vector<std::string> cols;
  std::function<std::vector<double>(const ResultRecord&)> row;
  if (kind == "error_scaling") {
    cols = {"eps", "rel_err", "d"};
    row = [](const ResultRecord& r) { return std::vector<double>{r.eps, r.rel_err, double(r.d)}; };
  } else if (kind == "correction") {
    cols = {"eps", "i_minus_one", "d"};
    row = [](const ResultRecord& r) {
      return std::vector<double>{r.eps, r.i_minus_one.value_or(std::nan("")), double(r.d)};
    };
  } else if (kind == "clt") {
    cols = {"n", "rel_err", "a_norm"};
    row = [](const ResultRecord& r) { return std::vector<double>{double(r.n), r.rel_err, r.a_norm}; };
  } else {
    throw ArgumentError("emit_plot_data: unknown kind '" + std::string(kind) + "'");
  }
  fs::create_directories(dir);
  const fs::path path = dir / (std::string(kind) + ".dat");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << '#';
  for (const auto& c : cols) out << ' ' << c;
  out << '\n';
  for (const auto& r : records) {
    if (r.status != "ok") continue;
    const auto vals = row(r);
    for (std::size_t i = 0; i < vals.size(); ++i) out << (i ? " " : "") << format_double(vals[i]);
    out << '\n';
  }
  return path;
}

PlotTable read_plot_data(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open " + path.string());
  PlotTable t;
  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#') {
    throw ArgumentError("plot data without header: " + path.string());
  }
  std::stringstream hs(line.substr(1));
  for (std::string c; hs >> c;) t.columns.push_back(c);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::stringstream ss(line);
    std::vector<double> vals;
    for (std::string tok; ss >> tok;) vals.push_back(tok == "nan" ? std::nan("") : parse_real(tok));
    if (vals.size() != t.columns.size()) throw ArgumentError("plot data row has wrong width");
    t.rows.push_back(std::move(vals));
  }
  return t;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream hex;
  for (unsigned i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

fs::path write_manifest(const fs::path& dir, const ExperimentSpec& spec,
                        std::span<const fs::path> files) {
  nlohmann::json j;
  j["mode"] = std::string(mode_name(spec.mode));
  j["seed"] = spec.seed;
  j["model_file"] = spec.model_file.filename().string();
  j["d_grid"] = spec.d_grid;
  j["n_grid"] = spec.n_grid;
  j["bound_constant"] = ErrorBudget::kConstantNote;
  j["files"] = nlohmann::json::array();
  for (const auto& f : files) {
    j["files"].push_back({{"path", f.filename().string()},
                          {"bytes", fs::file_size(f)},
                          {"sha256", sha256_file(f)}});
  }
  const fs::path path = dir / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << '\n';
  return path;
}

std::vector<fs::path> run_experiment(const ExperimentSpec& spec) {
  fs::create_directories(spec.output_dir);
  std::vector<fs::path> files;
  if (spec.mode == ExperimentMode::assumptions) {
    const auto rows = run_assumptions(spec);
    const fs::path csv = spec.output_dir / "assumptions.csv";
    write_assumptions_csv(csv, rows);
    files.push_back(csv);
  } else {
    std::vector<ResultRecord> rows;
    std::string kind;
    switch (spec.mode) {
      case ExperimentMode::error_scaling:
        rows = run_error_scaling(spec);
        kind = "error_scaling";
        break;
      case ExperimentMode::correction_study:
        rows = run_correction_study(spec);
        kind = "correction";
        break;
      default:
        rows = run_clt_study(spec);
        kind = "clt";
        break;
    }
    const fs::path csv = spec.output_dir / "results.csv";
    write_records_csv(csv, rows, spec.record_timing);
    files.push_back(csv);
    files.push_back(emit_plot_data(rows, kind, spec.output_dir));
  }
  files.push_back(write_manifest(spec.output_dir, spec, files));
  return files;
}

}  // namespace hdspa
