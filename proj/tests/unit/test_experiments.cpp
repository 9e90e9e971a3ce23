#include "hdspa/errors.hpp"
#include "hdspa/experiments.hpp"
#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

using namespace hdspa;
using namespace testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hdspa_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentSpec small_spec(const std::string& model_text) {
  ExperimentSpec spec;
  spec.model = parse_model_spec(model_text);
  spec.d_grid = {1, 2};
  spec.n_grid = {100, 200, 400};
  spec.a_shells = {0.0, 0.3};
  spec.a_directions = 2;
  spec.threads = 2;
  return spec;
}

ResultRecord synthetic(int d, long n, double rel) {
  ResultRecord r;
  r.d = d;
  r.n = n;
  r.eps = double(d) * d / n;
  r.rel_err = rel;
  return r;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("spec parsing") {
  const fs::path dir = scratch("spec");
  std::ofstream(dir / "m.model") << "mu = e1*1\nsigma = identity\n";
  std::ofstream(dir / "s.spec") << "model = m.model\nd_grid = 1, 2\nn_grid = [50 100]\n"
                                   "a_points = 0.1; 0.2, 0.3\nmode = correction_study\nseed = 9\n"
                                   "tol = 1e-11\nrecord_timing = true\n";
  const ExperimentSpec spec = load_experiment_spec(dir / "s.spec");
  CHECK(spec.d_grid == std::vector<int>{1, 2});
  CHECK(spec.n_grid == std::vector<long>{50, 100});
  CHECK(spec.mode == ExperimentMode::correction_study);
  CHECK(spec.seed == 9);
  CHECK(spec.tol == 1e-11);
  CHECK(spec.record_timing);
  CHECK(spec.a_shells.empty());
  REQUIRE(spec.points_for(1).size() == 1);
  REQUIRE(spec.points_for(2).size() == 1);
  CHECK(spec.points_for(2)[0](1) == 0.3);
  CHECK_NOTHROW(spec.validate());

  ExperimentSpec bad = spec;
  bad.d_grid = {4};
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = spec;
  bad.n_grid.clear();
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  CHECK_THROWS_AS(parse_experiment_spec("model = m.model\nfoo = 1", dir), ArgumentError);
  CHECK_THROWS_AS(parse_mode("fast"), ArgumentError);
  for (auto m : {ExperimentMode::error_scaling, ExperimentMode::correction_study, ExperimentMode::clt_study,
                 ExperimentMode::assumptions}) {
    CHECK(parse_mode(mode_name(m)) == m);
  }
}

TEST_CASE("query points are seeded") {
  ExperimentSpec spec = small_spec("mu = e1*1");
  const auto a = spec.points_for(3), b = spec.points_for(3);
  REQUIRE(a.size() == 3);
  CHECK(a[0].norm() == 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i] - b[i]).norm() == 0.0);
  CHECK(a[1].norm() == doctest::Approx(0.3).epsilon(1e-15));
  spec.seed = 2;
  CHECK((spec.points_for(3)[1] - a[1]).norm() > 0.0);
}

TEST_CASE("error scaling sweep") {
  const auto gauss = run_error_scaling(small_spec("mu = zero"));
  CHECK(gauss.size() == 2 * 3 * 3);
  for (const auto& r : gauss) {
    CHECK(r.status == "ok");
    CHECK(r.rel_err <= 1e-10);
    CHECK(r.eps == double(r.d) * r.d / r.n);
  }

  ExperimentSpec one = small_spec("d = 1\nmu = 1\nsigma = 1");
  one.d_grid = {1};
  one.n_grid = {2};
  one.a_shells = {0.0};
  const auto r2 = run_error_scaling(one);
  REQUIRE(r2.size() == 1);
  const double exact = 0.25 * normal_pdf(0, -1, 0.5) + 0.5 * normal_pdf(0, 0, 0.5) + 0.25 * normal_pdf(0, 1, 0.5);
  const double spa = std::sqrt(2.0 / (4 * M_PI));
  CHECK(r2[0].rel_err == doctest::Approx(std::abs(exact / spa - 1)).epsilon(1e-10));
  CHECK(r2[0].rel_err == doctest::Approx(0.0327).epsilon(2e-3));

  const auto rows = run_error_scaling(small_spec("mu = e1*1"));
  for (const auto& r : rows) REQUIRE(r.status == "ok");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& p = rows[i - 1];
    const auto& q = rows[i];
    CHECK(std::tie(p.d, p.n, p.a_norm) <= std::tie(q.d, q.n, q.a_norm));
  }
  for (const auto& r : rows) {
    if (r.n != 100) continue;
    for (const auto& s : rows) {
      if (s.d == r.d && s.n == 200 && s.a_norm == r.a_norm) {
        CHECK(r.rel_err / s.rel_err >= 1.6);
        CHECK(r.rel_err / s.rel_err <= 2.5);
      }
    }
  }
}

TEST_CASE("sweeps record per-point failures") {
  ExperimentSpec spec = small_spec("mu = e1*1");
  spec.quad_nodes = 8;
  const auto rows = run_correction_study(spec);
  CHECK(rows.size() == 2 * 3 * 3);
  bool any_error = false;
  for (const auto& r : rows) any_error |= r.status.rfind("error", 0) == 0;
  CHECK(any_error);
  CHECK(std::isfinite(rows[0].rho_spa));
  for (const auto& r : rows) CHECK(r.status.find(',') == std::string::npos);
}

TEST_CASE("sweeps are deterministic across thread counts") {
  ExperimentSpec a = small_spec("mu = e1*1");
  ExperimentSpec b = a;
  a.threads = 1;
  b.threads = 4;
  const auto ra = run_error_scaling(a), rb = run_error_scaling(b);
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i].rel_err == rb[i].rel_err);
    CHECK(ra[i].bound_total == rb[i].bound_total);
  }
}

TEST_CASE("correction study") {
  ExperimentSpec gauss = small_spec("mu = zero");
  for (const auto& r : run_correction_study(gauss)) {
    REQUIRE(r.i_minus_one);
    CHECK(std::abs(*r.i_minus_one) <= 1e-10);
  }
  ExperimentSpec spec = small_spec("mu = unit*1");
  spec.n_grid = {200};
  spec.a_shells = {0.0};
  const auto rows = run_correction_study(spec);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.status == "ok");
    CHECK(std::abs((r.rho_exact / r.rho_spa) - (1 + *r.i_minus_one)) <= 1e-6);
  }
  CHECK(std::abs(*rows[1].i_minus_one) > std::abs(*rows[0].i_minus_one));
  ExperimentSpec big = spec;
  big.d_grid = {4};
  CHECK_THROWS_AS(run_correction_study(big), ArgumentError);
}

TEST_CASE("clt study") {
  ExperimentSpec spec;
  spec.model = parse_model_spec("d = 1\nmu = 0.6\nsigma = 0.64");
  spec.mode = ExperimentMode::clt_study;
  spec.d_grid = {1};
  spec.n_grid = {100, 400, 1600};
  spec.a_points = {Vector::Zero(1), Vector::Constant(1, 1.0)};
  spec.a_shells.clear();
  const auto rows = run_clt_study(spec);
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows) CHECK(r.status == "ok");
  CHECK(rows[0].rel_err > rows[2].rel_err);
  CHECK(rows[2].rel_err > rows[4].rel_err);

  ExperimentSpec g = spec;
  g.model = parse_model_spec("mu = zero");
  g.d_grid = {1, 3};
  g.a_points.clear();
  g.a_shells = {0.0, 1.0};
  for (const auto& r : run_clt_study(g)) CHECK(r.rel_err <= 1e-12);

  ExperimentSpec raw = spec;
  raw.model = parse_model_spec("d = 1\nmu = 1\nsigma = 1");
  for (const auto& r : run_clt_study(raw)) CHECK(r.status.rfind("error", 0) == 0);
}

TEST_CASE("fit_slope") {
  std::vector<ResultRecord> rows;
  for (int d : {1, 2, 4, 8})
    for (long n : {100L, 400L, 1600L, 6400L}) rows.push_back(synthetic(d, n, 0.7 * d * d / double(n)));
  const SlopeFit f = fit_slope(rows, SlopeAxis::eps);
  CHECK(f.slope == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(std::log(0.7)).epsilon(1e-12));
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.points == 16);

  for (auto& r : rows) r.rel_err = 3.0 * std::pow(r.eps, 1.5);
  CHECK(fit_slope(rows, SlopeAxis::eps).slope == doctest::Approx(1.5).epsilon(1e-12));
  const SlopeFit byn = fit_slope(rows, SlopeAxis::inv_n, [](const ResultRecord& r) { return r.d == 2; });
  CHECK(byn.points == 4);
  CHECK(byn.slope == doctest::Approx(1.5).epsilon(1e-12));
  const SlopeFit byd = fit_slope(rows, SlopeAxis::d2, [](const ResultRecord& r) { return r.n == 100; });
  CHECK(byd.points == 4);
  CHECK(byd.slope == doctest::Approx(1.5).epsilon(1e-12));

  std::vector<ResultRecord> three(rows.begin(), rows.begin() + 3);
  CHECK_THROWS_AS(fit_slope(three, SlopeAxis::eps), ArgumentError);
  auto zero = rows;
  zero[0].rel_err = 0.0;
  CHECK_THROWS_AS(fit_slope(zero, SlopeAxis::eps), ArgumentError);
  std::vector<ResultRecord> flat;
  for (long n : {100L, 101L, 102L, 103L}) flat.push_back(synthetic(1, n, 1e-3));
  CHECK_THROWS_AS(fit_slope(flat, SlopeAxis::eps), ArgumentError);
}

TEST_CASE("csv round trip") {
  const fs::path dir = scratch("csv");
  std::vector<ResultRecord> rows;
  for (int k = 0; k < 5; ++k) {
    ResultRecord r = synthetic(1 + k, 100 * (k + 1), std::sqrt(2.0) * 1e-3 / (k + 1));
    r.a_norm = 0.1 * k + 1e-17;
    r.rho_spa = std::exp(-k * 3.3);
    r.rho_exact = r.rho_spa * (1 + r.rel_err);
    r.bound_total = M_PI / 7;
    r.wall_ms = 1.25;
    if (k % 2) r.i_minus_one = -r.rel_err;
    if (k == 4) r.status = "error: bad, worse";
    rows.push_back(r);
  }
  write_records_csv(dir / "r.csv", rows, true);
  const auto back = read_records_csv(dir / "r.csv");
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].d == rows[i].d);
    CHECK(back[i].n == rows[i].n);
    CHECK(back[i].a_norm == rows[i].a_norm);
    CHECK(back[i].rho_spa == rows[i].rho_spa);
    CHECK(back[i].rho_exact == rows[i].rho_exact);
    CHECK(back[i].rel_err == rows[i].rel_err);
    CHECK(back[i].i_minus_one == rows[i].i_minus_one);
    CHECK(back[i].eps == rows[i].eps);
    CHECK(back[i].bound_total == rows[i].bound_total);
    CHECK(back[i].wall_ms == rows[i].wall_ms);
  }
  CHECK(back[4].status == "error: bad  worse");
  CHECK(slurp(dir / "r.csv").rfind(std::string(kCsvHeader) + "\n", 0) == 0);

  write_records_csv(dir / "nt.csv", rows);
  CHECK(read_records_csv(dir / "nt.csv")[0].wall_ms == 0.0);
}

TEST_CASE("plot data") {
  const fs::path dir = scratch("plot");
  const fs::path empty = emit_plot_data({}, "error_scaling", dir);
  CHECK(slurp(empty) == "# eps rel_err d\n");
  const PlotTable et = read_plot_data(empty);
  CHECK(et.columns == std::vector<std::string>{"eps", "rel_err", "d"});
  CHECK(et.rows.empty());

  std::vector<ResultRecord> rows{synthetic(2, 300, 1.0 / 3.0), synthetic(3, 700, 2.0 / 7.0)};
  rows[1].i_minus_one = -1.0 / 9.0;
  const PlotTable t = read_plot_data(emit_plot_data(rows, "error_scaling", dir));
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == rows[0].eps);
  CHECK(t.rows[1][1] == rows[1].rel_err);
  CHECK(t.rows[1][2] == 3.0);
  const PlotTable c = read_plot_data(emit_plot_data(rows, "correction", dir));
  CHECK(c.columns[1] == "i_minus_one");
  CHECK(std::isnan(c.rows[0][1]));
  CHECK(c.rows[1][1] == -1.0 / 9.0);
  CHECK(read_plot_data(emit_plot_data(rows, "clt", dir)).columns[0] == "n");
  CHECK_THROWS_AS(emit_plot_data(rows, "pie", dir), ArgumentError);
}

TEST_CASE("sha256") {
  const fs::path dir = scratch("sha");
  std::ofstream(dir / "abc", std::ios::binary) << "abc";
  CHECK(sha256_file(dir / "abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  std::ofstream(dir / "empty", std::ios::binary).close();
  CHECK(sha256_file(dir / "empty") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("run_experiment writes reproducible artifacts") {
  ExperimentSpec spec = small_spec("mu = e1*1");
  spec.output_dir = scratch("run1");
  const auto first = run_experiment(spec);
  REQUIRE(first.size() == 3);
  CHECK(first.back().filename() == "manifest.json");
  const auto manifest = nlohmann::json::parse(slurp(first.back()));
  CHECK(manifest["mode"] == "error_scaling");
  CHECK(manifest["bound_constant"] == "x C, C unknown");
  REQUIRE(manifest["files"].size() == 2);
  for (const auto& f : manifest["files"]) {
    const fs::path p = spec.output_dir / f["path"].get<std::string>();
    CHECK(f["sha256"] == sha256_file(p));
    CHECK(f["bytes"] == fs::file_size(p));
  }
  const auto records = read_records_csv(first[0]);
  CHECK(records.size() == 2 * 3 * 3);

  ExperimentSpec again = spec;
  again.output_dir = scratch("run2");
  again.threads = 1;
  const auto second = run_experiment(again);
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(slurp(first[i]) == slurp(second[i]));

  ExperimentSpec as = spec;
  as.mode = ExperimentMode::assumptions;
  as.output_dir = scratch("run3");
  as.assumption_samples = 300;
  const auto files = run_experiment(as);
  CHECK(files[0].filename() == "assumptions.csv");
  CHECK(slurp(files[0]).rfind("d,n,kappa_est", 0) == 0);
}

}
