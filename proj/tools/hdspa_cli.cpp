#include "hdspa/correction.hpp"
#include "hdspa/errors.hpp"
#include "hdspa/experiments.hpp"
#include "hdspa/kv_config.hpp"
#include "hdspa/model_io.hpp"
#include "hdspa/oracle.hpp"
#include "hdspa/saddle.hpp"
#include "hdspa/spa.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

using namespace hdspa;

namespace {

struct Common {
  std::string model = "configs/mixture.model";
  std::optional<int> d;
  double tol = 1e-12;
  std::uint64_t seed = 1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--model", c.model, "model file")->check(CLI::ExistingFile);
  cmd->add_option("--d", c.d, "dimension for dimension-free model files");
  cmd->add_option("--tol", c.tol, "saddle residual tolerance");
  cmd->add_option("--seed", c.seed, "random seed");
}

Vector to_vector(const std::string& text) {
  const auto vals = parse_number_list(text);
  if (vals.empty()) throw ArgumentError("empty vector '" + text + "'");
  return Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

MixtureParams load_params(const Common& c, std::optional<int> fallback_d) {
  const ModelSpec spec = load_model_spec(c.model);
  return spec.instantiate(c.d ? c.d : (spec.d ? spec.d : fallback_d));
}

void print_vec(const char* key, const Vector& v) {
  std::printf("%s =", key);
  for (Eigen::Index i = 0; i < v.size(); ++i) std::printf("%s %.17g", i ? "," : "", v(i));
  std::printf("\n");
}

void kv(const char* key, double v) { std::printf("%s = %.17g\n", key, v); }

SolverOptions solver(const Common& c) {
  SolverOptions o;
  o.tol = c.tol;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saddlepoint approximation of the density of a sample mean"};
  app.require_subcommand(1);

  Common common;
  std::string a_text = "0";
  std::string x_text = "0";
  long n = 100;
  int quad_nodes = 16;
  int samples = 3000;
  double tau_radius = 0.6;

  auto* eval = app.add_subcommand("eval", "SPA density of the mean at a, with the exact value");
  add_common(eval, common);
  eval->add_option("--a", a_text, "point, comma separated")->required();
  eval->add_option("--n", n, "sample size")->check(CLI::PositiveNumber);

  auto* solve = app.add_subcommand("solve", "saddle point tau(a) and phi*(a)");
  add_common(solve, common);
  solve->add_option("--a", a_text, "point, comma separated")->required();

  auto* corr = app.add_subcommand("correction", "correction factor I(a) by quadrature (d <= 3)");
  add_common(corr, common);
  corr->add_option("--a", a_text, "point, comma separated")->required();
  corr->add_option("--n", n, "sample size")->check(CLI::PositiveNumber);
  corr->add_option("--quad-nodes", quad_nodes, "nodes per panel per axis (>= 16)");

  auto* verify = app.add_subcommand("verify-assumptions", "sample the decay and margin conditions");
  add_common(verify, common);
  verify->add_option("--n", n, "sample size")->check(CLI::PositiveNumber);
  verify->add_option("--samples", samples, "t samples per tau");
  verify->add_option("--tau-radius", tau_radius, "radius of the tau ball to sample");

  auto* clt = app.add_subcommand("clt", "density of sqrt(n) * mean at x over the standard Gaussian");
  add_common(clt, common);
  clt->add_option("--x", x_text, "point, comma separated")->required();
  clt->add_option("--n", n, "sample size")->check(CLI::PositiveNumber);

  std::string spec_path;
  std::string mode_text;
  std::string out_dir;
  std::optional<std::uint64_t> exp_seed;
  std::optional<double> exp_tol;
  std::optional<int> exp_nodes;
  bool timing = false;
  auto* exper = app.add_subcommand("experiment", "run a parameter sweep from a spec file");
  exper->add_option("--spec", spec_path, "experiment spec file")->required()->check(CLI::ExistingFile);
  exper->add_option("--mode", mode_text, "error_scaling|correction_study|clt_study|assumptions");
  exper->add_option("--out", out_dir, "output directory");
  exper->add_option("--seed", exp_seed, "random seed");
  exper->add_option("--tol", exp_tol, "saddle residual tolerance");
  exper->add_option("--quad-nodes", exp_nodes, "nodes per panel per axis");
  exper->add_flag("--timing", timing, "write wall_ms column");

  CLI11_PARSE(app, argc, argv);

  try {
    if (eval->parsed()) {
      const Vector a = to_vector(a_text);
      const MixtureParams p = load_params(common, static_cast<int>(a.size()));
      require_dim(a, p.dim(), "a");
      const MixtureModel model(p);
      const SaddlePoint sp = solve_saddle(model, a, solver(common));
      const SpaEstimate est = spa_density(sp, n);
      const double log_exact = ExactMeanDensity(p, n).log_density(a);
      kv("log_density", est.log_density);
      kv("density", est.density);
      kv("log_prefactor", est.log_prefactor);
      kv("exponent", est.exponent);
      kv("exact_log_density", log_exact);
      kv("rel_err", std::abs(std::expm1(log_exact - est.log_density)));
      if (est.underflow) std::printf("underflow = true\n");
    } else if (solve->parsed()) {
      const Vector a = to_vector(a_text);
      const MixtureParams p = load_params(common, static_cast<int>(a.size()));
      require_dim(a, p.dim(), "a");
      const MixtureModel model(p);
      const SaddlePoint sp = solve_saddle(model, a, solver(common));
      print_vec("tau", sp.tau);
      kv("phi_star", sp.phi_star);
      kv("log_det_h", sp.log_det_h);
      kv("residual", sp.residual);
      std::printf("iterations = %d\nmethod = %s\n", sp.iterations,
                  sp.method == SolveMethod::newton ? "newton" : "fixed_point");
      kv("c3_ball", c3_ball(model, a));
    } else if (corr->parsed()) {
      const Vector a = to_vector(a_text);
      const MixtureParams p = load_params(common, static_cast<int>(a.size()));
      require_dim(a, p.dim(), "a");
      const MixtureModel model(p);
      const SaddlePoint sp = solve_saddle(model, a, solver(common));
      QuadSpec q;
      q.nodes_per_axis = quad_nodes;
      const CorrectionResult c = correction_integral(model, sp, n, q);
      kv("i_re", c.i_value.real());
      kv("i_im", c.i_value.imag());
      kv("abs_err_from_one", c.abs_err_from_one);
      kv("refine_gap", c.refine_gap);
      kv("tail_estimate", c.tail_estimate);
      std::printf("nodes_used = %ld\n", c.nodes_used);
      kv("half_width", c.half_width);
    } else if (verify->parsed()) {
      const MixtureParams p = load_params(common, std::nullopt);
      const MixtureModel model(p);
      std::vector<Vector> taus{Vector::Zero(p.dim())};
      if (tau_radius > 0.0) {
        for (int i = 0; i < p.dim(); ++i) {
          taus.push_back(tau_radius * Vector::Unit(p.dim(), i));
          taus.push_back(-tau_radius * Vector::Unit(p.dim(), i));
        }
      }
      const AssumptionReport r = check_assumptions(model, taus, n, samples, common.seed);
      kv("kappa_est", r.kappa_est);
      kv("delta_arg", r.delta_arg);
      kv("delta_mod", r.delta_mod);
      std::printf("magnitude_violations = %ld\nexp_branch_violations = %ld\nsamples = %ld\n",
                  r.magnitude_violations, r.exp_branch_violations, r.samples);
      std::printf("gaussian_dominated = %s\n", r.gaussian_dominated ? "true" : "false");
      kv("t_min", r.t_min);
      kv("t_max", r.t_max);
    } else if (clt->parsed()) {
      const Vector x = to_vector(x_text);
      const MixtureParams p = load_params(common, static_cast<int>(x.size()));
      require_dim(x, p.dim(), "x");
      const CltRatio c = clt_ratio(p, n, x);
      kv("ratio", c.ratio);
      kv("abs_ratio_minus_one", std::abs(c.ratio - 1.0));
      kv("bound", c.bound);
      kv("c3_ball", c.c3_ball);
      kv("budget_total", c.budget_total);
      std::printf("bound_constant = %s\n", ErrorBudget::kConstantNote);
    } else if (exper->parsed()) {
      ExperimentSpec spec = load_experiment_spec(spec_path);
      if (!mode_text.empty()) spec.mode = parse_mode(mode_text);
      if (!out_dir.empty()) spec.output_dir = out_dir;
      if (exp_seed) spec.seed = *exp_seed;
      if (exp_tol) spec.tol = *exp_tol;
      if (exp_nodes) spec.quad_nodes = *exp_nodes;
      if (timing) spec.record_timing = true;
      for (const auto& path : run_experiment(spec)) std::printf("%s\n", path.string().c_str());
    }
  } catch (const ArgumentError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
