#include "hdspa/model_io.hpp"

#include "hdspa/errors.hpp"
#include "hdspa/kv_config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace hdspa {

namespace {

bool starts_with(const std::string& s, std::string_view prefix) {
  return s.rfind(prefix, 0) == 0;
}

std::optional<int> literal_dim(const std::string& expr) {
  if (expr == "zero" || starts_with(expr, "ones*") || starts_with(expr, "unit*") ||
      starts_with(expr, "e1*")) {
    return std::nullopt;
  }
  return static_cast<int>(parse_number_list(expr).size());
}

Vector build_mu(const std::string& expr, int d) {
  if (expr == "zero") return Vector::Zero(d);
  if (starts_with(expr, "ones*")) return Vector::Constant(d, parse_real(expr.substr(5)));
  if (starts_with(expr, "unit*")) {
    return Vector::Constant(d, parse_real(expr.substr(5)) / std::sqrt(static_cast<double>(d)));
  }
  if (starts_with(expr, "e1*")) return parse_real(expr.substr(3)) * Vector::Unit(d, 0);
  const auto xs = parse_number_list(expr);
  if (static_cast<int>(xs.size()) != d) {
    throw ArgumentError("model: mu has " + std::to_string(xs.size()) + " entries, expected " +
                        std::to_string(d));
  }
  return Eigen::Map<const Vector>(xs.data(), d);
}

Matrix build_sigma(const std::string& expr, int d) {
  if (expr == "identity") return Matrix::Identity(d, d);
  if (starts_with(expr, "identity*")) return parse_real(expr.substr(9)) * Matrix::Identity(d, d);
  if (starts_with(expr, "diag")) {
    const auto xs = parse_number_list(expr.substr(4));
    if (xs.size() == 1) return xs[0] * Matrix::Identity(d, d);
    if (static_cast<int>(xs.size()) != d) throw ArgumentError("model: diag sigma has wrong length");
    return Eigen::Map<const Vector>(xs.data(), d).asDiagonal();
  }
  const auto rows = parse_number_rows(expr);
  if (static_cast<int>(rows.size()) != d) throw ArgumentError("model: sigma must have d rows");
  Matrix m(d, d);
  for (int i = 0; i < d; ++i) {
    if (static_cast<int>(rows[i].size()) != d) throw ArgumentError("model: sigma row has wrong length");
    for (int j = 0; j < d; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

}  // namespace

MixtureParams ModelSpec::instantiate(std::optional<int> d_override) const {
  std::optional<int> dim = d_override ? d_override : d;
  const auto lit = literal_dim(mu);
  if (!dim) dim = lit;
  if (!dim) throw ArgumentError("model: dimension is not determined (set d)");
  if (*dim < 1) throw ArgumentError("model: d must be positive");
  if (lit && *lit != *dim) throw ArgumentError("model: literal mu does not match d");
  MixtureParams p{build_mu(mu, *dim), build_sigma(sigma, *dim)};
  p.validate();
  return standardize ? standardized(p) : p;
}

ModelSpec parse_model_spec(std::string_view text) {
  const KvConfig cfg = KvConfig::parse(text);
  cfg.require_known({"d", "mu", "sigma", "standardize"});
  ModelSpec spec;
  if (cfg.has("d")) spec.d = static_cast<int>(parse_integer(cfg.get("d")));
  spec.mu = cfg.get_or("mu", spec.mu);
  spec.sigma = cfg.get_or("sigma", spec.sigma);
  if (cfg.has("standardize")) spec.standardize = parse_bool(cfg.get("standardize"));
  return spec;
}

ModelSpec load_model_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open model file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model_spec(buf.str());
}

}  // namespace hdspa
