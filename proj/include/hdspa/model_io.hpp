#pragma once

#include "hdspa/model.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace hdspa {

/// Mixture model description as read from a model file.
///
/// Grammar (one `key = value` per line, `#` starts a comment):
///
///     d           = <int>                        optional if mu is a literal
///     mu          = <vector> | ones*<s> | unit*<s> | e1*<s> | zero
///     sigma       = identity | identity*<s> | diag <vector> | <matrix>
///     standardize = true|false                   optional, default false
///
/// `<vector>` is a list of numbers separated by commas or whitespace, with
/// optional brackets. `<matrix>` is rows separated by `;` (or `[[..],[..]]`).
/// `ones*s` is s in every coordinate, `unit*s` is the ones direction scaled
/// to norm s, `e1*s` is s times the first basis vector. The shorthands
/// leave d free so one file can describe a whole family of dimensions.
struct ModelSpec {
  std::optional<int> d;
  std::string mu = "zero";
  std::string sigma = "identity";
  bool standardize = false;

  /// Dimension-free specs need `d`; literal ones must agree with it.
  MixtureParams instantiate(std::optional<int> d_override = std::nullopt) const;
};

ModelSpec parse_model_spec(std::string_view text);
ModelSpec load_model_spec(const std::filesystem::path& path);

}  // namespace hdspa
