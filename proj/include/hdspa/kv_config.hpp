#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hdspa {

/// Flat `key = value` text. Blank lines and `#` comments are ignored; keys
/// are case-sensitive and may appear once.
class KvConfig {
 public:
  static KvConfig parse(std::string_view text);
  static KvConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  const std::map<std::string, std::string>& values() const { return values_; }

  /// Throws ArgumentError naming the first key outside `allowed`.
  void require_known(const std::vector<std::string>& allowed) const;

 private:
  std::map<std::string, std::string> values_;
};

std::string trim(std::string_view s);

/// "1, 2, 3", "[1 2 3]", "1;2" (separators: comma, semicolon, whitespace).
std::vector<double> parse_number_list(std::string_view text);
std::vector<long long> parse_integer_list(std::string_view text);

/// Rows separated by ';' (or "],["), entries as in parse_number_list.
std::vector<std::vector<double>> parse_number_rows(std::string_view text);

double parse_real(std::string_view text);
long long parse_integer(std::string_view text);
bool parse_bool(std::string_view text);

}  // namespace hdspa
