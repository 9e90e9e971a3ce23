#include "hdspa/kv_config.hpp"

#include "hdspa/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace hdspa {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

KvConfig KvConfig::parse(std::string_view text) {
  KvConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ArgumentError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ArgumentError("config line " + std::to_string(lineno) + ": empty key");
    if (!cfg.values_.emplace(key, value).second) {
      throw ArgumentError("config: duplicate key '" + key + "'");
    }
  }
  return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const std::string& KvConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ArgumentError("config: missing key '" + key + "'");
  return it->second;
}

std::string KvConfig::get_or(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

void KvConfig::require_known(const std::vector<std::string>& allowed) const {
  for (const auto& [key, value] : values_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ArgumentError("config: unknown key '" + key + "'");
    }
  }
}

namespace {

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ';' || c == '[' || c == ']' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

double parse_real(std::string_view text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ArgumentError("not a number: '" + s + "'");
  }
  return v;
}

long long parse_integer(std::string_view text) {
  const std::string s = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ArgumentError("not an integer: '" + s + "'");
  }
  return v;
}

bool parse_bool(std::string_view text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ArgumentError("not a boolean: '" + s + "'");
}

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& tok : split_tokens(text)) out.push_back(parse_real(tok));
  return out;
}

std::vector<long long> parse_integer_list(std::string_view text) {
  std::vector<long long> out;
  for (const auto& tok : split_tokens(text)) out.push_back(parse_integer(tok));
  return out;
}

std::vector<std::vector<double>> parse_number_rows(std::string_view text) {
  std::string s(text);
  // "[[1,0],[0,1]]" -> "1,0;0,1"
  for (std::size_t pos; (pos = s.find("],")) != std::string::npos;) s.replace(pos, 2, ";");
  std::vector<std::vector<double>> rows;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = s.find(';', start);
    const std::string part = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
    auto row = parse_number_list(part);
    if (!row.empty()) rows.push_back(std::move(row));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return rows;
}

}  // namespace hdspa
