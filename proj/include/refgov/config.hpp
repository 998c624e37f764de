#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace refgov {

/// Reader for the TOML subset used by run configurations: [table] and
/// [dotted.table] headers, `key = value` with numbers, booleans, quoted
/// strings, and flat arrays of numbers or strings (may span lines), and `#`
/// comments.  Keys are addressed as "table.key".
class Config {
 public:
  using Value = std::variant<double, bool, std::string, std::vector<double>, std::vector<std::string>>;

  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::string string(const std::string& key) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::string> strings(const std::string& key) const;

  /// Direct sub-table names under `prefix` (e.g. "profiles" -> {"train", ...}).
  std::vector<std::string> tables(const std::string& prefix) const;

  void set(const std::string& key, Value v) { values_[key] = std::move(v); }
  const std::string& source_text() const { return text_; }

 private:
  const Value& at(const std::string& key) const;
  std::map<std::string, Value> values_;
  std::vector<std::string> table_names_;
  std::string text_;
};

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(const std::string& data);

}  // namespace refgov
