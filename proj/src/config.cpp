#include "refgov/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "refgov/error.hpp"

namespace refgov {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops a trailing comment, respecting double-quoted strings.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  return std::all_of(k.begin(), k.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

std::string parse_string(const std::string& s, int line) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') fail(line, "bad string " + s);
  std::string out;
  for (size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\' && i + 2 < s.size()) {
      const char n = s[++i];
      out += n == 'n' ? '\n' : n == 't' ? '\t' : n;
    } else {
      out += s[i];
    }
  }
  return out;
}

double parse_number(const std::string& raw, int line) {
  std::string s;
  for (char c : raw)
    if (c != '_') s += c;
  if (s == "inf" || s == "+inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) fail(line, "bad number " + raw);
    return v;
  } catch (const std::logic_error&) {
    fail(line, "bad value " + raw);
  }
}

std::vector<std::string> split_array(const std::string& body, int line) {
  std::vector<std::string> items;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c == '"' && (i == 0 || body[i - 1] != '\\')) quoted = !quoted;
    if (c == ',' && !quoted) {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) fail(line, "unterminated string in array");
  if (!trim(cur).empty()) items.push_back(trim(cur));
  for (const auto& it : items)
    if (it.empty()) fail(line, "empty array element");
  return items;
}

Config::Value parse_value(const std::string& s, int line) {
  if (s.empty()) fail(line, "missing value");
  if (s.front() == '"') return parse_string(s, line);
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.front() == '[') {
    if (s.back() != ']') fail(line, "unterminated array");
    const auto items = split_array(s.substr(1, s.size() - 2), line);
    if (!items.empty() && items.front().front() == '"') {
      std::vector<std::string> out;
      for (const auto& it : items) out.push_back(parse_string(it, line));
      return out;
    }
    std::vector<double> out;
    for (const auto& it : items) out.push_back(parse_number(it, line));
    return out;
  }
  return parse_number(s, line);
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  cfg.text_ = text;
  std::istringstream in(text);
  std::string raw, table;
  std::set<std::string> seen_tables;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const int start_line = lineno;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[' && line.find('=') == std::string::npos) {
      if (line.back() != ']') fail(lineno, "bad table header");
      table = trim(line.substr(1, line.size() - 2));
      if (!valid_key(table)) fail(lineno, "bad table name '" + table + "'");
      if (!seen_tables.insert(table).second) fail(lineno, "duplicate table [" + table + "]");
      cfg.table_names_.push_back(table);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) fail(lineno, "bad key '" + key + "'");
    // Multi-line arrays: keep reading until the bracket closes.
    if (!value.empty() && value.front() == '[') {
      while (std::count(value.begin(), value.end(), '[') > std::count(value.begin(), value.end(), ']')) {
        if (!std::getline(in, raw)) fail(start_line, "unterminated array");
        ++lineno;
        value += " " + trim(strip_comment(raw));
      }
    }
    const std::string full = table.empty() ? key : table + "." + key;
    if (cfg.values_.count(full)) fail(start_line, "duplicate key " + full);
    cfg.values_[full] = parse_value(value, start_line);
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const Config::Value& Config::at(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

double Config::number(const std::string& key) const {
  const auto& v = at(key);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw ConfigError("config key '" + key + "' must be a number");
}

double Config::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

int Config::integer(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const double d = number(key);
  if (d != std::floor(d)) throw ConfigError("config key '" + key + "' must be an integer");
  return static_cast<int>(d);
}

bool Config::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  if (const auto* b = std::get_if<bool>(&at(key))) return *b;
  throw ConfigError("config key '" + key + "' must be true or false");
}

std::string Config::string(const std::string& key) const {
  if (const auto* s = std::get_if<std::string>(&at(key))) return *s;
  throw ConfigError("config key '" + key + "' must be a string");
}

std::string Config::string(const std::string& key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}

std::vector<double> Config::numbers(const std::string& key) const {
  const auto& v = at(key);
  if (const auto* a = std::get_if<std::vector<double>>(&v)) return *a;
  if (const auto* d = std::get_if<double>(&v)) return {*d};
  if (const auto* s = std::get_if<std::vector<std::string>>(&v); s && s->empty()) return {};
  throw ConfigError("config key '" + key + "' must be a number array");
}

std::vector<double> Config::numbers(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? numbers(key) : fallback;
}

std::vector<std::string> Config::strings(const std::string& key) const {
  const auto& v = at(key);
  if (const auto* a = std::get_if<std::vector<std::string>>(&v)) return *a;
  if (const auto* s = std::get_if<std::string>(&v)) return {*s};
  throw ConfigError("config key '" + key + "' must be a string array");
}

std::vector<std::string> Config::tables(const std::string& prefix) const {
  std::vector<std::string> out;
  const std::string p = prefix + ".";
  for (const auto& t : table_names_)
    if (t.rfind(p, 0) == 0 && t.find('.', p.size()) == std::string::npos) out.push_back(t.substr(p.size()));
  return out;
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

}  // namespace refgov
