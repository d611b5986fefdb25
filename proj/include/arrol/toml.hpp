#pragma once

// Minimal TOML subset for experiment configs: single-level [tables],
// key = value with strings, numbers, booleans and flat homogeneous arrays,
// '#' comments. Errors carry line numbers and the offending key.

#include <cctype>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "arrol/common.hpp"

namespace arrol::toml {

using Value = std::variant<double, bool, std::string, std::vector<double>,
                           std::vector<std::string>>;

class Document {
public:
  bool has(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  double get_double(const std::string& section, const std::string& key, double fallback) const {
    if (!has(section, key)) return fallback;
    return require_double(section, key);
  }

  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const {
    if (!has(section, key)) return fallback;
    const double v = require_double(section, key);
    const auto i = static_cast<std::int64_t>(v);
    if (static_cast<double>(i) != v)
      throw ConfigError(dotted(section, key) + ": expected an integer");
    return i;
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const Value& v = at(section, key);
    if (const bool* b = std::get_if<bool>(&v)) return *b;
    throw ConfigError(dotted(section, key) + ": expected a boolean");
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    if (!has(section, key)) return fallback;
    const Value& v = at(section, key);
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    throw ConfigError(dotted(section, key) + ": expected a string");
  }

  std::vector<double> get_double_array(const std::string& section, const std::string& key,
                                       std::vector<double> fallback) const {
    if (!has(section, key)) return fallback;
    const Value& v = at(section, key);
    if (const auto* a = std::get_if<std::vector<double>>(&v)) return *a;
    if (const double* d = std::get_if<double>(&v)) return {*d};
    if (const auto* s = std::get_if<std::vector<std::string>>(&v); s && s->empty()) return {};
    throw ConfigError(dotted(section, key) + ": expected a numeric array");
  }

  std::vector<std::string> get_string_array(const std::string& section, const std::string& key,
                                            std::vector<std::string> fallback) const {
    if (!has(section, key)) return fallback;
    const Value& v = at(section, key);
    if (const auto* a = std::get_if<std::vector<std::string>>(&v)) return *a;
    if (const auto* s = std::get_if<std::string>(&v)) return {*s};
    if (const auto* d = std::get_if<std::vector<double>>(&v); d && d->empty()) return {};
    throw ConfigError(dotted(section, key) + ": expected a string array");
  }

  void set(const std::string& section, const std::string& key, Value value) {
    sections_[section][key] = std::move(value);
  }

  const std::map<std::string, std::map<std::string, Value>>& sections() const {
    return sections_;
  }

private:
  static std::string dotted(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
  }

  const Value& at(const std::string& section, const std::string& key) const {
    return sections_.at(section).at(key);
  }

  double require_double(const std::string& section, const std::string& key) const {
    const Value& v = at(section, key);
    if (const double* d = std::get_if<double>(&v)) return *d;
    throw ConfigError(dotted(section, key) + ": expected a number");
  }

  std::map<std::string, std::map<std::string, Value>> sections_;
};

namespace detail {

inline std::string strip(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Removes a trailing comment, respecting double-quoted strings.
inline std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

inline Value parse_scalar(const std::string& token, int line_no) {
  if (token.size() >= 2 && token.front() == '"' && token.back() == '"')
    return token.substr(1, token.size() - 2);
  if (token == "true") return true;
  if (token == "false") return false;
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used == token.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("config line " + std::to_string(line_no) + ": bad value '" + token + "'");
}

inline std::vector<std::string> split_array(const std::string& body, int line_no) {
  std::vector<std::string> out;
  bool in_string = false;
  std::string cur;
  for (char c : body) {
    if (c == '"') in_string = !in_string;
    if (c == ',' && !in_string) {
      out.push_back(strip(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  const std::string last = strip(cur);
  if (!last.empty()) out.push_back(last);
  if (in_string)
    throw ConfigError("config line " + std::to_string(line_no) + ": unterminated string");
  return out;
}

}  // namespace detail

inline Document parse(const std::string& text) {
  Document doc;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    ++line_no;
    const std::string line = detail::strip(detail::strip_comment(text.substr(pos, eol - pos)));
    pos = eol + 1;
    if (line.empty()) {
      if (eol == text.size()) break;
      continue;
    }

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) + ": unterminated table header");
      section = detail::strip(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("config line " + std::to_string(line_no) + ": empty table name");
      if (eol == text.size()) break;
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::strip(line.substr(0, eq));
    const std::string value = detail::strip(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");

    if (value.front() == '[') {
      if (value.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) + ": unterminated array");
      const auto tokens = detail::split_array(value.substr(1, value.size() - 2), line_no);
      bool all_numbers = true;
      for (const auto& t : tokens)
        if (!t.empty() && (t.front() == '"' || t == "true" || t == "false")) all_numbers = false;
      if (all_numbers) {
        std::vector<double> nums;
        for (const auto& t : tokens) {
          const Value v = detail::parse_scalar(t, line_no);
          nums.push_back(std::get<double>(v));
        }
        doc.set(section, key, std::move(nums));
      } else {
        std::vector<std::string> strs;
        for (const auto& t : tokens) {
          const Value v = detail::parse_scalar(t, line_no);
          if (const auto* s = std::get_if<std::string>(&v))
            strs.push_back(*s);
          else
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": arrays must be all numbers or all strings");
        }
        doc.set(section, key, std::move(strs));
      }
    } else {
      doc.set(section, key, detail::parse_scalar(value, line_no));
    }
    if (eol == text.size()) break;
  }
  return doc;
}

}  // namespace arrol::toml
