#include "fdpomm/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fdpomm/error.hpp"

namespace fdpomm {

namespace {

const char* type_name(const ConfigValue& v) {
  if (v.is_int()) return "integer";
  if (v.is_real()) return "real";
  if (v.is_bool()) return "boolean";
  if (v.is_string()) return "string";
  return "list";
}

[[noreturn]] void type_error(const ConfigValue& v, const char* want) {
  throw Error(ErrorCode::kConfig, std::string("expected ") + want + ", found " + type_name(v));
}

bool valid_name_char(char c, bool first) {
  if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return true;
  return !first && (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.');
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!valid_name_char(s[i], i == 0)) return false;
  return true;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Recursive-descent reader over one value expression.
class ValueReader {
 public:
  ValueReader(const std::string& text, const std::string& where) : s_(text), where_(where) {}

  ConfigValue read_all() {
    ConfigValue v = read();
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] != '#') fail("unexpected trailing text");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::kConfig, where_ + ", column " + std::to_string(pos_ + 1) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  ConfigValue read() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return read_string();
    if (c == '[') return read_list();
    return read_scalar();
  }

  ConfigValue read_string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          default: fail(std::string("unknown escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return ConfigValue(out);
  }

  ConfigValue read_list() {
    ++pos_;
    ConfigValue::List items;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return ConfigValue(items);
    }
    while (true) {
      items.push_back(read());
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated list");
      if (s_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (s_[pos_] == ']') {
        ++pos_;
        return ConfigValue(items);
      }
      fail("expected ',' or ']' in list");
    }
  }

  ConfigValue read_scalar() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) &&
           s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#')
      ++pos_;
    const std::string tok = s_.substr(start, pos_ - start);
    if (tok == "true") return ConfigValue(true);
    if (tok == "false") return ConfigValue(false);
    bool integral = !tok.empty();
    for (std::size_t i = 0; i < tok.size(); ++i) {
      const char c = tok[i];
      if (!(std::isdigit(static_cast<unsigned char>(c)) || (i == 0 && (c == '+' || c == '-'))))
        integral = false;
    }
    if (integral && tok != "+" && tok != "-") {
      errno = 0;
      char* end = nullptr;
      const long long v = std::strtoll(tok.c_str(), &end, 10);
      if (errno == ERANGE) fail("integer out of range: " + tok);
      return ConfigValue(static_cast<std::int64_t>(v));
    }
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size()) fail("cannot parse value '" + tok + "'");
    return ConfigValue(v);
  }

  const std::string& s_;
  std::string where_;
  std::size_t pos_ = 0;
};

}  // namespace

std::int64_t ConfigValue::as_int() const {
  if (!is_int()) type_error(*this, "integer");
  return std::get<std::int64_t>(v_);
}

double ConfigValue::as_double() const {
  if (is_int()) return static_cast<double>(std::get<std::int64_t>(v_));
  if (!is_real()) type_error(*this, "number");
  return std::get<double>(v_);
}

bool ConfigValue::as_bool() const {
  if (!is_bool()) type_error(*this, "boolean");
  return std::get<bool>(v_);
}

const std::string& ConfigValue::as_string() const {
  if (!is_string()) type_error(*this, "string");
  return std::get<std::string>(v_);
}

const ConfigValue::List& ConfigValue::as_list() const {
  if (!is_list()) type_error(*this, "list");
  return std::get<List>(v_);
}

std::vector<double> ConfigValue::as_doubles() const {
  if (is_number()) return {as_double()};
  std::vector<double> out;
  for (const auto& v : as_list()) out.push_back(v.as_double());
  return out;
}

std::vector<std::int64_t> ConfigValue::as_ints() const {
  if (is_int()) return {as_int()};
  std::vector<std::int64_t> out;
  for (const auto& v : as_list()) out.push_back(v.as_int());
  return out;
}

std::vector<std::string> ConfigValue::as_strings() const {
  if (is_string()) return {as_string()};
  std::vector<std::string> out;
  for (const auto& v : as_list()) out.push_back(v.as_string());
  return out;
}

std::string ConfigValue::serialize() const {
  if (is_int()) return std::to_string(std::get<std::int64_t>(v_));
  if (is_bool()) return std::get<bool>(v_) ? "true" : "false";
  if (is_real()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(v_));
    std::string s = buf;
    if (s.find_first_of(".eni") == std::string::npos) s += ".0";
    return s;
  }
  if (is_string()) {
    std::string out = "\"";
    for (char c : std::get<std::string>(v_)) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out.push_back(c);
      }
    }
    return out + "\"";
  }
  std::string out = "[";
  const auto& l = std::get<List>(v_);
  for (std::size_t i = 0; i < l.size(); ++i) out += (i ? ", " : "") + l[i].serialize();
  return out + "]";
}

Config Config::parse(const std::string& text, const std::string& source) {
  Config cfg;
  std::istringstream in(text);
  std::string raw, section;
  bool in_section = false;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line[0] == '[') {
      const auto close = line.find(']');
      if (close == std::string::npos) throw Error(ErrorCode::kConfig, where + ": missing ']'");
      const std::string rest = trim(line.substr(close + 1));
      if (!rest.empty() && rest[0] != '#')
        throw Error(ErrorCode::kConfig, where + ": text after section header");
      section = trim(line.substr(1, close - 1));
      if (!valid_name(section))
        throw Error(ErrorCode::kConfig, where + ": invalid section name '" + section + "'");
      cfg.sections_[section];
      in_section = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kConfig, where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_name(key)) throw Error(ErrorCode::kConfig, where + ": invalid key '" + key + "'");
    if (!in_section) throw Error(ErrorCode::kConfig, where + ": key '" + key + "' before any section");
    auto& sec = cfg.sections_[section];
    if (sec.count(key)) throw Error(ErrorCode::kConfig, where + ": duplicate key '" + key + "'");
    const std::string value_text = line.substr(eq + 1);
    sec.emplace(key, ValueReader(value_text, where).read_all());
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kConfig, "cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path);
}

std::string Config::serialize() const {
  std::string out;
  bool first = true;
  for (const auto& [name, sec] : sections_) {
    if (!first) out += "\n";
    first = false;
    out += "[" + name + "]\n";
    for (const auto& [k, v] : sec) out += k + " = " + v.serialize() + "\n";
  }
  return out;
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key);
}

const ConfigValue& Config::get(const std::string& section, const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end() || !s->second.count(key))
    throw Error(ErrorCode::kConfig, "missing key [" + section + "] " + key);
  return s->second.at(key);
}

void Config::set(const std::string& section, const std::string& key, ConfigValue value) {
  if (!valid_name(section) || !valid_name(key))
    throw Error(ErrorCode::kConfig, "invalid name [" + section + "] " + key);
  sections_[section][key] = std::move(value);
}

namespace {

template <typename F>
auto with_location(const std::string& section, const std::string& key, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, "[" + section + "] " + key + ": " + e.what());
  }
}

}  // namespace

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  if (!has(section, key)) return fallback;
  return with_location(section, key, [&] { return get(section, key).as_double(); });
}

std::int64_t Config::get_int(const std::string& section, const std::string& key,
                             std::int64_t fallback) const {
  if (!has(section, key)) return fallback;
  return with_location(section, key, [&] { return get(section, key).as_int(); });
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  return with_location(section, key, [&] { return get(section, key).as_bool(); });
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  if (!has(section, key)) return fallback;
  return with_location(section, key, [&] { return get(section, key).as_string(); });
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace fdpomm
