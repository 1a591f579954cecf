#ifndef FDPOMM_CONFIG_HPP_
#define FDPOMM_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace fdpomm {

// One typed value. Integers and reals are distinct so that round trips keep
// the type: a real always serializes with a '.', an exponent, or inf/nan.
class ConfigValue {
 public:
  using List = std::vector<ConfigValue>;
  using Storage = std::variant<std::int64_t, double, bool, std::string, List>;

  ConfigValue() : v_(std::int64_t{0}) {}
  ConfigValue(std::int64_t v) : v_(v) {}
  ConfigValue(int v) : v_(std::int64_t{v}) {}
  ConfigValue(double v) : v_(v) {}
  ConfigValue(bool v) : v_(v) {}
  ConfigValue(std::string v) : v_(std::move(v)) {}
  ConfigValue(const char* v) : v_(std::string(v)) {}
  ConfigValue(List v) : v_(std::move(v)) {}

  bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_real() const { return std::holds_alternative<double>(v_); }
  bool is_number() const { return is_int() || is_real(); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_string() const { return std::holds_alternative<std::string>(v_); }
  bool is_list() const { return std::holds_alternative<List>(v_); }

  std::int64_t as_int() const;
  double as_double() const;  // integers widen
  bool as_bool() const;
  const std::string& as_string() const;
  const List& as_list() const;
  std::vector<double> as_doubles() const;  // a list of numbers, or one number
  std::vector<std::int64_t> as_ints() const;
  std::vector<std::string> as_strings() const;

  std::string serialize() const;
  bool operator==(const ConfigValue& o) const { return v_ == o.v_; }

 private:
  Storage v_;
};

// Sections hold key/value pairs; section names may be dotted
// ("inference.grid") to express nesting. Keys keep their sorted order, so
// serialize() is canonical.
class Config {
 public:
  using Section = std::map<std::string, ConfigValue>;

  static Config parse(const std::string& text, const std::string& source = "<string>");
  static Config load(const std::string& path);

  std::string serialize() const;

  bool has(const std::string& section, const std::string& key) const;
  const ConfigValue& get(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, ConfigValue value);

  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;

  const std::map<std::string, Section>& sections() const { return sections_; }
  bool operator==(const Config& o) const { return sections_ == o.sections_; }

 private:
  std::map<std::string, Section> sections_;
};

// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& data);

}  // namespace fdpomm

#endif  // FDPOMM_CONFIG_HPP_
