#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "geosmc/errors.hpp"

namespace geosmc::toml {

/// Parsed TOML value.  This is a deliberately small reader covering the
/// scenario-file schema: tables, arrays of tables, dotted keys, strings,
/// integers, floats, booleans, arrays, and inline tables.
class Value {
 public:
  using Array = std::vector<Value>;
  using Table = std::map<std::string, Value>;

  Value() : data_(std::monostate{}) {}
  explicit Value(bool b) : data_(b) {}
  explicit Value(std::int64_t i) : data_(i) {}
  explicit Value(double d) : data_(d) {}
  explicit Value(std::string s) : data_(std::move(s)) {}
  explicit Value(Array a) : data_(std::move(a)) {}
  explicit Value(Table t) : data_(std::move(t)) {}

  int line = 0;

  bool is_table() const { return std::holds_alternative<Table>(data_); }
  bool is_array() const { return std::holds_alternative<Array>(data_); }
  bool is_string() const { return std::holds_alternative<std::string>(data_); }
  bool is_number() const {
    return std::holds_alternative<std::int64_t>(data_) ||
           std::holds_alternative<double>(data_);
  }
  bool is_bool() const { return std::holds_alternative<bool>(data_); }

  double as_double() const;
  std::int64_t as_int() const;
  bool as_bool() const;
  const std::string& as_string() const;
  const Array& as_array() const;
  const Table& as_table() const;
  Table& as_table();

  /// Table member access; nullptr when absent.
  const Value* find(const std::string& key) const;
  /// Table member access; throws ConfigError naming the key when absent.
  const Value& at(const std::string& key) const;

  /// Convenience typed lookups with defaults.
  double number_or(const std::string& key, double fallback) const;
  std::int64_t int_or(const std::string& key, std::int64_t fallback) const;
  bool bool_or(const std::string& key, bool fallback) const;
  std::string string_or(const std::string& key, const std::string& fallback) const;

  std::vector<double> as_number_array() const;

 private:
  std::variant<std::monostate, bool, std::int64_t, double, std::string, Array,
               Table>
      data_;
};

/// Parses TOML text.  Throws ConfigError with a line number on malformed
/// input.
Value parse(const std::string& text);

/// Reads and parses a file; the message of a thrown ConfigError names the
/// offending line.
Value parse_file(const std::string& path);

}  // namespace geosmc::toml
