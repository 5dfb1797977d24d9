#include "geosmc/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace geosmc::toml {

double Value::as_double() const {
  if (auto* d = std::get_if<double>(&data_)) return *d;
  if (auto* i = std::get_if<std::int64_t>(&data_)) return static_cast<double>(*i);
  throw ConfigError("expected a number", line);
}

std::int64_t Value::as_int() const {
  if (auto* i = std::get_if<std::int64_t>(&data_)) return *i;
  throw ConfigError("expected an integer", line);
}

bool Value::as_bool() const {
  if (auto* b = std::get_if<bool>(&data_)) return *b;
  throw ConfigError("expected a boolean", line);
}

const std::string& Value::as_string() const {
  if (auto* s = std::get_if<std::string>(&data_)) return *s;
  throw ConfigError("expected a string", line);
}

const Value::Array& Value::as_array() const {
  if (auto* a = std::get_if<Array>(&data_)) return *a;
  throw ConfigError("expected an array", line);
}

const Value::Table& Value::as_table() const {
  if (auto* t = std::get_if<Table>(&data_)) return *t;
  throw ConfigError("expected a table", line);
}

Value::Table& Value::as_table() {
  if (auto* t = std::get_if<Table>(&data_)) return *t;
  throw ConfigError("expected a table", line);
}

const Value* Value::find(const std::string& key) const {
  const Table& t = as_table();
  const auto it = t.find(key);
  return it == t.end() ? nullptr : &it->second;
}

const Value& Value::at(const std::string& key) const {
  if (const Value* v = find(key)) return *v;
  throw ConfigError("missing required key '" + key + "'", line);
}

double Value::number_or(const std::string& key, double fallback) const {
  const Value* v = find(key);
  return v ? v->as_double() : fallback;
}

std::int64_t Value::int_or(const std::string& key, std::int64_t fallback) const {
  const Value* v = find(key);
  return v ? v->as_int() : fallback;
}

bool Value::bool_or(const std::string& key, bool fallback) const {
  const Value* v = find(key);
  return v ? v->as_bool() : fallback;
}

std::string Value::string_or(const std::string& key,
                             const std::string& fallback) const {
  const Value* v = find(key);
  return v ? v->as_string() : fallback;
}

std::vector<double> Value::as_number_array() const {
  std::vector<double> out;
  for (const Value& v : as_array()) out.push_back(v.as_double());
  return out;
}

namespace {

struct Parser {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1;

  explicit Parser(const std::string& t) : text(t) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(msg, line);
  }

  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }

  char take() {
    const char c = text[pos++];
    if (c == '\n') ++line;
    return c;
  }

  void skip_ws(bool include_newlines) {
    while (!eof()) {
      const char c = peek();
      if (c == '#') {
        while (!eof() && peek() != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' ||
                 (include_newlines && c == '\n')) {
        take();
      } else {
        break;
      }
    }
  }

  void expect(char c) {
    if (eof() || peek() != c)
      fail(std::string("expected '") + c + "'");
    take();
  }

  static bool is_bare(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  std::string parse_key_part() {
    skip_ws(false);
    if (eof()) fail("unexpected end of input in key");
    if (peek() == '"') return parse_basic_string();
    std::string key;
    while (!eof() && is_bare(peek())) key += take();
    if (key.empty()) fail("expected a key");
    return key;
  }

  std::vector<std::string> parse_dotted_key() {
    std::vector<std::string> parts{parse_key_part()};
    skip_ws(false);
    while (!eof() && peek() == '.') {
      take();
      parts.push_back(parse_key_part());
      skip_ws(false);
    }
    return parts;
  }

  std::string parse_basic_string() {
    expect('"');
    std::string out;
    while (true) {
      if (eof()) fail("unterminated string");
      char c = take();
      if (c == '"') break;
      if (c == '\n') fail("newline inside string");
      if (c == '\\') {
        if (eof()) fail("unterminated escape");
        const char e = take();
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape '\\") + e + "'");
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  Value parse_value() {
    skip_ws(false);
    if (eof()) fail("expected a value");
    const int at_line = line;
    Value v = parse_value_inner();
    v.line = at_line;
    return v;
  }

  Value parse_value_inner() {
    const char c = peek();
    if (c == '"') return Value(parse_basic_string());
    if (c == '[') return parse_array();
    if (c == '{') return parse_inline_table();
    if (text.compare(pos, 4, "true") == 0 && boundary(pos + 4)) {
      pos += 4;
      return Value(true);
    }
    if (text.compare(pos, 5, "false") == 0 && boundary(pos + 5)) {
      pos += 5;
      return Value(false);
    }
    return parse_number();
  }

  bool boundary(std::size_t p) const {
    return p >= text.size() || !is_bare(text[p]);
  }

  Value parse_array() {
    expect('[');
    Value::Array items;
    skip_ws(true);
    while (!eof() && peek() != ']') {
      items.push_back(parse_value());
      skip_ws(true);
      if (!eof() && peek() == ',') {
        take();
        skip_ws(true);
      }
    }
    expect(']');
    return Value(std::move(items));
  }

  Value parse_inline_table() {
    expect('{');
    Value::Table table;
    skip_ws(false);
    while (!eof() && peek() != '}') {
      const auto key = parse_dotted_key();
      skip_ws(false);
      expect('=');
      Value v = parse_value();
      insert_dotted(table, key, std::move(v));
      skip_ws(false);
      if (!eof() && peek() == ',') {
        take();
        skip_ws(false);
      }
    }
    expect('}');
    Value out(std::move(table));
    return out;
  }

  Value parse_number() {
    std::size_t end = pos;
    while (end < text.size()) {
      const char c = text[end];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' ||
          c == '.' || c == 'e' || c == 'E' || c == '_')
        ++end;
      else
        break;
    }
    if (end == pos) fail("expected a value");
    std::string token = text.substr(pos, end - pos);
    std::erase(token, '_');
    const bool is_float = token.find_first_of(".eE") != std::string::npos;
    if (!is_float) {
      std::int64_t i = 0;
      const auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), i);
      if (ec == std::errc() && p == token.data() + token.size()) {
        pos = end;
        return Value(i);
      }
    }
    try {
      std::size_t used = 0;
      const double d = std::stod(token, &used);
      if (used != token.size()) fail("malformed number '" + token + "'");
      pos = end;
      return Value(d);
    } catch (const std::exception&) {
      fail("malformed number '" + token + "'");
    }
  }

  // Inserts a value under a dotted key, creating intermediate tables.
  void insert_dotted(Value::Table& table, const std::vector<std::string>& key,
                     Value value) {
    Value::Table* cursor = &table;
    for (std::size_t i = 0; i + 1 < key.size(); ++i) {
      Value& slot = (*cursor)[key[i]];
      if (!slot.is_table()) {
        if (slot.is_array() || slot.is_string() || slot.is_number() || slot.is_bool())
          fail("key '" + key[i] + "' is not a table");
        slot = Value(Value::Table{});
        slot.line = line;
      }
      cursor = &slot.as_table();
    }
    if (cursor->count(key.back()))
      fail("duplicate key '" + key.back() + "'");
    (*cursor)[key.back()] = std::move(value);
  }

  // Resolves a [table] or [[array-of-tables]] header path.
  Value::Table* resolve_header(Value::Table& root,
                               const std::vector<std::string>& path,
                               bool array_of_tables) {
    Value::Table* cursor = &root;
    for (std::size_t i = 0; i < path.size(); ++i) {
      const bool last = i + 1 == path.size();
      Value& slot = (*cursor)[path[i]];
      if (last && array_of_tables) {
        if (!slot.is_array()) {
          if (slot.is_table()) fail("'" + path[i] + "' is already a table");
          slot = Value(Value::Array{});
          slot.line = line;
        }
        auto& arr = const_cast<Value::Array&>(slot.as_array());
        arr.emplace_back(Value(Value::Table{}));
        arr.back().line = line;
        return &arr.back().as_table();
      }
      if (slot.is_array()) {
        auto& arr = const_cast<Value::Array&>(slot.as_array());
        if (arr.empty() || !arr.back().is_table())
          fail("'" + path[i] + "' is not a table array");
        cursor = &arr.back().as_table();
        continue;
      }
      if (!slot.is_table()) {
        if (slot.is_string() || slot.is_number() || slot.is_bool())
          fail("key '" + path[i] + "' is not a table");
        slot = Value(Value::Table{});
        slot.line = line;
      }
      cursor = &slot.as_table();
    }
    return cursor;
  }

  Value parse_document() {
    Value root{Value::Table{}};
    root.line = 1;
    Value::Table* current = &root.as_table();
    while (true) {
      skip_ws(true);
      if (eof()) break;
      if (peek() == '[') {
        take();
        const bool array_of_tables = !eof() && peek() == '[';
        if (array_of_tables) take();
        const auto path = parse_dotted_key();
        expect(']');
        if (array_of_tables) expect(']');
        current = resolve_header(root.as_table(), path, array_of_tables);
        continue;
      }
      const auto key = parse_dotted_key();
      skip_ws(false);
      expect('=');
      Value v = parse_value();
      insert_dotted(*current, key, std::move(v));
      skip_ws(false);
      if (!eof() && peek() != '\n' && peek() != '#')
        fail("unexpected trailing characters after value");
    }
    return root;
  }
};

}  // namespace

Value parse(const std::string& text) { return Parser(text).parse_document(); }

Value parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace geosmc::toml
