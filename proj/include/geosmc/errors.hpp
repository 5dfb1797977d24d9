#pragma once

#include <stdexcept>
#include <string>

namespace geosmc {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateRetraction : Error {
  using Error::Error;
};
struct RangeExceeded : Error {
  using Error::Error;
};
struct UnsupportedCorner : Error {
  using Error::Error;
};
struct NotSliding : Error {
  using Error::Error;
};
struct NotWellDefinedOrder : Error {
  using Error::Error;
};
struct NotSkew : Error {
  using Error::Error;
};
struct NotOnManifold : Error {
  using Error::Error;
};
struct OnSwitchingManifold : Error {
  using Error::Error;
};
struct InvalidGains : Error {
  using Error::Error;
};
struct Unsupported : Error {
  using Error::Error;
};

/// Thrown while loading or validating scenario configuration files.
/// Carries a line number when the problem is tied to a config line.
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_number(line) {}
  int line_number;
};

}  // namespace geosmc
