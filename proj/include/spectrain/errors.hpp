#pragma once

#include <stdexcept>
#include <string>

namespace spectrain {

/// Error categories; the CLI maps each to a distinct exit code.
enum class ErrorKind {
  argument,
  format,
  data,
  numeric,
  search,
  fit,
  unsupported,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ArgumentError : Error {
  explicit ArgumentError(const std::string& w) : Error(ErrorKind::argument, w) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error(ErrorKind::format, w) {}
};
struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorKind::data, w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorKind::numeric, w) {}
};
struct SearchError : Error {
  explicit SearchError(const std::string& w) : Error(ErrorKind::search, w) {}
};
struct FitError : Error {
  explicit FitError(const std::string& w) : Error(ErrorKind::fit, w) {}
};
struct UnsupportedError : Error {
  explicit UnsupportedError(const std::string& w) : Error(ErrorKind::unsupported, w) {}
};

}  // namespace spectrain
