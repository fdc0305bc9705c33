#pragma once

#include <stdexcept>
#include <string>

namespace hsi {

/// Failure category. The CLI maps these onto process exit codes.
enum class ErrorKind { Config = 1, Data = 2, Numeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Bad user configuration or a violated call contract.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

/// Malformed or inconsistent input data (files, shapes, label codes).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

/// Solver breakdown: singular systems, non-finite values, non-convergence.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

/// Re-throws `e` with `stage` prefixed to the message, preserving the kind.
[[noreturn]] inline void rethrow_tagged(const std::string& stage, const Error& e) {
  const std::string msg = "[" + stage + "] " + e.what();
  switch (e.kind()) {
    case ErrorKind::Config: throw ConfigError(msg);
    case ErrorKind::Data: throw DataError(msg);
    case ErrorKind::Numeric: throw NumericError(msg);
  }
  throw Error(e.kind(), msg);
}

}  // namespace hsi
