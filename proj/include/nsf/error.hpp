#pragma once

#include <stdexcept>
#include <string>

namespace nsf {

/// Failure categories surfaced to the CLI as distinct exit codes.
enum class ErrorKind {
  config = 2,     ///< malformed or inconsistent input
  numerical = 3,  ///< positivity loss, NaN, singular density
  io = 4,         ///< unreadable / corrupt files
  domain = 5,     ///< argument outside the mathematical domain
  assertion = 6,  ///< a verification check failed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::config: return "config error";
    case ErrorKind::numerical: return "numerical abort";
    case ErrorKind::io: return "io error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::assertion: return "assertion failure";
  }
  return "error";
}

}  // namespace nsf
