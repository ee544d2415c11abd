#pragma once

#include <stdexcept>
#include <string>

namespace ts {

enum class ErrorKind {
  invalid_argument,
  shape,
  io,
  format,
  dataset,
  config,
  integrity,
  version,
  numeric,
  contract,
  internal,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace ts
