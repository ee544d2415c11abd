#include "core/error.hpp"

namespace ts {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::shape: return "shape";
    case ErrorKind::io: return "io";
    case ErrorKind::format: return "format";
    case ErrorKind::dataset: return "dataset";
    case ErrorKind::config: return "config";
    case ErrorKind::integrity: return "integrity";
    case ErrorKind::version: return "version";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::contract: return "contract";
    case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace ts
