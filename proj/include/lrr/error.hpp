#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lrr {

// Coarse error categories; the CLI maps them onto exit codes.
enum class ErrorKind {
  InvalidArgument,
  Data,
  ShapeMismatch,
  NonFinite,
  DuplicateParameters,
  Io,
  Checksum,
  VersionUnsupported,
  Fit,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Data: return "data";
    case ErrorKind::ShapeMismatch: return "shape_mismatch";
    case ErrorKind::NonFinite: return "non_finite";
    case ErrorKind::DuplicateParameters: return "duplicate_parameters";
    case ErrorKind::Io: return "io";
    case ErrorKind::Checksum: return "checksum";
    case ErrorKind::VersionUnsupported: return "version_unsupported";
    case ErrorKind::Fit: return "fit";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace lrr
