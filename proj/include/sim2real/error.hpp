#pragma once

#include <stdexcept>
#include <string>

namespace sim2real {

// Coarse failure category. The C API maps each kind onto a status code and
// the CLI maps those onto process exit codes.
enum class ErrorKind {
  kInvalidArgument,
  kIo,
  kFormat,
  kData,
  kModelMissing,
  kCapability,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace sim2real
