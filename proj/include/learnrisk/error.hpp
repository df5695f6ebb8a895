#pragma once

#include <stdexcept>
#include <string>

namespace learnrisk {

// Categories map onto CLI exit codes (see tools/learnrisk.cpp).
enum class ErrorKind {
  kInvalidArgument,
  kConfig,
  kData,
  kDegenerate,
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

}  // namespace learnrisk
