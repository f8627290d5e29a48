#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jsqd {

enum class ErrorKind {
  kInvalidParameters,
  kInvalidState,
  kIntegrationInstability,
  kNonConvergence,
  kNumerical,
  kDegenerateRun,
  kConfiguration,
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// All library failures are reported as jsqd::Error carrying a kind tag.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace jsqd
