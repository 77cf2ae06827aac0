#pragma once

#include <stdexcept>
#include <string>

namespace qcm {

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag used by the CLI error reporter.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define QCM_DEFINE_ERROR(Name)                                            \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& message) : Error(#Name, message) {}  \
  }

QCM_DEFINE_ERROR(DegenerateInput);
QCM_DEFINE_ERROR(ConfigTooSmall);
QCM_DEFINE_ERROR(NonFiniteObjective);
QCM_DEFINE_ERROR(UnknownConfig);
QCM_DEFINE_ERROR(EmptyColumn);
QCM_DEFINE_ERROR(InsufficientPoints);
QCM_DEFINE_ERROR(InvalidInput);

#undef QCM_DEFINE_ERROR

}  // namespace qcm
