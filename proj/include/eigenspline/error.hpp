#pragma once

#include <stdexcept>
#include <string>

namespace eigenspline {

/// Base of every error raised by the library. `kind()` is a stable short tag
/// used in the CLI's machine-readable error output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define EIGENSPLINE_DEFINE_ERROR(Name, tag)                                 \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(tag, what) {}            \
  }

EIGENSPLINE_DEFINE_ERROR(ArgumentError, "argument");
EIGENSPLINE_DEFINE_ERROR(DegenerateDesignError, "degenerate_design");
EIGENSPLINE_DEFINE_ERROR(NumericalError, "numerical");
EIGENSPLINE_DEFINE_ERROR(RankError, "rank");
EIGENSPLINE_DEFINE_ERROR(ZeroEigenvalueError, "zero_eigenvalue");
EIGENSPLINE_DEFINE_ERROR(UnsupportedError, "unsupported");
EIGENSPLINE_DEFINE_ERROR(FormatError, "format");
EIGENSPLINE_DEFINE_ERROR(CorruptionError, "corruption");
EIGENSPLINE_DEFINE_ERROR(InvalidFitError, "invalid_fit");
EIGENSPLINE_DEFINE_ERROR(SelectionError, "selection");
EIGENSPLINE_DEFINE_ERROR(IoError, "io");

#undef EIGENSPLINE_DEFINE_ERROR

}  // namespace eigenspline
