#ifndef UCS_ERROR_HPP
#define UCS_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace ucs {

enum class ErrorKind {
  BadMagic,
  DimensionOverflow,
  NonFiniteValue,
  ParseError,
  IoError,
  EmptyMask,
  TooFewRows,
  DegenerateInput,
  MisalignedSources,
  TooFewPoints,
  IndexOutOfRange,
  SingularKernel,
  EmptyCandidateList,
  InvalidArgument,
  MissingInput,
  ConfigError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ucs

#endif  // UCS_ERROR_HPP
