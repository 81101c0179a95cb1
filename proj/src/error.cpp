#include "ucs/error.hpp"

namespace ucs {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::DimensionOverflow: return "DimensionOverflow";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::MisalignedSources: return "MisalignedSources";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::SingularKernel: return "SingularKernel";
    case ErrorKind::EmptyCandidateList: return "EmptyCandidateList";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::MissingInput: return "MissingInput";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace ucs
