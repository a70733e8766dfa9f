#include "lyacert/error.hpp"

namespace lyacert {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonMonotoneTime: return "NonMonotoneTime";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::EvenWindow: return "EvenWindow";
    case ErrorCode::TimestampMismatch: return "TimestampMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorCode code, const std::string& what, std::size_t line) {
  std::string out{to_string(code)};
  if (line > 0) out += " at line " + std::to_string(line);
  out += ": ";
  out += what;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& what, std::size_t line)
    : std::runtime_error(decorate(code, what, line)), code_(code), line_(line) {}

}  // namespace lyacert
