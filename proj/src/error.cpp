#include "djmix/error.hpp"

namespace djmix {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::CorruptFile: return "CorruptFile";
    case ErrorKind::EmptyAudio: return "EmptyAudio";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::NonMonotonicBoundaries: return "NonMonotonicBoundaries";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::EmptyInterval: return "EmptyInterval";
    case ErrorKind::MissingFeature: return "MissingFeature";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::NoStableRun: return "NoStableRun";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::SpanTooShort: return "SpanTooShort";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::MissingAudio: return "MissingAudio";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace djmix
