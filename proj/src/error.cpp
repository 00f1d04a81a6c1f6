#include "stereoforge/error.hpp"

namespace stereoforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::UnsupportedBitDepth: return "UnsupportedBitDepth";
    case ErrorCode::MalformedPng: return "MalformedPng";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::NoValidPixels: return "NoValidPixels";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnfilledHoles: return "UnfilledHoles";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::AllHoles: return "AllHoles";
    case ErrorCode::ExternalFailure: return "ExternalFailure";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::MissingMetric: return "MissingMetric";
    case ErrorCode::KOutOfRange: return "KOutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void rethrow_with_context(const Error& e, std::string_view context) {
  std::string what = e.what();
  // Strip the "<Code>: " prefix so it is not duplicated.
  const auto prefix = std::string(to_string(e.code())) + ": ";
  if (what.rfind(prefix, 0) == 0) what.erase(0, prefix.size());
  throw Error(e.code(), std::string(context) + ": " + what);
}

}  // namespace stereoforge
