#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stereoforge {

enum class ErrorCode {
  MalformedHeader,
  TruncatedPayload,
  UnsupportedBitDepth,
  MalformedPng,
  UnsupportedFormat,
  NoValidPixels,
  DimensionMismatch,
  UnfilledHoles,
  EmptyPool,
  AllHoles,
  ExternalFailure,
  ImageTooSmall,
  NoOverlap,
  ArityMismatch,
  MissingMetric,
  KOutOfRange,
  InvalidArgument,
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure in the library surfaces as this exception. The code is
/// stable and machine-checkable; the message carries context such as the
/// offending file path.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Rethrows `e` with `context` (usually a path) prepended to the message.
[[noreturn]] void rethrow_with_context(const Error& e, std::string_view context);

}  // namespace stereoforge
