#pragma once

#include <stdexcept>
#include <string>

namespace monopose {

/// Base class for all monopose runtime errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// camera_model
struct NonPositiveDepth : Error {
  using Error::Error;
};
struct DegenerateAngle : Error {
  using Error::Error;
};

// rotation
struct InsufficientPoints : Error {
  using Error::Error;
};
struct DegenerateConfiguration : Error {
  using Error::Error;
};
struct NoConsensus : Error {
  using Error::Error;
};

// translation
struct BehindCamera : Error {
  using Error::Error;
};
struct NearParallel : Error {
  using Error::Error;
};
struct InsufficientParallax : Error {
  using Error::Error;
};
struct AllParallel : Error {
  using Error::Error;
};
struct AmbiguousSign : Error {
  using Error::Error;
};

// scene simulation
struct FrustumTooTight : Error {
  using Error::Error;
};

// track / calibration io
struct ParseError : Error {
  ParseError(const std::string& what, long line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_number(line) {}
  long line_number;
};
struct DuplicateObservation : Error {
  using Error::Error;
};
struct FrameOutOfRange : Error {
  using Error::Error;
};

}  // namespace monopose
