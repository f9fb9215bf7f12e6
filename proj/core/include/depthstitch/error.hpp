#pragma once

#include <stdexcept>
#include <string>

namespace depthstitch {

enum class ErrorKind {
  DegeneratePoint,         // homogeneous scale too close to zero, or invalid depth
  CollinearVertices,       // plane through three image points is underdetermined
  InsufficientMatches,     // fewer records than the minimal sample needs
  DegenerateConfiguration, // linear system rank-deficient beyond its gauge freedom
  NoConsensus,             // no sample reached the minimal inlier count
  NonFiniteResidual,       // refinement objective is NaN/Inf at the start point
  EpipoleCoincidence,      // reference point sits on the epipole, depth direction lost
  PolynomialFailure,       // two-view correction polynomial had no usable root
  DegenerateInput,         // fewer than three distinct vertices to triangulate
  CanvasMismatch,          // composing layers with different canvas geometry
  CanvasOverflow,          // warped bounding box exceeds the allowed canvas budget
  RegionTooSmall,          // not enough valid pixels to evaluate a windowed metric
  DimensionMismatch,       // images/maps that must agree in size do not
  InvalidParam,            // parameter outside its documented domain
  ParseError,              // malformed input file
  IoError,                 // file system failure
};

const char* to_string(ErrorKind kind);

// All library failures surface as this exception; what() starts with the
// kind name, and the pipeline prefixes a "[stage]" tag to the message so CLI
// diagnostics name the processing step that failed.
class StitchError : public std::runtime_error {
 public:
  StitchError(ErrorKind kind, std::string message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        message_(std::move(message)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& message() const { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegeneratePoint: return "DegeneratePoint";
    case ErrorKind::CollinearVertices: return "CollinearVertices";
    case ErrorKind::InsufficientMatches: return "InsufficientMatches";
    case ErrorKind::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorKind::NoConsensus: return "NoConsensus";
    case ErrorKind::NonFiniteResidual: return "NonFiniteResidual";
    case ErrorKind::EpipoleCoincidence: return "EpipoleCoincidence";
    case ErrorKind::PolynomialFailure: return "PolynomialFailure";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::CanvasMismatch: return "CanvasMismatch";
    case ErrorKind::CanvasOverflow: return "CanvasOverflow";
    case ErrorKind::RegionTooSmall: return "RegionTooSmall";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidParam: return "InvalidParam";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace depthstitch
