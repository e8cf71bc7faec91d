#ifndef DRONECATCH_ERROR_H_
#define DRONECATCH_ERROR_H_

#include <stdexcept>
#include <string>

namespace dronecatch {

enum class ErrorKind {
  kInvalidArgument,
  kGeometryDegenerate,
  kPlacementInfeasible,
  kInsufficientObservations,
  kEmptyTrainingSet,
  kDimensionMismatch,
  kStaleCache,
  kShapeMismatch,
  kLengthMismatch,
  kDegenerateDirection,
  kEmptyBatch,
  kMissingCheckpoint,
  kControllerFailure,
  kIo,
  kParse,
};

const char* ErrorKindName(ErrorKind kind);

// All library failures are reported through this exception type.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kGeometryDegenerate: return "geometry-degenerate";
    case ErrorKind::kPlacementInfeasible: return "placement-infeasible";
    case ErrorKind::kInsufficientObservations: return "insufficient-observations";
    case ErrorKind::kEmptyTrainingSet: return "empty-training-set";
    case ErrorKind::kDimensionMismatch: return "dimension-mismatch";
    case ErrorKind::kStaleCache: return "stale-cache";
    case ErrorKind::kShapeMismatch: return "shape-mismatch";
    case ErrorKind::kLengthMismatch: return "length-mismatch";
    case ErrorKind::kDegenerateDirection: return "degenerate-direction";
    case ErrorKind::kEmptyBatch: return "empty-batch";
    case ErrorKind::kMissingCheckpoint: return "missing-checkpoint";
    case ErrorKind::kControllerFailure: return "controller-failure";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kParse: return "parse";
  }
  return "unknown";
}

}  // namespace dronecatch

#endif  // DRONECATCH_ERROR_H_
