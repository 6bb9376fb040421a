#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ssf {

enum class ErrorCode {
  NonFinite,
  NonPositiveRadius,
  ArcTooLong,
  NegativeLength,
  InvalidStep,
  LabelMismatch,
  DegenerateTunnel,
  NonPositiveSpeed,
  StageInputMismatch,
  MisalignedEntry,
  PlanPhantomMismatch,
  VoxelTooCoarse,
  InvalidSpec,
  EmptyCenterline,
  DegenerateGeometry,
  NoTransitionFound,
  TooShort,
  CollinearPoints,
  InsufficientArc,
  EmptyInput,
  InvalidArgument,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. `stage` names the pipeline stage that raised it
/// (empty when the error comes from a standalone call).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string stage = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& detail() const noexcept { return detail_; }

  Error with_stage(std::string stage) const;

 private:
  ErrorCode code_;
  std::string stage_;
  std::string detail_;
};

}  // namespace ssf
