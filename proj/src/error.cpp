#include "ssf/error.hpp"

namespace ssf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NonPositiveRadius: return "NonPositiveRadius";
    case ErrorCode::ArcTooLong: return "ArcTooLong";
    case ErrorCode::NegativeLength: return "NegativeLength";
    case ErrorCode::InvalidStep: return "InvalidStep";
    case ErrorCode::LabelMismatch: return "LabelMismatch";
    case ErrorCode::DegenerateTunnel: return "DegenerateTunnel";
    case ErrorCode::NonPositiveSpeed: return "NonPositiveSpeed";
    case ErrorCode::StageInputMismatch: return "StageInputMismatch";
    case ErrorCode::MisalignedEntry: return "MisalignedEntry";
    case ErrorCode::PlanPhantomMismatch: return "PlanPhantomMismatch";
    case ErrorCode::VoxelTooCoarse: return "VoxelTooCoarse";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::EmptyCenterline: return "EmptyCenterline";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::NoTransitionFound: return "NoTransitionFound";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::CollinearPoints: return "CollinearPoints";
    case ErrorCode::InsufficientArc: return "InsufficientArc";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {
std::string compose(ErrorCode code, const std::string& message, const std::string& stage) {
  std::string out;
  if (!stage.empty()) out += "[" + stage + "] ";
  out += std::string(to_string(code));
  if (!message.empty()) out += ": " + message;
  return out;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::string stage)
    : std::runtime_error(compose(code, message, stage)),
      code_(code),
      stage_(std::move(stage)),
      detail_(message) {}

Error Error::with_stage(std::string stage) const { return Error(code_, detail_, std::move(stage)); }

}  // namespace ssf
