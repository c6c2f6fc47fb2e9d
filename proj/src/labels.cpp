#include "stance/labels.hpp"

#include "stance/error.hpp"

namespace stance {

std::string_view to_string(StanceLabel label) {
  switch (label) {
    case StanceLabel::Comment: return "comment";
    case StanceLabel::Deny: return "deny";
    case StanceLabel::Query: return "query";
    case StanceLabel::Support: return "support";
  }
  return "comment";
}

char short_name(StanceLabel label) {
  switch (label) {
    case StanceLabel::Comment: return 'C';
    case StanceLabel::Deny: return 'D';
    case StanceLabel::Query: return 'Q';
    case StanceLabel::Support: return 'S';
  }
  return 'C';
}

std::optional<StanceLabel> parse_label(std::string_view text) {
  for (StanceLabel label : kAllLabels) {
    if (text == to_string(label)) return label;
  }
  return std::nullopt;
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::OrphanPost: return "OrphanPost";
    case ErrorCode::MultipleSources: return "MultipleSources";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::DuplicatePost: return "DuplicatePost";
    case ErrorCode::UnknownPost: return "UnknownPost";
    case ErrorCode::MixedThreads: return "MixedThreads";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace stance
