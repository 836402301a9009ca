#include "adprep/error.hpp"

namespace adprep {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadSize: return "BadSize";
    case ErrorCode::UnsupportedDatatype: return "UnsupportedDatatype";
    case ErrorCode::GzipUnsupported: return "GzipUnsupported";
    case ErrorCode::InvalidHeader: return "InvalidHeader";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::ValueOverflow: return "ValueOverflow";
    case ErrorCode::AllClipped: return "AllClipped";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonPositiveBaseline: return "NonPositiveBaseline";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::MalformedConfig: return "MalformedConfig";
    case ErrorCode::MalformedModel: return "MalformedModel";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace adprep
