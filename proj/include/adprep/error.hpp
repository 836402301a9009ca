#ifndef ADPREP_ERROR_HPP
#define ADPREP_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace adprep {

enum class ErrorCode {
  TooShort,
  BadMagic,
  BadSize,
  UnsupportedDatatype,
  GzipUnsupported,
  InvalidHeader,
  TruncatedData,
  ValueOverflow,
  AllClipped,
  DimensionMismatch,
  ShapeMismatch,
  NonFiniteLoss,
  InvalidArgument,
  LengthMismatch,
  EmptyInput,
  NonPositiveBaseline,
  MalformedCsv,
  MalformedConfig,
  MalformedModel,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// All library failures are reported through this exception; `code()` names
/// the failure kind so callers can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace adprep

#endif  // ADPREP_ERROR_HPP
