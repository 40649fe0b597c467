#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace structpred {

// Machine-readable category carried by every library error. The CLI prints
// `error[<code>]` as the first token of its diagnostic line.
enum class ErrorCode {
  kDimension,
  kFormat,
  kValidation,
  kAlignment,
  kConfig,
  kCheckpoint,
  kInput,
  kIo,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimension: return "E_DIMENSION";
    case ErrorCode::kFormat: return "E_FORMAT";
    case ErrorCode::kValidation: return "E_VALIDATION";
    case ErrorCode::kAlignment: return "E_ALIGNMENT";
    case ErrorCode::kConfig: return "E_CONFIG";
    case ErrorCode::kCheckpoint: return "E_CHECKPOINT";
    case ErrorCode::kInput: return "E_INPUT";
    case ErrorCode::kIo: return "E_IO";
  }
  return "E_UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace structpred
