#ifndef FDPOMM_ERROR_HPP_
#define FDPOMM_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace fdpomm {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kValidation,
  kNoStationarySampler,
  kEmptyObservations,
  kUnsupported,
  kOutOfAlphabet,
  kEnumerationCap,
  kNonConvergence,
  kDegeneratePosterior,
  kZeroDensity,
  kConfig,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (and tests) can dispatch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kValidation: return "validation error";
    case ErrorCode::kNoStationarySampler: return "no stationary sampler";
    case ErrorCode::kEmptyObservations: return "empty observations";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kOutOfAlphabet: return "out-of-alphabet symbol";
    case ErrorCode::kEnumerationCap: return "enumeration cap exceeded";
    case ErrorCode::kNonConvergence: return "non-convergence";
    case ErrorCode::kDegeneratePosterior: return "degenerate posterior";
    case ErrorCode::kZeroDensity: return "zero density";
    case ErrorCode::kConfig: return "config error";
  }
  return "error";
}

}  // namespace fdpomm

#endif  // FDPOMM_ERROR_HPP_
