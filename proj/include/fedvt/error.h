//
// Copyright 2026 The fedvt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef FEDVT_ERROR_H_
#define FEDVT_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace fedvt {

enum class ErrorCode {
  kInvalidParameter,
  kInvalidOrder,
  kInvalidInput,
  kAuditUnsupported,
  kUnsupportedPrior,
  kBudgetExceeded,
  kScheduleMismatch,
  kInvalidTranscript,
  kDensityUnavailable,
  kEnumerationCapExceeded,
  kUnsupported,
  kNoSignal,
  kEstimationFailed,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures surface as this exception; `code()` is stable and is
// what callers (and the CLI exit-code mapping) should switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidParameter:
      return "invalid-parameter";
    case ErrorCode::kInvalidOrder:
      return "invalid-order";
    case ErrorCode::kInvalidInput:
      return "invalid-input";
    case ErrorCode::kAuditUnsupported:
      return "audit-unsupported";
    case ErrorCode::kUnsupportedPrior:
      return "unsupported-prior";
    case ErrorCode::kBudgetExceeded:
      return "budget-exceeded";
    case ErrorCode::kScheduleMismatch:
      return "schedule-mismatch";
    case ErrorCode::kInvalidTranscript:
      return "invalid-transcript";
    case ErrorCode::kDensityUnavailable:
      return "density-unavailable";
    case ErrorCode::kEnumerationCapExceeded:
      return "enumeration-cap-exceeded";
    case ErrorCode::kUnsupported:
      return "unsupported";
    case ErrorCode::kNoSignal:
      return "no-signal";
    case ErrorCode::kEstimationFailed:
      return "estimation-failed";
  }
  return "unknown";
}

}  // namespace fedvt

#endif  // FEDVT_ERROR_H_
