// Copyright 2026 The mmseq Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MMSEQ_ERROR_HPP_
#define MMSEQ_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace mmseq {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidSequence,
  kInvalidToken,
  kEnumerationTooLarge,
  kParse,
  kShapeMismatch,
  kConfig,
  kIo,
  kNonFinite,
};

const char* error_code_name(ErrorCode code);

// All library failures are reported as mmseq::Error. The C API maps the code
// onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace mmseq

#endif  // MMSEQ_ERROR_HPP_
