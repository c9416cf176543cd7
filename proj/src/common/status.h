// Copyright (c) 2026 The vtspeech authors
//
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

#ifndef VTSPEECH_COMMON_STATUS_H_
#define VTSPEECH_COMMON_STATUS_H_

#include <stdexcept>
#include <string>

namespace vts {

// Error categories carried by every exception crossing the C API boundary.
// Values match vts_status in include/vtspeech.h.
enum class ErrorCode {
  kOk = 0,
  kInvalidArgument = 1,
  kIo = 2,
  kSchema = 3,
  kState = 4,
  kInfeasible = 5,
  kOov = 6,
  kEmptyTranscript = 7,
  kIncompatible = 8,
  kInternal = 9,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// One concrete exception type per category so call sites can catch
// precisely; all of them still funnel through Error at the C boundary.
#define VTS_DEFINE_ERROR(Name, Code)                    \
  class Name : public Error {                           \
   public:                                              \
    explicit Name(const std::string& msg)               \
        : Error(ErrorCode::Code, msg) {}                \
  }

VTS_DEFINE_ERROR(ArgumentError, kInvalidArgument);
VTS_DEFINE_ERROR(IoError, kIo);
VTS_DEFINE_ERROR(SchemaError, kSchema);
VTS_DEFINE_ERROR(StateError, kState);
VTS_DEFINE_ERROR(InfeasibleError, kInfeasible);
VTS_DEFINE_ERROR(OovError, kOov);
VTS_DEFINE_ERROR(EmptyTranscriptError, kEmptyTranscript);
VTS_DEFINE_ERROR(IncompatibleError, kIncompatible);
VTS_DEFINE_ERROR(InternalError, kInternal);

#undef VTS_DEFINE_ERROR

#define VTS_CHECK_ARG(cond, msg) \
  do {                           \
    if (!(cond)) throw ::vts::ArgumentError(msg); \
  } while (0)

}  // namespace vts

#endif  // VTSPEECH_COMMON_STATUS_H_
