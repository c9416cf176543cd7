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

#ifndef VTSPEECH_COMMON_FFTW_GUARD_H_
#define VTSPEECH_COMMON_FFTW_GUARD_H_

#include <mutex>

namespace vts {

// FFTW's planner mutates global state; every plan create/destroy must hold
// this one program-wide lock. Executing a plan is thread-safe without it.
inline std::mutex& FftwPlannerMutex() {
  static std::mutex m;
  return m;
}

}  // namespace vts

#endif  // VTSPEECH_COMMON_FFTW_GUARD_H_
