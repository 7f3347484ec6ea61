// Copyright 2026 The LGSQE Authors
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

#pragma once

#include <cstddef>
#include <functional>

namespace lgsqe {

/// Process-wide worker count for data-parallel loops. 0 means hardware
/// concurrency. Results never depend on this value.
void set_num_threads(std::size_t threads);
std::size_t num_threads();

/// Calls body(begin, end) over contiguous chunks of [0, n). Each index is
/// visited exactly once; callers write results into per-index slots so the
/// outcome is independent of scheduling. Exceptions are rethrown on the
/// calling thread.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace lgsqe
