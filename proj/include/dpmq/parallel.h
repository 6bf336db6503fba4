//
// Copyright 2026 The dpmq Authors
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

#ifndef DPMQ_PARALLEL_H_
#define DPMQ_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace dpmq {

// Worker count: DPMQ_THREADS when set to a positive integer, otherwise the
// hardware concurrency (at least 1).
int DefaultThreadCount();

// Runs body(k) for k in [0, count) on up to `threads` workers. Indices are
// handed out dynamically; callers write results into per-index slots so the
// outcome does not depend on scheduling.
void ParallelFor(size_t count, int threads,
                 const std::function<void(size_t)>& body);

}  // namespace dpmq

#endif  // DPMQ_PARALLEL_H_
