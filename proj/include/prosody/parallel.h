// include/prosody/parallel.h

// Copyright 2026  The prosody-mdn Authors
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

#ifndef PROSODY_PARALLEL_H_
#define PROSODY_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace prosody {

/// Calls fn(i) for i in [0, n) on up to `threads` workers. Work is split into
/// contiguous blocks; callers that need deterministic results write into
/// per-index slots and reduce afterwards in index order. The first exception
/// thrown by any worker is rethrown on the calling thread.
void ParallelFor(std::size_t n, std::size_t threads,
                 const std::function<void(std::size_t)> &fn);

/// --threads value, else PROSODY_MDN_THREADS, else the hardware count.
std::size_t ResolveThreads(std::size_t requested);

}  // namespace prosody

#endif  // PROSODY_PARALLEL_H_
