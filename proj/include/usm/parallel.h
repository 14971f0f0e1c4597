// Copyright (c) 2026 USM Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef USM_PARALLEL_H_
#define USM_PARALLEL_H_

#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace usm {

// Thread count resolution: explicit request wins, then the USM_THREADS
// environment variable, then whatever the hardware reports.
inline int ResolveThreadCount(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("USM_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(worker, begin, end) over `threads` contiguous chunks of [0, n).
// Chunk boundaries depend only on (n, threads), so reductions that combine
// per-worker results in worker order are deterministic for a fixed thread
// count. The first exception thrown by any worker is rethrown.
inline void ParallelFor(
    size_t n, int threads,
    const std::function<void(int worker, size_t begin, size_t end)>& fn) {
  if (n == 0) return;
  size_t num_workers = threads < 1 ? 1 : static_cast<size_t>(threads);
  if (num_workers > n) num_workers = n;
  if (num_workers == 1) {
    fn(0, 0, n);
    return;
  }
  size_t chunk = (n + num_workers - 1) / num_workers;
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(num_workers);
  for (size_t w = 1; w < num_workers; ++w) {
    size_t begin = w * chunk;
    size_t end = begin + chunk < n ? begin + chunk : n;
    if (begin >= end) break;
    pool.emplace_back([&, w, begin, end] {
      try {
        fn(static_cast<int>(w), begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  try {
    fn(0, 0, chunk < n ? chunk : n);
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace usm

#endif  // USM_PARALLEL_H_
