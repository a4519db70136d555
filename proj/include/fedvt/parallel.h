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

#ifndef FEDVT_PARALLEL_H_
#define FEDVT_PARALLEL_H_

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace fedvt {

// Runs fn(i) once for every i in [0, count) on up to `workers` threads
// (0 picks hardware_concurrency). Index assignment is static, so results
// written into per-index slots do not depend on the worker count.
template <typename Fn>
void ParallelFor(int count, int workers, Fn&& fn) {
  int n_workers =
      workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  n_workers = std::clamp(n_workers, 1, std::max(1, count));
  if (n_workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(n_workers);
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < count; i += n_workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace fedvt

#endif  // FEDVT_PARALLEL_H_
