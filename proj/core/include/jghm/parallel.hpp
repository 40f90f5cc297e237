// Copyright 2026 The JGHM Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace jghm {

/// Process-wide worker count used by the Monte-Carlo evaluators. Results
/// never depend on it: work is split by index and merged in index order.
void set_thread_count(unsigned threads);
unsigned thread_count();

/// Runs body(i) for i in [0, n) over thread_count() workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Evaluates fn(i) for every index and returns the results in index order.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, Fn&& fn) {
  std::vector<T> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

}  // namespace jghm
