// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef LATENTREC_COMMON_PARALLEL_HPP_
#define LATENTREC_COMMON_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace latentrec {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Callers write
// results into slot i and reduce afterwards in index order, so the outcome
// does not depend on the thread count.
inline void parallel_for(int n, int threads,
                         const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = std::min(threads, n);
  for (int t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace latentrec

#endif  // LATENTREC_COMMON_PARALLEL_HPP_
