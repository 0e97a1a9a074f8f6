// Copyright (C) 2026 The TAG Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace tag {

/// Runs fn(i) for i in [0, n) on at most `max_workers` threads. Returns one
/// exception_ptr per index (null on success); nothing is rethrown, so callers
/// decide how partial failure is handled. Results must be written by index
/// to keep output order independent of scheduling.
template <typename Fn>
std::vector<std::exception_ptr> parallel_for(std::size_t n, std::size_t max_workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers = std::min(std::max<std::size_t>(max_workers, 1), n);
  auto run_one = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
    return errors;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) run_one(i);
    });
  for (auto& t : pool) t.join();
  return errors;
}

/// Rethrows the first (lowest-index) captured exception, if any.
inline void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace tag
