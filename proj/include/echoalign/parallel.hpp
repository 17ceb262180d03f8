#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace echoalign {

/// Worker count for parallel maps: the value set by set_thread_count() if
/// nonzero, else ECHOALIGN_THREADS if set and nonzero, else the hardware
/// concurrency.
std::size_t thread_count();

/// Overrides the worker count for this process; 0 restores env/auto.
void set_thread_count(std::size_t n);

/// Calls fn(i) for i in [0, n) over contiguous chunks. fn must only write
/// to slot i of its outputs. If any call throws, the exception from the
/// lowest failing index is rethrown after all workers join.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> failures(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    threads.emplace_back([&, w, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

}  // namespace echoalign
