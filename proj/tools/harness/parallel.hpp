#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <vector>

namespace fracns::harness {

/// Worker count from FRACNS_WORKERS (positive integer), else the hardware concurrency.
/// Throws ConfigError for a malformed value.
std::size_t worker_count();

/// Evaluates f(0..n-1) on up to `workers` threads. Results land in index order, so
/// any reduction over them is independent of scheduling. If several calls throw,
/// the exception of the lowest index is rethrown after all threads finish.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, std::size_t workers, F&& f) {
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(f(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), n);
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace fracns::harness
