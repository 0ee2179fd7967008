#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace qsm::experiments {

template <class T>
struct TaskOutcome {
  std::optional<T> value;
  std::string error;
  double seconds = 0.0;

  bool ok() const { return value.has_value(); }
};

inline unsigned resolve_threads(long requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  return std::max(1u, std::thread::hardware_concurrency());
}

// Evaluates f(0..n-1) on a worker pool.  Results are stored by index, so the
// output is independent of the worker count and scheduling.  Exceptions are
// captured per task.
template <class F>
auto parallel_map(std::size_t n, long threads, F&& f) -> std::vector<TaskOutcome<std::invoke_result_t<F, std::size_t>>> {
  using T = std::invoke_result_t<F, std::size_t>;
  std::vector<TaskOutcome<T>> out(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        out[i].value.emplace(f(i));
      } catch (const std::exception& e) {
        out[i].error = e.what();
      } catch (...) {
        out[i].error = "unknown exception";
      }
      out[i].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const unsigned workers = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace qsm::experiments
