#pragma once

// Replicate fan-out over std::thread. Results land in slot i for replicate i,
// so the output does not depend on the worker count.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <type_traits>
#include <vector>

#include "rwu/errors.hpp"

namespace rwu {

template <class F>
auto parallel_map(std::int64_t count, int workers, F&& f) -> std::vector<std::invoke_result_t<F&, std::int64_t>> {
  using R = std::invoke_result_t<F&, std::int64_t>;
  detail::require(count >= 0, "parallel_map: negative count");
  detail::require(workers >= 1, "workers must be >= 1");
  std::vector<R> out(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<std::int64_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        out[static_cast<std::size_t>(i)] = f(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int n = static_cast<int>(std::min<std::int64_t>(workers, std::max<std::int64_t>(count, 1)));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  // Lowest failing replicate wins, whatever the schedule was.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace rwu
