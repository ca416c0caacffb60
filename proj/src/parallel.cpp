#include "scarcity_audit/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "scarcity_audit/errors.hpp"

namespace scarcity_audit::detail {

std::size_t thread_budget() {
  if (const char* env = std::getenv("SCARCITY_AUDIT_THREADS");
      env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long value = std::strtoul(env, &end, 10);
    if (end == nullptr || *end != '\0') {
      throw ValidationError("SCARCITY_AUDIT_THREADS must be a non-negative integer");
    }
    if (value > 0) return static_cast<std::size_t>(value);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& chunk) {
  if (n == 0) return;
  const std::size_t workers = std::min(thread_budget(), n);
  if (workers <= 1) {
    chunk(0, n);
    return;
  }
  const std::size_t stride = (n + workers - 1) / workers;
  std::mutex failure_mutex;
  std::exception_ptr failure;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * stride;
    const std::size_t end = std::min(begin + stride, n);
    if (begin >= end) break;
    threads.emplace_back([&, begin, end] {
      try {
        chunk(begin, end);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (std::thread& thread : threads) thread.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace scarcity_audit::detail
