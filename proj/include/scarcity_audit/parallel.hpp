#pragma once

#include <cstddef>
#include <functional>

namespace scarcity_audit::detail {

// Worker-thread count. SCARCITY_AUDIT_THREADS caps it; 0 or unset = auto.
std::size_t thread_budget();

// Runs chunk(begin, end) over a partition of [0, n). Chunks must write to
// disjoint slots; the partitioning affects scheduling only, never values.
void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& chunk);

}  // namespace scarcity_audit::detail
