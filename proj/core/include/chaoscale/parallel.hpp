#pragma once

#include <cstddef>
#include <functional>

namespace chaoscale {

inline constexpr const char* kThreadsEnvVar = "CHAOSCALE_THREADS";

/// requested > 0 wins; otherwise CHAOSCALE_THREADS; otherwise hardware concurrency.
unsigned resolve_threads(unsigned requested = 0);

/// Calls body(i) for i in [0, count) on up to `threads` workers using static
/// contiguous chunks. If any call throws, the exception from the lowest index
/// is rethrown after all workers finish.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace chaoscale
