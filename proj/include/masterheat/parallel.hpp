#pragma once

#include <cstddef>
#include <functional>

namespace masterheat {

/// Worker count from MASTERHEAT_THREADS, else the hardware concurrency.
unsigned thread_count();

/// Runs body(i) for i in [0, count) on up to thread_count() threads.
/// Iterations must be independent; the first exception is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace masterheat
