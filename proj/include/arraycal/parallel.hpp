#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace arraycal {

/// Number of worker threads used by parallel_for. Defaults to 1; the CLI
/// sets it from --parallel or ARRAYCAL_PARALLELISM.
int parallelism();
void set_parallelism(int threads);

/// Runs body(i) for i in [0, count). Iterations must be independent; the
/// first exception thrown by any iteration is rethrown after the loop.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic) num_threads(parallelism())
  for (long long i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace arraycal
