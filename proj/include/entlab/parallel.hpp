#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>

#include <omp.h>

namespace entlab {

/// Serial runs are the reference the OpenMP kernels are tested against;
/// every parallel kernel produces bit-identical results.
enum class Execution { serial, parallel };

/// Thread cap: ENTLAB_THREADS if set and positive, else the OpenMP default.
int max_threads();

/// Counter-based sub-seed (splitmix64 of master and stream index), so
/// repetition k draws the same numbers regardless of scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Calls body(i) for i in [0, n). Iterations must be independent. The first
/// exception thrown by any iteration is rethrown after the loop.
template <class Body>
void for_each_index(std::size_t n, Execution exec, Body&& body) {
  if (exec == Execution::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic) num_threads(max_threads())
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace entlab
