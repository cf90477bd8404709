#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace tcv {

// Execution policy for the data-parallel loops (splits, replications, trees,
// bandwidth grids). The serial path is the reference implementation; the
// parallel path must produce bit-identical results.
enum class Exec { serial, parallel };

void set_thread_count(int threads);
int thread_count();

namespace detail {
void rethrow_first(std::vector<std::exception_ptr>& errors);
}

// Runs body(i) for i in [0, n). Every iteration owns its output slot, so the
// result never depends on scheduling. If iterations throw, the exception from
// the lowest index is rethrown after the loop completes.
template <class Body>
void parallel_for(Exec exec, std::ptrdiff_t n, Body&& body) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n > 0 ? n : 0));
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
        break;
      }
    }
  }
  detail::rethrow_first(errors);
}

}  // namespace tcv
