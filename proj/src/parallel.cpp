#include "robsub/parallel.hpp"

#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace robsub {

namespace {

void evaluate_gains_serial(const GainCursor& cursor, std::span<const Element> candidates,
                           std::span<double> out) {
  for (std::size_t j = 0; j < candidates.size(); ++j) out[j] = cursor.gain(candidates[j]);
}

void evaluate_gains_parallel(const GainCursor& cursor, std::span<const Element> candidates,
                             std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(candidates.size());
  // Exceptions may not leave an OpenMP region; the first one is rethrown after it.
  std::exception_ptr error;
  std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic, 4) if (n >= 32)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    try {
      out[static_cast<std::size_t>(j)] = cursor.gain(candidates[static_cast<std::size_t>(j)]);
    } catch (...) {
      const std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

void evaluate_gains(const GainCursor& cursor, std::span<const Element> candidates,
                    std::span<double> out, Execution exec) {
  if (exec == Execution::kParallel) {
    evaluate_gains_parallel(cursor, candidates, out);
  } else {
    evaluate_gains_serial(cursor, candidates, out);
  }
}

std::size_t argmax_gain(std::span<const Element> candidates, std::span<const double> gains) {
  std::size_t best = candidates.size();
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (best == candidates.size() || gains[j] > gains[best] ||
        (gains[j] == gains[best] && candidates[j] < candidates[best])) {
      best = j;
    }
  }
  return best;
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace robsub
