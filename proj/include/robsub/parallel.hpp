#pragma once

#include <cstddef>
#include <span>

#include "robsub/objective.hpp"

namespace robsub {

// Selects between the OpenMP kernels and their serial reference versions.
// Both produce bit-identical results; the serial path is kept for testing.
enum class Execution { kSerial, kParallel };

// out[j] = cursor.gain(candidates[j]).
void evaluate_gains(const GainCursor& cursor, std::span<const Element> candidates,
                    std::span<double> out, Execution exec);

// Index into candidates of the largest gain; ties go to the smallest element.
// Returns candidates.size() when empty.
std::size_t argmax_gain(std::span<const Element> candidates, std::span<const double> gains);

// Number of OpenMP threads available (1 without OpenMP).
int max_threads();

}  // namespace robsub
