#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "robsub/satsim.hpp"
#include "robsub/simplex.hpp"

// Independent reference computations used by the property battery and the
// test suites. None of these reuse the closed forms they are checked against.
namespace robsub::oracles {

// min over the grid {P : P_i = k_i * step, sum k_i = 1/step} of
// sum_i P_i f_i + lambda KL(P || Q). Returns the minimum and the argmin.
struct GridMinimum {
  double value = 0.0;
  std::vector<double> argmin;
};
GridMinimum simplex_grid_minimum(std::span<const double> f, std::span<const double> q, double lambda,
                                 double step);

// Grid search followed by pairwise mass-exchange descent down to 1e-13.
GridMinimum refined_simplex_minimum(std::span<const double> f, std::span<const double> q, double lambda,
                                    double coarse_step);

// Linear Kalman filter with identity dynamics and stacked direct measurements.
satsim::FilterState kalman_identity_step(const satsim::FilterState& state, const satsim::Mat3& process_noise,
                                         std::span<const satsim::Vec3> measurements,
                                         const satsim::Mat3& measurement_noise);

}  // namespace robsub::oracles
