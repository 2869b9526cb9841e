#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

// Property battery run by `robust-submod verify` and reused by the acceptance
// binary. Each check compares library results against independent oracles.
namespace robsub::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// G(S) against a brute-force minimization of the primal inner problem.
CheckResult check_dual_equivalence(std::size_t instances, std::uint64_t seed);
// min f <= G <= sum Q f, plus both lambda limits.
CheckResult check_sandwich_bounds(std::size_t instances, std::uint64_t seed);
// G = g(h) to 1e-12 on `pairs` draws; `triples` submodularity checks on h.
CheckResult check_decomposition(std::size_t pairs, std::size_t triples, std::uint64_t seed);
// Stochastic greedy on h versus the brute-force optimum (|N| = 12, K = 3).
CheckResult check_stochastic_guarantee(std::size_t seeds, std::uint64_t seed);
// Full-sample stochastic greedy and lazy greedy replay greedy exactly.
CheckResult check_greedy_degeneracy(std::size_t instances, std::uint64_t seed);
// Exhaustive WSC of G is finite; that of h is at most 1.
CheckResult check_wsc_finite(std::size_t instances, std::uint64_t seed);
// Exhaustive submodularity of facility, coverage and Fisher tasks.
CheckResult check_task_submodularity(std::size_t instances, std::uint64_t seed);
// Step-halving error ratio of the Lorenz-63 integrator.
CheckResult check_rk4_order();
// UKF with identity dynamics against the closed-form Kalman recursion.
CheckResult check_ukf_vs_kalman(std::size_t trials, std::uint64_t seed);
// Single-satellite grid coverage against the spherical-cap area.
CheckResult check_coverage_cap();

struct BatteryOptions {
  bool quick = false;
  std::uint64_t seed = 20240601;
};

std::vector<CheckResult> run_battery(const BatteryOptions& options);

}  // namespace robsub::verify
