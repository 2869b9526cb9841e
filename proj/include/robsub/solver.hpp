#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "robsub/objective.hpp"
#include "robsub/parallel.hpp"
#include "robsub/simplex.hpp"

namespace robsub {

struct SolverResult {
  Subset selection;
  std::vector<Element> order;  // elements in the order they were added
  double objective_value = 0.0;
  std::size_t evaluations = 0;  // marginal-gain or set evaluations
  double wall_time = 0.0;       // seconds
  std::uint64_t seed = 0;
};

// K rounds of exact argmax over marginal gains (lowest index wins ties); stops
// early once no remaining element has a positive gain.
SolverResult greedy(const SetFunction& f, std::size_t k, Execution exec = Execution::kParallel);

// Greedy with stale upper bounds in a priority queue. Same selection as greedy()
// for submodular f; a heuristic otherwise.
SolverResult lazy_greedy(const SetFunction& f, std::size_t k);

struct StochasticGreedyOptions {
  double epsilon = 0.1;
  // Replaces ceil((|N|/K) log(1/epsilon)) when set.
  std::optional<std::size_t> sample_size;
  std::uint64_t seed = 0;
  Execution exec = Execution::kParallel;
};

std::size_t stochastic_sample_size(std::size_t ground_size, std::size_t k, double epsilon);

SolverResult stochastic_greedy(const SetFunction& f, std::size_t k,
                               const StochasticGreedyOptions& options);

// Exhaustive search over all K-subsets; lexicographically smallest maximizer.
SolverResult brute_force(const SetFunction& f, std::size_t k,
                         std::size_t max_combinations = 1'000'000);

// (1/n) sum_i min{f_i(X) - shift_i, level}.
class TruncatedMean : public SetFunction {
 public:
  TruncatedMean(std::shared_ptr<const TaskFamily> family, std::vector<double> shifts, double level);
  std::size_t ground_size() const override { return family_->ground_size(); }
  double evaluate(const Subset& s) const override;
  std::unique_ptr<GainCursor> cursor() const override;
  double level() const { return level_; }
  double reduce(std::span<const double> values) const;

 private:
  std::shared_ptr<const TaskFamily> family_;
  std::vector<double> shifts_;
  double level_;
};

struct PartialCover {
  Subset selection;
  std::vector<Element> order;
  double value = 0.0;
  bool saturated = false;
  std::size_t evaluations = 0;
};

// Greedily grows S until f(S) >= level - 1e-9, no positive gain remains, or
// S = N. With max_size set, also stops as soon as |S| exceeds it.
PartialCover greedy_partial_cover(const SetFunction& truncated, double level,
                                  std::optional<std::size_t> max_size = std::nullopt,
                                  Execution exec = Execution::kParallel);

struct SaturationConfig {
  double lambda = 0.0;
  std::optional<SimplexDistribution> reference;  // uniform when unset
  double alpha = 1.0;
  std::optional<double> bisection_floor;  // 1/n when unset
  Execution exec = Execution::kParallel;
};

struct BisectionStep {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.0;
  std::size_t cover_size = 0;
  bool accepted = false;
  double cover_value = 0.0;
};

// Saturate with Preference: bisection over the saturation level of the
// shifted objectives f_i - lambda Q_i. lambda = 0 is the plain saturation
// algorithm. objective_value holds min_i (f_i(S) - lambda Q_i).
SolverResult saturate_with_preference(std::shared_ptr<const TaskFamily> family, std::size_t k,
                                      const SaturationConfig& config,
                                      std::vector<BisectionStep>* trace = nullptr);

struct OnlineConfig {
  std::size_t window = 5;
  double gamma = 0.5;
  double lambda = 0.1;
  std::size_t k = 10;
  StochasticGreedyOptions sampling;
};

struct OnlineStep {
  std::size_t step = 0;
  Subset played;
  double utility = 0.0;
  std::size_t distinct = 0;   // |union of played sets so far|
  double solve_time = 0.0;    // seconds spent solving at this step
};

// Time-robust driver: observe t_w objectives, then play the KL-robust
// stochastic-greedy solution (reference = geometric weights) for the whole
// next window. The first window holds the solution of its first objective.
// Every solve uses sampling.seed.
std::vector<OnlineStep> online_tr_driver(std::span<const SetFunctionPtr> stream,
                                         const OnlineConfig& config);

// Baseline: solve every step independently with stochastic greedy, step t
// seeded with mix_seed(sampling.seed, t).
std::vector<OnlineStep> online_per_step(std::span<const SetFunctionPtr> stream, std::size_t k,
                                        const StochasticGreedyOptions& sampling);

}  // namespace robsub
