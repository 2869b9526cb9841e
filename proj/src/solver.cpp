#include "robsub/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>

#include "robsub/errors.hpp"
#include "robsub/random.hpp"

namespace robsub {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_cardinality(const SetFunction& f, std::size_t k, const char* what) {
  if (k > f.ground_size()) {
    throw DomainError(std::string(what) + ": cardinality bound exceeds ground set size");
  }
}

}  // namespace

SolverResult greedy(const SetFunction& f, std::size_t k, Execution exec) {
  require_cardinality(f, k, "greedy");
  const auto start = Clock::now();
  SolverResult result;
  auto cursor = f.cursor();
  std::vector<double> gains;
  for (std::size_t round = 0; round < k; ++round) {
    const auto candidates = cursor->selection().complement_elements();
    gains.resize(candidates.size());
    evaluate_gains(*cursor, candidates, gains, exec);
    result.evaluations += candidates.size();
    const std::size_t best = argmax_gain(candidates, gains);
    if (best == candidates.size() || !(gains[best] > 0.0)) break;
    cursor->add(candidates[best]);
    result.order.push_back(candidates[best]);
  }
  result.selection = cursor->selection();
  result.objective_value = cursor->value();
  result.wall_time = seconds_since(start);
  return result;
}

SolverResult lazy_greedy(const SetFunction& f, std::size_t k) {
  require_cardinality(f, k, "lazy_greedy");
  const auto start = Clock::now();
  SolverResult result;
  auto cursor = f.cursor();

  struct Entry {
    double bound;
    Element element;
    std::size_t round;  // round in which bound was computed
  };
  // Largest bound first; among equal bounds the smaller element.
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.element > b.element;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> heap(worse);
  for (Element e = 0; e < f.ground_size(); ++e) {
    heap.push({cursor->gain(e), e, 0});
    ++result.evaluations;
  }
  for (std::size_t round = 0; round < k && !heap.empty(); ++round) {
    while (true) {
      Entry top = heap.top();
      heap.pop();
      if (top.round == round) {
        if (top.bound > 0.0) {
          cursor->add(top.element);
          result.order.push_back(top.element);
        } else {
          heap = {};  // nothing left with positive gain
        }
        break;
      }
      top.bound = cursor->gain(top.element);
      top.round = round;
      ++result.evaluations;
      heap.push(top);
    }
    if (result.order.size() != round + 1) break;
  }
  result.selection = cursor->selection();
  result.objective_value = cursor->value();
  result.wall_time = seconds_since(start);
  return result;
}

std::size_t stochastic_sample_size(std::size_t ground_size, std::size_t k, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("stochastic greedy: epsilon outside (0,1)");
  if (k == 0) return 0;
  const double r = static_cast<double>(ground_size) / static_cast<double>(k) * std::log(1.0 / epsilon);
  return static_cast<std::size_t>(std::ceil(r));
}

SolverResult stochastic_greedy(const SetFunction& f, std::size_t k,
                               const StochasticGreedyOptions& options) {
  require_cardinality(f, k, "stochastic_greedy");
  const auto start = Clock::now();
  const std::size_t r = options.sample_size.value_or(
      stochastic_sample_size(f.ground_size(), k, options.epsilon));
  if (r == 0 && k > 0) throw DomainError("stochastic_greedy: sample size must be positive");

  SolverResult result;
  result.seed = options.seed;
  Rng rng(options.seed);
  auto cursor = f.cursor();
  std::vector<double> gains;
  for (std::size_t round = 0; round < k; ++round) {
    auto pool = cursor->selection().complement_elements();
    const bool full = r >= pool.size();
    if (!full) {
      // Partial Fisher-Yates: the first r entries become a uniform sample.
      for (std::size_t j = 0; j < r; ++j) {
        const std::size_t pick = j + uniform_index(rng, pool.size() - j);
        std::swap(pool[j], pool[pick]);
      }
      pool.resize(r);
    }
    gains.resize(pool.size());
    evaluate_gains(*cursor, pool, gains, options.exec);
    result.evaluations += pool.size();
    const std::size_t best = argmax_gain(pool, gains);
    if (best == pool.size()) break;
    if (full && !(gains[best] > 0.0)) break;
    cursor->add(pool[best]);
    result.order.push_back(pool[best]);
  }
  result.selection = cursor->selection();
  result.objective_value = cursor->value();
  result.wall_time = seconds_since(start);
  return result;
}

SolverResult brute_force(const SetFunction& f, std::size_t k, std::size_t max_combinations) {
  require_cardinality(f, k, "brute_force");
  const std::size_t n = f.ground_size();
  // C(n, k) with early exit once the budget is exceeded.
  double combos = 1.0;
  for (std::size_t j = 0; j < k; ++j) {
    combos = combos * static_cast<double>(n - j) / static_cast<double>(j + 1);
  }
  if (combos > static_cast<double>(max_combinations) + 0.5) {
    throw DomainError("brute_force: enumeration budget exceeded");
  }
  const auto start = Clock::now();
  SolverResult result;
  std::vector<Element> idx(k);
  for (std::size_t j = 0; j < k; ++j) idx[j] = j;
  double best = -std::numeric_limits<double>::infinity();
  // Lexicographic order over index tuples; strict improvement keeps the first maximizer.
  while (true) {
    const double v = f.evaluate(Subset::of(n, idx));
    ++result.evaluations;
    if (v > best) {
      best = v;
      result.order = idx;
    }
    if (k == 0) break;
    std::size_t pos = k;
    while (pos > 0 && idx[pos - 1] == n - k + (pos - 1)) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  result.selection = Subset::of(n, result.order);
  result.objective_value = best;
  result.wall_time = seconds_since(start);
  return result;
}

TruncatedMean::TruncatedMean(std::shared_ptr<const TaskFamily> family, std::vector<double> shifts,
                             double level)
    : family_(std::move(family)), shifts_(std::move(shifts)), level_(level) {
  if (shifts_.size() != family_->size()) throw DomainError("TruncatedMean: dimension mismatch");
}

double TruncatedMean::reduce(std::span<const double> values) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += std::min(values[i] - shifts_[i], level_);
  return sum / static_cast<double>(values.size());
}

double TruncatedMean::evaluate(const Subset& s) const { return reduce(family_->values(s)); }

namespace {

class TruncatedCursor final : public GainCursor {
 public:
  explicit TruncatedCursor(const TaskFamily& family, const TruncatedMean& owner)
      : GainCursor(family.ground_size()), family_(family), owner_(owner) {
    value_ = owner_.reduce(family_.values());
  }
  double value() const override { return value_; }
  double gain(Element e) const override {
    // Per call: task oracles may themselves be aggregates with their own cursors.
    std::vector<double> scratch(family_.size());
    family_.peek(e, scratch);
    return owner_.reduce(scratch) - value_;
  }

 protected:
  void on_add(Element e) override {
    family_.add(e);
    value_ = owner_.reduce(family_.values());
  }

 private:
  FamilyCursor family_;
  const TruncatedMean& owner_;
  double value_ = 0.0;
};

}  // namespace

std::unique_ptr<GainCursor> TruncatedMean::cursor() const {
  return std::make_unique<TruncatedCursor>(*family_, *this);
}

PartialCover greedy_partial_cover(const SetFunction& truncated, double level,
                                  std::optional<std::size_t> max_size, Execution exec) {
  constexpr double kSaturationTol = 1e-9;
  PartialCover cover;
  auto cursor = truncated.cursor();
  std::vector<double> gains;
  while (true) {
    cover.value = cursor->value();
    if (cover.value >= level - kSaturationTol) {
      cover.saturated = true;
      break;
    }
    if (max_size && cursor->selection().size() > *max_size) break;
    const auto candidates = cursor->selection().complement_elements();
    if (candidates.empty()) break;
    gains.resize(candidates.size());
    evaluate_gains(*cursor, candidates, gains, exec);
    cover.evaluations += candidates.size();
    const std::size_t best = argmax_gain(candidates, gains);
    if (!(gains[best] > 0.0)) break;
    cursor->add(candidates[best]);
    cover.order.push_back(candidates[best]);
  }
  cover.selection = cursor->selection();
  return cover;
}

SolverResult saturate_with_preference(std::shared_ptr<const TaskFamily> family, std::size_t k,
                                      const SaturationConfig& config,
                                      std::vector<BisectionStep>* trace) {
  const std::size_t n = family->size();
  const std::size_t ground = family->ground_size();
  if (k > ground) throw DomainError("saturate_with_preference: cardinality exceeds ground set");
  if (!(config.lambda >= 0.0)) throw DomainError("saturate_with_preference: lambda must be >= 0");
  if (!(config.alpha >= 1.0)) throw DomainError("saturate_with_preference: alpha must be >= 1");
  const SimplexDistribution q = config.reference.value_or(SimplexDistribution::uniform(n));
  if (q.size() != n) throw DomainError("saturate_with_preference: reference dimension mismatch");

  const auto start = Clock::now();
  std::vector<double> shifts(n);
  for (std::size_t i = 0; i < n; ++i) shifts[i] = config.lambda * q[i];
  auto shifted_min = [&](const TaskValues& v) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = std::min(m, v[i] - shifts[i]);
    return m;
  };

  SolverResult result;
  result.selection = Subset(ground);
  double upper = shifted_min(family->values(Subset::full(ground)));
  result.evaluations += 1;
  if (!(upper > 0.0)) {
    result.objective_value = 0.0;
    result.wall_time = seconds_since(start);
    return result;
  }
  double lower = std::min(0.0, shifted_min(family->values(Subset(ground))));
  result.evaluations += 1;
  const double floor = config.bisection_floor.value_or(1.0 / static_cast<double>(n));
  const auto budget = static_cast<std::size_t>(std::floor(config.alpha * static_cast<double>(k)));

  while (upper - lower >= floor) {
    const double level = 0.5 * (lower + upper);
    const TruncatedMean truncated(family, shifts, level);
    PartialCover cover = greedy_partial_cover(truncated, level, budget, config.exec);
    result.evaluations += cover.evaluations;
    const bool accepted = cover.saturated && cover.selection.size() <= budget;
    if (trace) {
      trace->push_back({lower, upper, level, cover.selection.size(), accepted, cover.value});
    }
    if (accepted) {
      lower = level;
      result.selection = std::move(cover.selection);
      result.order = std::move(cover.order);
    } else {
      upper = level;
    }
  }
  result.objective_value = shifted_min(family->values(result.selection));
  result.wall_time = seconds_since(start);
  return result;
}

std::vector<OnlineStep> online_tr_driver(std::span<const SetFunctionPtr> stream,
                                         const OnlineConfig& config) {
  if (config.window == 0) throw DomainError("online_tr_driver: window must be positive");
  if (stream.size() < config.window) throw DomainError("online_tr_driver: stream shorter than window");
  const std::size_t ground = stream.front()->ground_size();
  const SimplexDistribution gamma_ref = geometric_reference(config.gamma, config.window);

  std::vector<OnlineStep> steps;
  steps.reserve(stream.size());
  Subset played(ground);
  Subset seen(ground);
  for (std::size_t t = 0; t < stream.size(); ++t) {
    OnlineStep step;
    step.step = t;
    // Every solve shares one seed, so an unchanged window reproduces its set.
    const StochasticGreedyOptions& opts = config.sampling;
    if (t == 0) {
      const auto warm = stochastic_greedy(*stream[0], config.k, opts);
      played = warm.selection;
      step.solve_time += warm.wall_time;
    }
    step.played = played;
    step.utility = stream[t]->evaluate(played);
    played.for_each([&](Element e) { seen.insert(e); });
    step.distinct = seen.size();

    // End of a window: solve for the next one.
    if ((t + 1) % config.window == 0) {
      std::vector<SetFunctionPtr> observed(stream.begin() + static_cast<std::ptrdiff_t>(t + 1 - config.window),
                                           stream.begin() + static_cast<std::ptrdiff_t>(t + 1));
      auto family = std::make_shared<const TaskFamily>(std::move(observed));
      const AggregateObjective robust(family, gamma_ref, AggregateMode::kl_robust(config.lambda));
      const auto next = stochastic_greedy(robust, config.k, opts);
      played = next.selection;
      step.solve_time += next.wall_time;
    }
    steps.push_back(std::move(step));
  }
  return steps;
}

std::vector<OnlineStep> online_per_step(std::span<const SetFunctionPtr> stream, std::size_t k,
                                        const StochasticGreedyOptions& sampling) {
  std::vector<OnlineStep> steps;
  steps.reserve(stream.size());
  if (stream.empty()) return steps;
  Subset seen(stream.front()->ground_size());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    StochasticGreedyOptions opts = sampling;
    opts.seed = mix_seed(sampling.seed, t);
    const auto res = stochastic_greedy(*stream[t], k, opts);
    OnlineStep step;
    step.step = t;
    step.played = res.selection;
    step.utility = stream[t]->evaluate(res.selection);
    res.selection.for_each([&](Element e) { seen.insert(e); });
    step.distinct = seen.size();
    step.solve_time = res.wall_time;
    steps.push_back(std::move(step));
  }
  return steps;
}

}  // namespace robsub
