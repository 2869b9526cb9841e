#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "robsub/simplex.hpp"
#include "robsub/subset.hpp"

namespace robsub {

// Incremental view of a set function anchored at a growing selection S.
//
// gain() is const and must be safe to call concurrently from several threads;
// add() is not. A cursor borrows the function that created it and must not
// outlive it.
class GainCursor {
 public:
  explicit GainCursor(std::size_t ground_size) : selection_(ground_size) {}
  virtual ~GainCursor() = default;
  GainCursor(const GainCursor&) = delete;
  GainCursor& operator=(const GainCursor&) = delete;

  virtual double value() const = 0;
  // f(S + e) - f(S) for e not in S.
  virtual double gain(Element e) const = 0;

  void add(Element e);
  const Subset& selection() const { return selection_; }

 protected:
  virtual void on_add(Element e) = 0;

 private:
  Subset selection_;
};

// Set function over the ground set {0, ..., ground_size()-1}.
class SetFunction {
 public:
  virtual ~SetFunction() = default;
  virtual std::size_t ground_size() const = 0;
  virtual double evaluate(const Subset& s) const = 0;
  // Default cursor re-evaluates f(S + e) from scratch.
  virtual std::unique_ptr<GainCursor> cursor() const;

  double operator()(const Subset& s) const { return evaluate(s); }
};

using SetFunctionPtr = std::shared_ptr<const SetFunction>;

// f(S + e) - f(S). Throws ContractError when e is already in S.
double marginal_gain(const SetFunction& f, Element e, const Subset& s);

// --- Concrete oracles -------------------------------------------------------

// f(S) = sum of weights of S.
class ModularFunction : public SetFunction {
 public:
  explicit ModularFunction(std::vector<double> weights) : weights_(std::move(weights)) {}
  std::size_t ground_size() const override { return weights_.size(); }
  double evaluate(const Subset& s) const override;
  std::unique_ptr<GainCursor> cursor() const override;
  double weight(Element e) const { return weights_[e]; }

 private:
  std::vector<double> weights_;
};

// Weighted coverage: element e covers items covers[e]; f(S) = total weight of
// items covered by at least one member of S.
class CoverageFunction : public SetFunction {
 public:
  CoverageFunction(std::vector<std::vector<std::size_t>> covers, std::vector<double> item_weights);
  std::size_t ground_size() const override { return covers_.size(); }
  double evaluate(const Subset& s) const override;
  std::unique_ptr<GainCursor> cursor() const override;

  const std::vector<std::size_t>& covers(Element e) const { return covers_[e]; }
  double item_weight(std::size_t item) const { return item_weights_[item]; }
  std::size_t item_count() const { return item_weights_.size(); }

 private:
  std::vector<std::vector<std::size_t>> covers_;
  std::vector<double> item_weights_;
};

// Wraps an arbitrary callable; convenient for tests and ad hoc objectives.
class FunctionOracle : public SetFunction {
 public:
  FunctionOracle(std::size_t ground_size, std::function<double(const Subset&)> fn)
      : ground_size_(ground_size), fn_(std::move(fn)) {}
  std::size_t ground_size() const override { return ground_size_; }
  double evaluate(const Subset& s) const override { return fn_(s); }

 private:
  std::size_t ground_size_;
  std::function<double(const Subset&)> fn_;
};

// f(S) / f(N). Cursors delegate to the inner oracle's cursor.
class NormalizedFunction : public SetFunction {
 public:
  explicit NormalizedFunction(SetFunctionPtr inner);
  std::size_t ground_size() const override { return inner_->ground_size(); }
  double evaluate(const Subset& s) const override { return inner_->evaluate(s) / full_value_; }
  std::unique_ptr<GainCursor> cursor() const override;
  double full_value() const { return full_value_; }

 private:
  SetFunctionPtr inner_;
  double full_value_;
};

// Throws DomainError when f(N) <= 0.
SetFunctionPtr normalize_task(SetFunctionPtr f);

// Memoizes evaluations keyed by subset. Thread-safe; results never depend on hits.
class MemoizedFunction : public SetFunction {
 public:
  explicit MemoizedFunction(SetFunctionPtr inner) : inner_(std::move(inner)) {}
  std::size_t ground_size() const override { return inner_->ground_size(); }
  double evaluate(const Subset& s) const override;
  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }

 private:
  SetFunctionPtr inner_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<Subset, double, SubsetHash> cache_;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> misses_{0};
};

// --- Task families ----------------------------------------------------------

class FamilyCursor;

// n >= 1 oracles over a shared ground set.
class TaskFamily {
 public:
  explicit TaskFamily(std::vector<SetFunctionPtr> tasks);

  std::size_t size() const { return tasks_.size(); }
  std::size_t ground_size() const { return ground_size_; }
  const SetFunction& task(std::size_t i) const { return *tasks_[i]; }
  const SetFunctionPtr& task_ptr(std::size_t i) const { return tasks_[i]; }

  TaskValues values(const Subset& s) const;
  FamilyCursor cursor() const;

 private:
  std::vector<SetFunctionPtr> tasks_;
  std::size_t ground_size_;
};

// Per-task cursors advanced in lockstep.
class FamilyCursor {
 public:
  explicit FamilyCursor(const TaskFamily& family);

  std::span<const double> values() const { return values_; }
  // Task values at S + e, written to out (size n). Thread-safe.
  void peek(Element e, std::span<double> out) const;
  void add(Element e);
  const Subset& selection() const { return selection_; }
  std::size_t size() const { return cursors_.size(); }

 private:
  std::vector<std::unique_ptr<GainCursor>> cursors_;
  TaskValues values_;
  Subset selection_;
};

// --- Aggregates -------------------------------------------------------------

enum class AggregateKind { kWeightedAverage, kWorstCase, kShiftedMin, kKlRobust };

struct AggregateMode {
  AggregateKind kind = AggregateKind::kWeightedAverage;
  double lambda = 0.0;

  static AggregateMode weighted_average() { return {AggregateKind::kWeightedAverage, 0.0}; }
  static AggregateMode worst_case() { return {AggregateKind::kWorstCase, 0.0}; }
  static AggregateMode shifted_min(double lambda) { return {AggregateKind::kShiftedMin, lambda}; }
  static AggregateMode kl_robust(double lambda) { return {AggregateKind::kKlRobust, lambda}; }
};

// Scalar aggregate of a task-value vector:
//   weighted average  sum_i Q_i f_i
//   worst case        min_i f_i
//   shifted min       min_i (f_i - lambda Q_i)
//   KL robust         G = -lambda log sum_i Q_i exp(-f_i / lambda)
double aggregate(std::span<const double> values, const SimplexDistribution& q,
                 const AggregateMode& mode);

double aggregate_value(const TaskFamily& family, const SimplexDistribution& q,
                       const AggregateMode& mode, const Subset& s);

// The aggregate as a set function in its own right.
class AggregateObjective : public SetFunction {
 public:
  AggregateObjective(std::shared_ptr<const TaskFamily> family, SimplexDistribution q,
                     AggregateMode mode);
  std::size_t ground_size() const override { return family_->ground_size(); }
  double evaluate(const Subset& s) const override;
  std::unique_ptr<GainCursor> cursor() const override;

  const TaskFamily& family() const { return *family_; }
  const SimplexDistribution& reference() const { return q_; }
  const AggregateMode& mode() const { return mode_; }
  double aggregate_values(std::span<const double> v) const { return aggregate(v, q_, mode_); }

 private:
  std::shared_ptr<const TaskFamily> family_;
  SimplexDistribution q_;
  AggregateMode mode_;
};

// h(S) = sum_i Q_i (1 - exp(-f_i(S) / lambda)).
double surrogate_h(std::span<const double> values, const SimplexDistribution& q, double lambda);
double surrogate_h(const TaskFamily& family, const SimplexDistribution& q, double lambda,
                   const Subset& s);

// g(x) = -lambda log(1 - x) on [0, 1).
double link_g(double x, double lambda);

class SurrogateObjective : public SetFunction {
 public:
  SurrogateObjective(std::shared_ptr<const TaskFamily> family, SimplexDistribution q,
                     double lambda);
  std::size_t ground_size() const override { return family_->ground_size(); }
  double evaluate(const Subset& s) const override;
  std::unique_ptr<GainCursor> cursor() const override;

 private:
  std::shared_ptr<const TaskFamily> family_;
  SimplexDistribution q_;
  double lambda_;
};

// --- Weak-submodularity constant -------------------------------------------

struct WscEstimate {
  double value = 0.0;   // largest finite ratio seen (0 when no ratio was defined)
  bool infinite = false;
  std::size_t ratios = 0;  // well-defined ratios inspected
  std::size_t skipped = 0;  // 0/0 triples
};

// Exact max over S <= T < N, e not in T of gain(e|T) / gain(e|S). Needs |N| <= 14.
// Throws ContractError on a negative marginal.
WscEstimate wsc_estimate(const SetFunction& f);

// Lower bound from `samples` random triples.
WscEstimate wsc_estimate_sampled(const SetFunction& f, std::size_t samples, std::uint64_t seed);

}  // namespace robsub
