#include "robsub/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "robsub/errors.hpp"
#include "robsub/random.hpp"

namespace robsub {

void GainCursor::add(Element e) {
  if (selection_.contains(e)) throw ContractError("cursor: element already selected");
  on_add(e);
  selection_.insert(e);
}

namespace {

class EvaluatingCursor final : public GainCursor {
 public:
  explicit EvaluatingCursor(const SetFunction& f)
      : GainCursor(f.ground_size()), f_(f), value_(f.evaluate(Subset(f.ground_size()))) {}
  double value() const override { return value_; }
  double gain(Element e) const override { return f_.evaluate(selection().with(e)) - value_; }

 protected:
  void on_add(Element e) override { value_ = f_.evaluate(selection().with(e)); }

 private:
  const SetFunction& f_;
  double value_;
};

class ModularCursor final : public GainCursor {
 public:
  explicit ModularCursor(const ModularFunction& f) : GainCursor(f.ground_size()), f_(f) {}
  double value() const override { return value_; }
  double gain(Element e) const override { return f_.weight(e); }

 protected:
  void on_add(Element e) override { value_ += f_.weight(e); }

 private:
  const ModularFunction& f_;
  double value_ = 0.0;
};

class CoverageCursor final : public GainCursor {
 public:
  explicit CoverageCursor(const CoverageFunction& f)
      : GainCursor(f.ground_size()), f_(f), counts_(f.item_count(), 0) {}
  double value() const override { return value_; }
  double gain(Element e) const override {
    double g = 0.0;
    for (auto item : f_.covers(e)) {
      if (counts_[item] == 0) g += f_.item_weight(item);
    }
    return g;
  }

 protected:
  void on_add(Element e) override {
    value_ += gain(e);
    for (auto item : f_.covers(e)) ++counts_[item];
  }

 private:
  const CoverageFunction& f_;
  std::vector<int> counts_;
  double value_ = 0.0;
};

class ScaledCursor final : public GainCursor {
 public:
  ScaledCursor(std::unique_ptr<GainCursor> inner, double scale)
      : GainCursor(inner->selection().ground_size()), inner_(std::move(inner)), scale_(scale) {}
  double value() const override { return inner_->value() * scale_; }
  double gain(Element e) const override { return inner_->gain(e) * scale_; }

 protected:
  void on_add(Element e) override { inner_->add(e); }

 private:
  std::unique_ptr<GainCursor> inner_;
  double scale_;
};

// Cursor over any scalar function of the task-value vector.
template <class Reduce>
class ReducingCursor final : public GainCursor {
 public:
  ReducingCursor(const TaskFamily& family, Reduce reduce)
      : GainCursor(family.ground_size()), family_(family), reduce_(std::move(reduce)) {
    value_ = reduce_(family_.values());
  }
  double value() const override { return value_; }
  double gain(Element e) const override {
    // Per call: task oracles may themselves be aggregates with their own cursors.
    std::vector<double> scratch(family_.size());
    family_.peek(e, scratch);
    return reduce_(std::span<const double>(scratch)) - value_;
  }

 protected:
  void on_add(Element e) override {
    family_.add(e);
    value_ = reduce_(family_.values());
  }

 private:
  FamilyCursor family_;
  Reduce reduce_;
  double value_ = 0.0;
};

template <class Reduce>
std::unique_ptr<GainCursor> make_reducing_cursor(const TaskFamily& family, Reduce reduce) {
  return std::make_unique<ReducingCursor<Reduce>>(family, std::move(reduce));
}

void require_lambda(double lambda, const char* what) {
  if (!(lambda > 0.0)) throw DomainError(std::string(what) + ": lambda must be positive");
}

}  // namespace

std::unique_ptr<GainCursor> SetFunction::cursor() const {
  return std::make_unique<EvaluatingCursor>(*this);
}

double marginal_gain(const SetFunction& f, Element e, const Subset& s) {
  if (s.contains(e)) throw ContractError("marginal_gain: element already in the set");
  return f.evaluate(s.with(e)) - f.evaluate(s);
}

double ModularFunction::evaluate(const Subset& s) const {
  double v = 0.0;
  s.for_each([&](Element e) { v += weights_[e]; });
  return v;
}

std::unique_ptr<GainCursor> ModularFunction::cursor() const {
  return std::make_unique<ModularCursor>(*this);
}

CoverageFunction::CoverageFunction(std::vector<std::vector<std::size_t>> covers,
                                   std::vector<double> item_weights)
    : covers_(std::move(covers)), item_weights_(std::move(item_weights)) {
  for (const auto& c : covers_) {
    for (auto item : c) {
      if (item >= item_weights_.size()) throw DomainError("CoverageFunction: item out of range");
    }
  }
  for (double w : item_weights_) {
    if (!(w >= 0.0)) throw DomainError("CoverageFunction: negative item weight");
  }
}

double CoverageFunction::evaluate(const Subset& s) const {
  std::vector<char> hit(item_weights_.size(), 0);
  double v = 0.0;
  s.for_each([&](Element e) {
    for (auto item : covers_[e]) {
      if (!hit[item]) {
        hit[item] = 1;
        v += item_weights_[item];
      }
    }
  });
  return v;
}

std::unique_ptr<GainCursor> CoverageFunction::cursor() const {
  return std::make_unique<CoverageCursor>(*this);
}

NormalizedFunction::NormalizedFunction(SetFunctionPtr inner)
    : inner_(std::move(inner)), full_value_(inner_->evaluate(Subset::full(inner_->ground_size()))) {
  if (!(full_value_ > 0.0)) throw DomainError("normalize_task: f(N) must be positive");
}

std::unique_ptr<GainCursor> NormalizedFunction::cursor() const {
  return std::make_unique<ScaledCursor>(inner_->cursor(), 1.0 / full_value_);
}

SetFunctionPtr normalize_task(SetFunctionPtr f) {
  return std::make_shared<NormalizedFunction>(std::move(f));
}

double MemoizedFunction::evaluate(const Subset& s) const {
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(s); it != cache_.end()) {
      ++hits_;
      return it->second;
    }
  }
  ++misses_;
  const double v = inner_->evaluate(s);
  std::lock_guard lock(mutex_);
  cache_.emplace(s, v);
  return v;
}

TaskFamily::TaskFamily(std::vector<SetFunctionPtr> tasks) : tasks_(std::move(tasks)) {
  if (tasks_.empty()) throw DomainError("TaskFamily: needs at least one task");
  ground_size_ = tasks_.front()->ground_size();
  if (ground_size_ == 0) throw DomainError("TaskFamily: empty ground set");
  for (const auto& t : tasks_) {
    if (!t) throw DomainError("TaskFamily: null task");
    if (t->ground_size() != ground_size_) throw DomainError("TaskFamily: ground sets differ");
  }
}

TaskValues TaskFamily::values(const Subset& s) const {
  TaskValues v(tasks_.size());
  for (std::size_t i = 0; i < tasks_.size(); ++i) v[i] = tasks_[i]->evaluate(s);
  return v;
}

FamilyCursor TaskFamily::cursor() const { return FamilyCursor(*this); }

FamilyCursor::FamilyCursor(const TaskFamily& family) : selection_(family.ground_size()) {
  cursors_.reserve(family.size());
  values_.reserve(family.size());
  for (std::size_t i = 0; i < family.size(); ++i) {
    cursors_.push_back(family.task(i).cursor());
    values_.push_back(cursors_.back()->value());
  }
}

void FamilyCursor::peek(Element e, std::span<double> out) const {
  for (std::size_t i = 0; i < cursors_.size(); ++i) out[i] = values_[i] + cursors_[i]->gain(e);
}

void FamilyCursor::add(Element e) {
  if (selection_.contains(e)) throw ContractError("FamilyCursor: element already selected");
  for (std::size_t i = 0; i < cursors_.size(); ++i) {
    cursors_[i]->add(e);
    values_[i] = cursors_[i]->value();
  }
  selection_.insert(e);
}

double aggregate(std::span<const double> values, const SimplexDistribution& q,
                 const AggregateMode& mode) {
  if (values.size() != q.size()) throw DomainError("aggregate: dimension mismatch");
  const std::size_t n = values.size();
  switch (mode.kind) {
    case AggregateKind::kWeightedAverage: {
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += q[i] * values[i];
      return v;
    }
    case AggregateKind::kWorstCase:
      return *std::min_element(values.begin(), values.end());
    case AggregateKind::kShiftedMin: {
      require_lambda(mode.lambda, "aggregate");
      double v = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) v = std::min(v, values[i] - mode.lambda * q[i]);
      return v;
    }
    case AggregateKind::kKlRobust: {
      require_lambda(mode.lambda, "aggregate");
      // Log-sum-exp shifted by the smallest value carrying mass.
      double shift = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (q[i] > 0.0) shift = std::min(shift, values[i]);
      }
      // sum_i Q_i e^x_i = 1 + sum_i Q_i expm1(x_i); exact zero when all values tie.
      double excess = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (q[i] > 0.0) excess += q[i] * std::expm1(-(values[i] - shift) / mode.lambda);
      }
      return shift - mode.lambda * std::log1p(excess);
    }
  }
  return 0.0;
}

double aggregate_value(const TaskFamily& family, const SimplexDistribution& q,
                       const AggregateMode& mode, const Subset& s) {
  if (family.size() != q.size()) throw DomainError("aggregate_value: dimension mismatch");
  return aggregate(family.values(s), q, mode);
}

AggregateObjective::AggregateObjective(std::shared_ptr<const TaskFamily> family,
                                       SimplexDistribution q, AggregateMode mode)
    : family_(std::move(family)), q_(std::move(q)), mode_(mode) {
  if (family_->size() != q_.size()) throw DomainError("AggregateObjective: dimension mismatch");
  if (mode_.kind == AggregateKind::kShiftedMin || mode_.kind == AggregateKind::kKlRobust) {
    require_lambda(mode_.lambda, "AggregateObjective");
  }
}

double AggregateObjective::evaluate(const Subset& s) const {
  return aggregate(family_->values(s), q_, mode_);
}

std::unique_ptr<GainCursor> AggregateObjective::cursor() const {
  return make_reducing_cursor(*family_, [this](std::span<const double> v) {
    return aggregate(v, q_, mode_);
  });
}

double surrogate_h(std::span<const double> values, const SimplexDistribution& q, double lambda) {
  require_lambda(lambda, "surrogate_h");
  if (values.size() != q.size()) throw DomainError("surrogate_h: dimension mismatch");
  double h = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) h -= q[i] * std::expm1(-values[i] / lambda);
  return h;
}

double surrogate_h(const TaskFamily& family, const SimplexDistribution& q, double lambda,
                   const Subset& s) {
  return surrogate_h(family.values(s), q, lambda);
}

double link_g(double x, double lambda) {
  require_lambda(lambda, "link_g");
  if (!(x < 1.0)) throw DomainError("link_g: argument must be below 1");
  return -lambda * std::log1p(-x);
}

SurrogateObjective::SurrogateObjective(std::shared_ptr<const TaskFamily> family,
                                       SimplexDistribution q, double lambda)
    : family_(std::move(family)), q_(std::move(q)), lambda_(lambda) {
  require_lambda(lambda_, "SurrogateObjective");
  if (family_->size() != q_.size()) throw DomainError("SurrogateObjective: dimension mismatch");
}

double SurrogateObjective::evaluate(const Subset& s) const {
  return surrogate_h(family_->values(s), q_, lambda_);
}

std::unique_ptr<GainCursor> SurrogateObjective::cursor() const {
  return make_reducing_cursor(*family_, [this](std::span<const double> v) {
    return surrogate_h(v, q_, lambda_);
  });
}

namespace {

constexpr double kMonotoneTol = 1e-12;

struct RatioAccumulator {
  WscEstimate est;
  // Marginals this small relative to f are summation-order residue (long
  // area sums reach ~1e-14), so they count as zero.
  double zero_tol = 0.0;

  explicit RatioAccumulator(double scale) : zero_tol(kMonotoneTol * std::max(1.0, std::abs(scale))) {}

  void push(double gain_small, double gain_large) {
    if (gain_small < -kMonotoneTol || gain_large < -kMonotoneTol) {
      throw ContractError("wsc_estimate: negative marginal gain (function not monotone)");
    }
    const bool zero_small = gain_small <= zero_tol;
    const bool zero_large = gain_large <= zero_tol;
    if (zero_small) {
      if (zero_large) {
        ++est.skipped;
      } else {
        est.infinite = true;
      }
      return;
    }
    ++est.ratios;
    est.value = std::max(est.value, std::max(gain_large, 0.0) / gain_small);
  }
};

}  // namespace

WscEstimate wsc_estimate(const SetFunction& f) {
  const std::size_t n = f.ground_size();
  if (n == 0 || n > 14) throw DomainError("wsc_estimate: exhaustive mode needs 1 <= |N| <= 14");
  const std::uint64_t full = (1ULL << n) - 1;
  std::vector<double> table(full + 1);
  for (std::uint64_t m = 0; m <= full; ++m) table[m] = f.evaluate(Subset::from_mask(n, m));

  double scale = 0.0;
  for (double v : table) scale = std::max(scale, std::abs(v));
  RatioAccumulator acc(scale);
  for (std::uint64_t t = 0; t < full; ++t) {
    for (std::size_t e = 0; e < n; ++e) {
      const std::uint64_t bit = 1ULL << e;
      if (t & bit) continue;
      const double gain_t = table[t | bit] - table[t];
      // Every S with S <= T, including T itself and the empty set.
      for (std::uint64_t s = t;; s = (s - 1) & t) {
        acc.push(table[s | bit] - table[s], gain_t);
        if (s == 0) break;
      }
    }
  }
  return acc.est;
}

WscEstimate wsc_estimate_sampled(const SetFunction& f, std::size_t samples, std::uint64_t seed) {
  const std::size_t n = f.ground_size();
  if (n < 2) throw DomainError("wsc_estimate_sampled: ground set too small");
  Rng rng(seed);
  RatioAccumulator acc(f.evaluate(Subset::full(n)));
  for (std::size_t k = 0; k < samples; ++k) {
    const Element e = uniform_index(rng, n);
    Subset t(n);
    Subset s(n);
    for (Element x = 0; x < n; ++x) {
      if (x == e) continue;
      if (uniform01(rng) < 0.5) {
        t.insert(x);
        if (uniform01(rng) < 0.5) s.insert(x);
      }
    }
    acc.push(marginal_gain(f, e, s), marginal_gain(f, e, t));
  }
  return acc.est;
}

}  // namespace robsub
