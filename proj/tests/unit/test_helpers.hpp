#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "robsub/objective.hpp"
#include "robsub/random.hpp"
#include "robsub/simplex.hpp"

namespace testing_support {

inline robsub::SimplexDistribution random_distribution(robsub::Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  for (auto& x : w) x = 0.05 + robsub::uniform01(rng);
  return robsub::make_distribution(std::move(w));
}

inline std::vector<double> random_values(robsub::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = robsub::uniform01(rng);
  return v;
}

// Random weighted coverage instance: each element covers each item w.p. density.
inline std::shared_ptr<robsub::CoverageFunction> random_coverage(robsub::Rng& rng, std::size_t elements,
                                                                 std::size_t items, double density) {
  std::vector<std::vector<std::size_t>> covers(elements);
  for (auto& c : covers) {
    for (std::size_t i = 0; i < items; ++i) {
      if (robsub::uniform01(rng) < density) c.push_back(i);
    }
  }
  std::vector<double> w(items);
  for (auto& x : w) x = 0.1 + robsub::uniform01(rng);
  return std::make_shared<robsub::CoverageFunction>(std::move(covers), std::move(w));
}

// n normalized coverage tasks over a shared ground set.
inline std::shared_ptr<const robsub::TaskFamily> coverage_family(robsub::Rng& rng, std::size_t tasks,
                                                                 std::size_t elements) {
  std::vector<robsub::SetFunctionPtr> fs;
  while (fs.size() < tasks) {
    auto f = random_coverage(rng, elements, 15, 0.2);
    if (f->evaluate(robsub::Subset::full(elements)) > 0.0) fs.push_back(robsub::normalize_task(f));
  }
  return std::make_shared<const robsub::TaskFamily>(std::move(fs));
}

}  // namespace testing_support
