#include "doctest.h"
#include "robsub/imgsum.hpp"
#include "robsub/parallel.hpp"
#include "robsub/satsim.hpp"
#include "robsub/solver.hpp"
#include "test_helpers.hpp"

using namespace robsub;

TEST_CASE("parallel gain evaluation matches the serial kernel bit for bit") {
  Rng rng(1);
  const auto family = testing_support::coverage_family(rng, 6, 200);
  const auto q = testing_support::random_distribution(rng, 6);
  const AggregateObjective g(family, q, AggregateMode::kl_robust(0.1));
  auto cursor = g.cursor();
  cursor->add(5);
  cursor->add(17);
  const auto candidates = cursor->selection().complement_elements();
  std::vector<double> a(candidates.size()), b(candidates.size());
  evaluate_gains(*cursor, candidates, a, Execution::kSerial);
  evaluate_gains(*cursor, candidates, b, Execution::kParallel);
  CHECK(a == b);
  CHECK(argmax_gain(candidates, a) == argmax_gain(candidates, b));
  CHECK(max_threads() >= 1);
}

TEST_CASE("argmax_gain tie-breaking") {
  const std::vector<Element> c = {7, 2, 9};
  const std::vector<double> g = {1.0, 1.0, 0.5};
  CHECK(argmax_gain(c, g) == 1);
  CHECK(argmax_gain(std::span<const Element>{}, std::span<const double>{}) == 0);
}

TEST_CASE("parallel and serial solvers agree") {
  Rng rng(2);
  const auto family = testing_support::coverage_family(rng, 4, 120);
  const auto q = testing_support::random_distribution(rng, 4);
  const AggregateObjective g(family, q, AggregateMode::kl_robust(0.2));
  CHECK(greedy(g, 10, Execution::kSerial).order == greedy(g, 10, Execution::kParallel).order);
}

TEST_CASE("visibility lists agree across kernels") {
  const auto c = satsim::build_constellation(satsim::WalkerDelta{});
  const auto sats = c.positions(300.0);
  const satsim::CoverageGrid grid(2.0);
  const auto a = satsim::visibility_lists(sats, grid.centers(), c.params().fov_half_angle, Execution::kSerial);
  const auto b = satsim::visibility_lists(sats, grid.centers(), c.params().fov_half_angle, Execution::kParallel);
  CHECK(a == b);
}

TEST_CASE("distance matrix agrees across kernels") {
  const auto e = imgsum::synthetic_embeddings(150, 16, 4);
  const auto a = imgsum::distance_matrix(e, Execution::kSerial);
  const auto b = imgsum::distance_matrix(e, Execution::kParallel);
  for (std::size_t i = 0; i < 150; ++i)
    for (std::size_t j = 0; j < 150; ++j) CHECK(a(i, j) == b(i, j));
}
