#include "robsub/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "robsub/errors.hpp"
#include "robsub/imgsum.hpp"
#include "robsub/objective.hpp"
#include "robsub/oracles.hpp"
#include "robsub/random.hpp"
#include "robsub/satsim.hpp"
#include "robsub/simplex.hpp"
#include "robsub/solver.hpp"

namespace robsub::verify {

namespace {

using Clock = std::chrono::steady_clock;
using satsim::Mat3;
using satsim::Vec3;

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c);
  return buf;
}

template <class Body>
CheckResult timed(const std::string& name, Body&& body) {
  CheckResult r;
  r.name = name;
  const auto start = Clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return r;
}

SimplexDistribution random_distribution(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  for (auto& x : w) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    x = -std::log(u);
  }
  return make_distribution(std::move(w));
}

std::vector<double> random_values(Rng& rng, std::size_t n) {
  std::vector<double> f(n);
  for (auto& x : f) x = uniform01(rng);
  return f;
}

std::shared_ptr<const TaskFamily> facility_family(std::size_t items, std::size_t tasks, std::uint64_t seed) {
  auto emb = imgsum::synthetic_embeddings(items, 4, seed);
  auto d = std::make_shared<const imgsum::DistanceMatrix>(imgsum::distance_matrix(emb, Execution::kSerial));
  std::vector<SetFunctionPtr> fs;
  for (std::size_t i = 0; i < tasks; ++i) fs.push_back(std::make_shared<imgsum::FacilityTask>(d, i % items));
  return std::make_shared<const TaskFamily>(std::move(fs));
}

// Largest gain(e|T) - gain(e|S) over all S <= T, e not in T (|N| <= 12).
double max_submodularity_violation(const SetFunction& f) {
  const std::size_t n = f.ground_size();
  const std::uint64_t full = (1ULL << n) - 1;
  std::vector<double> table(full + 1);
  for (std::uint64_t m = 0; m <= full; ++m) table[m] = f.evaluate(Subset::from_mask(n, m));
  double worst = -std::numeric_limits<double>::infinity();
  for (std::uint64_t t = 0; t < full; ++t) {
    for (std::size_t e = 0; e < n; ++e) {
      const std::uint64_t bit = 1ULL << e;
      if (t & bit) continue;
      const double gt = table[t | bit] - table[t];
      for (std::uint64_t s = t;; s = (s - 1) & t) {
        worst = std::max(worst, gt - (table[s | bit] - table[s]));
        if (s == 0) break;
      }
    }
  }
  return worst;
}

double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

Mat3 random_spd(Rng& rng, double floor) {
  Mat3 a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = standard_normal(rng);
  return a * a.transpose() + floor * Mat3::Identity();
}

}  // namespace

CheckResult check_dual_equivalence(std::size_t instances, std::uint64_t seed) {
  return timed("dual equivalence", [&](CheckResult& r) {
    Rng rng(seed);
    const double lambdas[] = {0.05, 0.1, 1.0};
    double worst = 0.0;
    for (std::size_t k = 0; k < instances; ++k) {
      const std::size_t n = 1 + uniform_index(rng, 6);
      const auto q = random_distribution(rng, n);
      const auto f = random_values(rng, n);
      const double lambda = lambdas[uniform_index(rng, 3)];
      const double g = aggregate(f, q, AggregateMode::kl_robust(lambda));
      const auto ref = n <= 3 ? oracles::simplex_grid_minimum(f, q.weights(), lambda, 1e-4)
                              : oracles::refined_simplex_minimum(f, q.weights(), lambda, 1e-2);
      worst = std::max(worst, std::abs(g - ref.value));
    }
    r.passed = worst <= 1e-5;
    r.detail = fmt("max |G - primal min| = %.3e over %g instances (tol 1e-5)", worst, static_cast<double>(instances));
  });
}

CheckResult check_sandwich_bounds(std::size_t instances, std::uint64_t seed) {
  return timed("sandwich and limit bounds", [&](CheckResult& r) {
    Rng rng(seed);
    std::size_t sandwich_bad = 0;
    double high_gap = 0.0;
    double low_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < instances; ++k) {
      const std::size_t n = 1 + uniform_index(rng, 8);
      const auto q = random_distribution(rng, n);
      const auto f = random_values(rng, n);
      const double lambda = std::pow(10.0, -3.0 + 6.0 * uniform01(rng));
      const double g = aggregate(f, q, AggregateMode::kl_robust(lambda));
      const double lo = *std::min_element(f.begin(), f.end());
      const double hi = aggregate(f, q, AggregateMode::weighted_average());
      if (g < lo - 1e-12 || g > hi + 1e-12) ++sandwich_bad;

      const double g_high = aggregate(f, q, AggregateMode::kl_robust(1e4));
      high_gap = std::max(high_gap, std::abs(g_high - hi));
      const double g_low = aggregate(f, q, AggregateMode::kl_robust(1e-3));
      low_excess = std::max(low_excess, (g_low - lo) - 1e-3 * std::log(1.0 / q.min_weight()));
    }
    r.passed = sandwich_bad == 0 && high_gap <= 1e-3 && low_excess <= 1e-12;
    r.detail = fmt("sandwich violations %g; |G(1e4) - avg| max %.2e; G(1e-3) - min - bound max %.2e",
                   static_cast<double>(sandwich_bad), high_gap, low_excess);
  });
}

CheckResult check_decomposition(std::size_t pairs, std::size_t triples, std::uint64_t seed) {
  return timed("h/g decomposition", [&](CheckResult& r) {
    Rng rng(seed);
    double worst_gap = 0.0;
    for (std::size_t k = 0; k < pairs; ++k) {
      const std::size_t n = 1 + uniform_index(rng, 8);
      const auto q = random_distribution(rng, n);
      const auto f = random_values(rng, n);
      const double lambda = 0.1 + 0.9 * uniform01(rng);
      const double g = aggregate(f, q, AggregateMode::kl_robust(lambda));
      const double via_h = link_g(surrogate_h(f, q, lambda), lambda);
      worst_gap = std::max(worst_gap, std::abs(g - via_h));
    }

    // Submodularity of h on facility-location families with random Q and lambda.
    std::size_t violations = 0;
    double worst_violation = -std::numeric_limits<double>::infinity();
    const std::size_t per_instance = 100;
    for (std::size_t done = 0, inst = 0; done < triples; ++inst) {
      const std::size_t items = 6 + uniform_index(rng, 7);
      const auto family = facility_family(items, 2 + uniform_index(rng, 4), mix_seed(seed, inst));
      const auto q = random_distribution(rng, family->size());
      const double lambda = std::pow(10.0, -1.5 + 2.0 * uniform01(rng));
      const SurrogateObjective h(family, q, lambda);
      for (std::size_t j = 0; j < per_instance && done < triples; ++j, ++done) {
        const Element e = uniform_index(rng, items);
        Subset t(items), s(items);
        for (Element x = 0; x < items; ++x) {
          if (x == e || uniform01(rng) >= 0.5) continue;
          t.insert(x);
          if (uniform01(rng) < 0.5) s.insert(x);
        }
        const double v = marginal_gain(h, e, t) - marginal_gain(h, e, s);
        worst_violation = std::max(worst_violation, v);
        if (v > 1e-9) ++violations;
      }
    }
    r.passed = worst_gap <= 1e-12 && violations == 0;
    r.detail = fmt("max |G - g(h)| = %.2e; submodularity violations %g (max excess %.2e)", worst_gap,
                   static_cast<double>(violations), worst_violation);
  });
}

CheckResult check_stochastic_guarantee(std::size_t seeds, std::uint64_t seed) {
  return timed("stochastic greedy guarantee", [&](CheckResult& r) {
    constexpr std::size_t kItems = 12;
    constexpr std::size_t kBudget = 3;
    constexpr double kEpsilon = 0.1;
    constexpr double kLambda = 1.0;
    double h_sg = 0.0, h_opt = 0.0, g_sg = 0.0, g_bound = 0.0;
    for (std::size_t s = 0; s < seeds; ++s) {
      Rng rng(mix_seed(seed, s));
      const auto family = facility_family(kItems, kItems, mix_seed(seed, 1000 + s));
      const auto q = random_distribution(rng, family->size());
      const SurrogateObjective h(family, q, kLambda);
      const auto best = brute_force(h, kBudget);
      StochasticGreedyOptions opt;
      opt.epsilon = kEpsilon;
      opt.seed = mix_seed(seed, 2000 + s);
      const auto sg = stochastic_greedy(h, kBudget, opt);

      const double hs = h.evaluate(sg.selection);
      const double hstar = h.evaluate(best.selection);
      h_sg += hs;
      h_opt += hstar;
      g_sg += aggregate_value(*family, q, AggregateMode::kl_robust(kLambda), sg.selection);
      g_bound += aggregate_value(*family, q, AggregateMode::kl_robust(kLambda), best.selection) -
                 (1.0 / std::numbers::e + kEpsilon) * hstar / (1.0 - hstar);
    }
    const double m = static_cast<double>(seeds);
    h_sg /= m;
    h_opt /= m;
    g_sg /= m;
    g_bound /= m;
    const double ratio = 1.0 - 1.0 / std::numbers::e - kEpsilon;
    r.passed = h_sg >= ratio * h_opt && g_sg >= g_bound - 1e-6;
    r.detail = fmt("mean h(SG) %.6f vs %.6f required; ", h_sg, ratio * h_opt) +
               fmt("mean G(SG) %.6f vs bound %.6f", g_sg, g_bound);
  });
}

CheckResult check_greedy_degeneracy(std::size_t instances, std::uint64_t seed) {
  return timed("greedy degeneracies", [&](CheckResult& r) {
    Rng rng(seed);
    std::size_t mismatches = 0;
    for (std::size_t k = 0; k < instances; ++k) {
      const std::size_t items = 8 + uniform_index(rng, 17);
      const auto family = facility_family(items, 3 + uniform_index(rng, 4), mix_seed(seed, k));
      const auto q = random_distribution(rng, family->size());
      const double lambda = std::pow(10.0, -1.5 + 2.0 * uniform01(rng));
      const std::size_t budget = 1 + uniform_index(rng, items);
      const AggregateObjective g(family, q, AggregateMode::kl_robust(lambda));
      const SurrogateObjective h(family, q, lambda);

      const auto plain = greedy(g, budget, Execution::kSerial);
      StochasticGreedyOptions full;
      full.sample_size = items;
      full.seed = mix_seed(seed, 500 + k);
      if (stochastic_greedy(g, budget, full).order != plain.order) ++mismatches;
      if (lazy_greedy(h, budget).order != greedy(h, budget, Execution::kSerial).order) ++mismatches;
      if (greedy(g, budget, Execution::kParallel).order != plain.order) ++mismatches;
    }
    r.passed = mismatches == 0;
    r.detail = fmt("%g sequence mismatches over %g instances", static_cast<double>(mismatches),
                   static_cast<double>(instances));
  });
}

CheckResult check_wsc_finite(std::size_t instances, std::uint64_t seed) {
  return timed("weak submodularity", [&](CheckResult& r) {
    Rng rng(seed);
    const double lambdas[] = {0.05, 0.1, 1.0};
    std::size_t infinite = 0;
    double largest = 0.0;
    double h_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < instances; ++k) {
      const std::size_t items = 5 + uniform_index(rng, 4);
      const auto family = facility_family(items, 2 + uniform_index(rng, 3), mix_seed(seed, k));
      const auto q = random_distribution(rng, family->size());
      const double lambda = lambdas[uniform_index(rng, 3)];
      const auto est = wsc_estimate(AggregateObjective(family, q, AggregateMode::kl_robust(lambda)));
      if (est.infinite) ++infinite;
      largest = std::max(largest, est.value);
      h_excess = std::max(h_excess, max_submodularity_violation(SurrogateObjective(family, q, lambda)));
    }
    r.passed = infinite == 0 && h_excess <= 1e-9;
    r.detail = fmt("infinite WSC %g; largest WSC of G %.3f; max h violation %.2e", static_cast<double>(infinite),
                   largest, h_excess);
  });
}

CheckResult check_task_submodularity(std::size_t instances, std::uint64_t seed) {
  return timed("task submodularity", [&](CheckResult& r) {
    Rng rng(seed);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < instances; ++k) {
      const std::size_t items = 6 + uniform_index(rng, 5);
      const auto fac = facility_family(items, 1, mix_seed(seed, k));
      worst = std::max(worst, max_submodularity_violation(fac->task(0)));

      const std::size_t cells = 12;
      std::vector<std::vector<std::size_t>> covers(items);
      std::vector<std::vector<std::uint32_t>> sees(items);
      for (std::size_t e = 0; e < items; ++e) {
        for (std::size_t c = 0; c < cells; ++c) {
          if (uniform01(rng) < 0.3) covers[e].push_back(c);
        }
        for (std::uint32_t p = 0; p < 4; ++p) {
          if (uniform01(rng) < 0.4) sees[e].push_back(p);
        }
      }
      worst = std::max(worst, max_submodularity_violation(CoverageFunction(covers, random_values(rng, cells))));

      std::vector<std::vector<double>> tables(4);
      for (std::uint32_t p = 0; p < 4; ++p) {
        std::size_t m_full = 0;
        for (const auto& s : sees) m_full += std::count(s.begin(), s.end(), p);
        const Mat3 cov = random_spd(rng, 0.1);
        const Mat3 noise = random_spd(rng, 0.5);
        for (std::size_t m = 0; m <= m_full; ++m) tables[p].push_back(satsim::fisher_utility(cov, m, m_full, noise));
      }
      worst = std::max(worst, max_submodularity_violation(satsim::FisherTask(sees, tables)));
    }
    r.passed = worst <= 1e-9;
    r.detail = fmt("max gain(e|T) - gain(e|S) = %.2e (tol 1e-9)", worst);
  });
}

CheckResult check_rk4_order() {
  return timed("RK4 order", [&](CheckResult& r) {
    const satsim::LorenzParams p;
    Vec3 x0(1.0, 1.0, 1.0);
    for (int i = 0; i < 1000; ++i) x0 = satsim::lorenz63_rk4(x0, 0.01, p);
    const double horizon = 1.0;
    auto integrate = [&](double dt) {
      Vec3 x = x0;
      const int steps = static_cast<int>(std::lround(horizon / dt));
      for (int i = 0; i < steps; ++i) x = satsim::lorenz63_rk4(x, dt, p);
      return x;
    };
    const Vec3 ref = integrate(0.02 / 256.0);
    const double e1 = (integrate(0.02) - ref).norm();
    const double e2 = (integrate(0.01) - ref).norm();
    const double ratio = e1 / e2;
    r.passed = ratio >= 8.0 && ratio <= 32.0;
    r.detail = fmt("err(0.02) %.3e, err(0.01) %.3e, ratio %.2f (want [8,32])", e1, e2, ratio);
  });
}

CheckResult check_ukf_vs_kalman(std::size_t trials, std::uint64_t seed) {
  return timed("UKF vs Kalman", [&](CheckResult& r) {
    Rng rng(seed);
    double worst = 0.0;
    const satsim::Dynamics identity = [](const Vec3& x) { return x; };
    for (std::size_t k = 0; k < trials; ++k) {
      satsim::FilterState s;
      s.mean = Vec3(20.0 * standard_normal(rng), 20.0 * standard_normal(rng), 20.0 * standard_normal(rng));
      s.cov = random_spd(rng, 0.05);
      satsim::UkfParams params;
      params.process_noise = random_spd(rng, 0.01) * 0.1;
      params.measurement_noise = random_spd(rng, 0.2);
      std::vector<Vec3> z(uniform_index(rng, 5));
      for (auto& v : z) v = s.mean + Vec3(standard_normal(rng), standard_normal(rng), standard_normal(rng));
      const auto u = satsim::ukf_step(s, identity, z, params);
      const auto kf = oracles::kalman_identity_step(s, params.process_noise, z, params.measurement_noise);
      worst = std::max({worst, (u.mean - kf.mean).cwiseAbs().maxCoeff(), max_abs(u.cov - kf.cov)});
    }
    r.passed = worst <= 1e-8;
    r.detail = fmt("max entry difference %.3e over %g trials (tol 1e-8)", worst, static_cast<double>(trials));
  });
}

CheckResult check_coverage_cap() {
  return timed("coverage vs spherical cap", [&](CheckResult& r) {
    const satsim::WalkerDelta w;
    const satsim::CoverageGrid grid(2.0);
    const double theta = satsim::footprint_central_angle(w.semi_major_axis_km, w.fov_half_angle);
    const double cap = 0.5 * (1.0 - std::cos(theta));
    auto deviation = [&](const Vec3& sat) {
      return satsim::covered_fraction(grid, std::span<const Vec3>(&sat, 1), w.fov_half_angle) / cap - 1.0;
    };
    // The criterion: the first satellite of the default constellation at epoch.
    const double dev = deviation(satsim::build_constellation(w).position(0, 0.0));
    // Informational: cell-center quantization across a latitude/longitude scan.
    double worst = 0.0, bias = 0.0;
    int count = 0;
    for (int i = -10; i <= 10; ++i) {
      for (int j = 0; j < 8; ++j) {
        const double lat = 0.14 * i, lon = -3.0 + 0.75 * j;
        const double d = deviation(satsim::surface_point(lat, lon) * (w.semi_major_axis_km / satsim::kEarthRadiusKm));
        worst = std::max(worst, std::abs(d));
        bias += d;
        ++count;
      }
    }
    r.passed = std::abs(dev) <= 0.02;
    r.detail = fmt("relative deviation %+.4f (tol 0.02); scan max |dev| %.4f, mean dev %+.4f", dev, worst,
                   bias / count);
  });
}

std::vector<CheckResult> run_battery(const BatteryOptions& o) {
  const bool q = o.quick;
  std::vector<CheckResult> out;
  out.push_back(check_dual_equivalence(q ? 20 : 200, mix_seed(o.seed, 1)));
  out.push_back(check_sandwich_bounds(q ? 1000 : 10000, mix_seed(o.seed, 2)));
  out.push_back(check_decomposition(q ? 1000 : 10000, q ? 1000 : 10000, mix_seed(o.seed, 3)));
  out.push_back(check_stochastic_guarantee(q ? 10 : 50, mix_seed(o.seed, 4)));
  out.push_back(check_greedy_degeneracy(q ? 5 : 20, mix_seed(o.seed, 5)));
  out.push_back(check_wsc_finite(q ? 3 : 10, mix_seed(o.seed, 6)));
  out.push_back(check_task_submodularity(q ? 3 : 10, mix_seed(o.seed, 7)));
  out.push_back(check_rk4_order());
  out.push_back(check_ukf_vs_kalman(q ? 20 : 200, mix_seed(o.seed, 8)));
  out.push_back(check_coverage_cap());
  return out;
}

}  // namespace robsub::verify
