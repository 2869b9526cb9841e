#include "robsub/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "robsub/errors.hpp"

namespace robsub::oracles {

namespace {

double term(double p, double f, double q, double lambda) {
  if (p <= 0.0) return 0.0;
  return p * f + lambda * p * std::log(p / q);
}

double objective(std::span<const double> p, std::span<const double> f, std::span<const double> q,
                 double lambda) {
  double v = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) v += term(p[i], f[i], q[i], lambda);
  return v;
}

// Depth-first enumeration of compositions of `units` into n parts.
struct GridSearch {
  std::size_t n;
  std::vector<std::vector<double>> table;  // table[i][k] = term(k * step)
  std::vector<int> parts;
  std::vector<int> best_parts;
  double best = std::numeric_limits<double>::infinity();

  void run(std::size_t i, int remaining, double partial) {
    if (i + 1 == n) {
      consider(i, remaining, partial + table[i][static_cast<std::size_t>(remaining)]);
      return;
    }
    if (i + 2 == n) {
      // Last two coordinates: a flat scan instead of one call per leaf.
      const double* a = table[i].data();
      const double* b = table[i + 1].data();
      int best_k = -1;
      double best_v = std::numeric_limits<double>::infinity();
      for (int k = 0; k <= remaining; ++k) {
        const double v = a[k] + b[remaining - k];
        if (v < best_v) {
          best_v = v;
          best_k = k;
        }
      }
      if (best_k >= 0 && partial + best_v < best) {
        parts[i] = best_k;
        consider(i + 1, remaining - best_k, partial + best_v);
      }
      return;
    }
    for (int k = 0; k <= remaining; ++k) {
      parts[i] = k;
      run(i + 1, remaining - k, partial + table[i][static_cast<std::size_t>(k)]);
    }
  }

  void consider(std::size_t last, int units_left, double v) {
    if (v < best) {
      best = v;
      parts[last] = units_left;
      best_parts = parts;
    }
  }
};

}  // namespace

GridMinimum simplex_grid_minimum(std::span<const double> f, std::span<const double> q, double lambda,
                                 double step) {
  const std::size_t n = f.size();
  if (n == 0 || q.size() != n) throw DomainError("simplex_grid_minimum: bad dimensions");
  const int units = static_cast<int>(std::lround(1.0 / step));
  GridSearch search{n, {}, std::vector<int>(n, 0), {}, std::numeric_limits<double>::infinity()};
  search.table.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    search.table[i].resize(static_cast<std::size_t>(units) + 1);
    for (int k = 0; k <= units; ++k) {
      const double p = static_cast<double>(k) / units;
      // Mass where Q vanishes is infinitely penalized.
      search.table[i][static_cast<std::size_t>(k)] =
          (q[i] == 0.0 && k > 0) ? std::numeric_limits<double>::infinity() : term(p, f[i], q[i], lambda);
    }
  }
  search.run(0, units, 0.0);
  GridMinimum out;
  out.value = search.best;
  out.argmin.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.argmin[i] = static_cast<double>(search.best_parts[i]) / units;
  return out;
}

GridMinimum refined_simplex_minimum(std::span<const double> f, std::span<const double> q, double lambda,
                                    double coarse_step) {
  GridMinimum g = simplex_grid_minimum(f, q, lambda, coarse_step);
  std::vector<double> p = g.argmin;
  const std::size_t n = p.size();
  double value = objective(p, f, q, lambda);
  for (double delta = coarse_step; delta > 1e-13; delta *= 0.5) {
    bool improved = true;
    // Rounding can make a pair of opposite moves both look like gains, so
    // demand a decrease above noise and bound the sweeps per step size.
    for (int sweep = 0; improved && sweep < 10000; ++sweep) {
      improved = false;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j || q[j] == 0.0) continue;
          const double move = std::min(delta, p[i]);
          if (move <= 0.0) continue;
          const double before = term(p[i], f[i], q[i], lambda) + term(p[j], f[j], q[j], lambda);
          const double after =
              term(p[i] - move, f[i], q[i], lambda) + term(p[j] + move, f[j], q[j], lambda);
          if (after < before - 1e-16 * (std::abs(before) + 1.0)) {
            p[i] -= move;
            p[j] += move;
            value += after - before;
            improved = true;
          }
        }
      }
    }
  }
  g.argmin = p;
  g.value = objective(p, f, q, lambda);
  return g;
}

satsim::FilterState kalman_identity_step(const satsim::FilterState& state, const satsim::Mat3& process_noise,
                                         std::span<const satsim::Vec3> measurements,
                                         const satsim::Mat3& measurement_noise) {
  satsim::FilterState out;
  out.mean = state.mean;
  out.cov = state.cov + process_noise;
  if (measurements.empty()) return out;
  // Sequential scalar-free update: one 3x3 Kalman update per measurement.
  for (const auto& z : measurements) {
    const satsim::Mat3 s = out.cov + measurement_noise;
    const satsim::Mat3 k = out.cov * s.inverse();
    out.mean = out.mean + k * (z - out.mean);
    out.cov = (satsim::Mat3::Identity() - k) * out.cov;
    out.cov = 0.5 * (out.cov + out.cov.transpose());
  }
  return out;
}

}  // namespace robsub::oracles
