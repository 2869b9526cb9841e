#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace robsub {

// Per-task utilities (f_1(S), ..., f_n(S)).
using TaskValues = std::vector<double>;

// A point of the probability simplex: n >= 1 nonnegative weights summing to one.
// Construct through make_distribution (or the helpers below); the invariant
// holds for every live instance.
class SimplexDistribution {
 public:
  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  double min_weight() const;

  static SimplexDistribution uniform(std::size_t n);

  friend SimplexDistribution make_distribution(std::vector<double> weights);

 private:
  explicit SimplexDistribution(std::vector<double> w) : weights_(std::move(w)) {}
  std::vector<double> weights_;
};

// Normalizes nonnegative weights to sum to one.
SimplexDistribution make_distribution(std::vector<double> weights);

// Entrywise equality within 1e-12.
bool approx_equal(const SimplexDistribution& a, const SimplexDistribution& b,
                  double tol = 1e-12);

// D_KL(P || Q) with 0 log 0 = 0. Throws DomainError when P puts mass where Q has none.
double kl_divergence(const SimplexDistribution& p, const SimplexDistribution& q);

// Minimizer of sum_i P_i f_i + lambda KL(P || Q): P*_i proportional to Q_i exp(-f_i / lambda).
SimplexDistribution local_worst_case(std::span<const double> f, const SimplexDistribution& q,
                                     double lambda);

// KL radius R at which lambda is the optimal multiplier: R = KL(P*(lambda) || Q).
double radius_for_lambda(std::span<const double> f, const SimplexDistribution& q, double lambda);

// Geometric weighting of a window of t_w objectives (oldest first). The gamma^t_w mass
// that falls on the oldest objective is folded into the first coordinate.
SimplexDistribution geometric_reference(double gamma, std::size_t window);

// Comma-separated list at 17 significant digits.
std::string format_weights(std::span<const double> weights);
std::vector<double> parse_weights(const std::string& text);

}  // namespace robsub
