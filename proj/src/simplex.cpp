#include "robsub/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "robsub/errors.hpp"

namespace robsub {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw DomainError(std::string(what) + ": dimension mismatch");
}

void require_positive_lambda(double lambda, const char* what) {
  if (!(lambda > 0.0)) throw DomainError(std::string(what) + ": lambda must be positive");
}

// Tilted weights w_i = Q_i exp(-(f_i - min f) / lambda); returns the shift min f.
double tilted_weights(std::span<const double> f, const SimplexDistribution& q, double lambda,
                      std::vector<double>& w) {
  const double shift = *std::min_element(f.begin(), f.end());
  w.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    w[i] = q[i] > 0.0 ? q[i] * std::exp(-(f[i] - shift) / lambda) : 0.0;
  }
  return shift;
}

}  // namespace

double SimplexDistribution::min_weight() const {
  return *std::min_element(weights_.begin(), weights_.end());
}

SimplexDistribution SimplexDistribution::uniform(std::size_t n) {
  if (n == 0) throw DomainError("uniform: empty distribution");
  return SimplexDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

SimplexDistribution make_distribution(std::vector<double> weights) {
  if (weights.empty()) throw DomainError("make_distribution: empty weight vector");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw DomainError("make_distribution: weights must be finite and nonnegative");
    }
    sum += w;
  }
  if (!(sum > 0.0)) throw DomainError("make_distribution: all-zero weight vector");
  for (double& w : weights) w /= sum;
  return SimplexDistribution(std::move(weights));
}

bool approx_equal(const SimplexDistribution& a, const SimplexDistribution& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > tol) return false;
  }
  return true;
}

double kl_divergence(const SimplexDistribution& p, const SimplexDistribution& q) {
  require_same_size(p.size(), q.size(), "kl_divergence");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw DomainError("kl_divergence: P not absolutely continuous w.r.t. Q");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  // Rounding can leave a tiny negative residue when P == Q.
  return std::max(kl, 0.0);
}

SimplexDistribution local_worst_case(std::span<const double> f, const SimplexDistribution& q,
                                     double lambda) {
  require_positive_lambda(lambda, "local_worst_case");
  require_same_size(f.size(), q.size(), "local_worst_case");
  std::vector<double> w;
  tilted_weights(f, q, lambda, w);
  return make_distribution(std::move(w));
}

double radius_for_lambda(std::span<const double> f, const SimplexDistribution& q, double lambda) {
  require_positive_lambda(lambda, "radius_for_lambda");
  require_same_size(f.size(), q.size(), "radius_for_lambda");
  std::vector<double> w;
  const double shift = tilted_weights(f, q, lambda, w);
  double z = 0.0;
  double zf = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    z += w[i];
    zf += w[i] * (f[i] - shift);
  }
  // R = -log(sum Q e^{-f/l}) - (sum Q e^{-f/l} f) / (l sum Q e^{-f/l}); the shift cancels.
  const double r = -std::log(z) - zf / (lambda * z);
  return std::max(r, 0.0);
}

SimplexDistribution geometric_reference(double gamma, std::size_t window) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("geometric_reference: gamma outside [0,1]");
  if (window == 0) throw DomainError("geometric_reference: window must be positive");
  // std::pow(0.0, 0) == 1 gives the 0^0 = 1 convention.
  std::vector<double> w(window);
  const auto tw = static_cast<int>(window);
  for (int t = 1; t <= tw; ++t) {
    w[static_cast<std::size_t>(t - 1)] = (1.0 - gamma) * std::pow(gamma, tw - t);
  }
  w[0] += std::pow(gamma, tw);
  return make_distribution(std::move(w));
}

std::string format_weights(std::span<const double> weights) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < weights.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", weights[i]);
    if (i > 0) out += ',';
    out += buf;
  }
  return out;
}

std::vector<double> parse_weights(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw FormatError("parse_weights: not a number: '" + item + "'");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos) {
      throw FormatError("parse_weights: trailing characters in '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw FormatError("parse_weights: empty list");
  return out;
}

}  // namespace robsub
