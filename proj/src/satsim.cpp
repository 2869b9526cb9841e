#include "robsub/satsim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "robsub/errors.hpp"

namespace robsub::satsim {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kJitter = 1e-9;

Mat3 symmetrize(const Mat3& m) { return 0.5 * (m + m.transpose()); }

// Cholesky factor of an SPD matrix, with one jitter retry.
template <class Matrix>
Matrix checked_cholesky(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Matrix repaired = m;
  repaired.diagonal().array() += kJitter;
  llt.compute(repaired);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + ": covariance is not positive definite");
  }
  return llt.matrixL();
}

Mat3 ensure_spd(const Mat3& m, const char* what) {
  Mat3 s = symmetrize(m);
  Eigen::LLT<Mat3> llt(s);
  if (llt.info() == Eigen::Success) return s;
  s.diagonal().array() += kJitter;
  llt.compute(s);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + ": covariance lost positive definiteness");
  }
  return s;
}

struct SigmaSet {
  std::vector<Vec3> points;
  std::vector<double> wm;
  std::vector<double> wc;
};

SigmaSet sigma_points(const FilterState& s, const UkfParams& p) {
  constexpr int n = 3;
  const double lambda = p.alpha * p.alpha * (n + p.kappa) - n;
  const double scale = n + lambda;
  const Mat3 root = checked_cholesky<Mat3>(scale * s.cov, "ukf");
  SigmaSet set;
  set.points.reserve(2 * n + 1);
  set.points.push_back(s.mean);
  for (int i = 0; i < n; ++i) set.points.push_back(s.mean + root.col(i));
  for (int i = 0; i < n; ++i) set.points.push_back(s.mean - root.col(i));
  set.wm.assign(2 * n + 1, 0.5 / scale);
  set.wc.assign(2 * n + 1, 0.5 / scale);
  set.wm[0] = lambda / scale;
  set.wc[0] = lambda / scale + (1.0 - p.alpha * p.alpha + p.beta);
  return set;
}

}  // namespace

Constellation::Constellation(const WalkerDelta& params) : params_(params) {
  if (params.total <= 0 || params.planes <= 0) throw DomainError("WalkerDelta: counts must be positive");
  if (params.total % params.planes != 0) throw DomainError("WalkerDelta: T must be divisible by P");
  if (params.phasing < 0 || params.phasing >= params.planes) {
    throw DomainError("WalkerDelta: phasing must lie in [0, P)");
  }
  if (!(params.semi_major_axis_km > kEarthRadiusKm)) {
    throw DomainError("WalkerDelta: semi-major axis must exceed the Earth radius");
  }
  const int per_plane = params.total / params.planes;
  slots_.reserve(static_cast<std::size_t>(params.total));
  for (int plane = 0; plane < params.planes; ++plane) {
    const double raan = 2.0 * kPi * plane / params.planes;
    const double offset = 2.0 * kPi * params.phasing * plane / params.total;
    for (int j = 0; j < per_plane; ++j) {
      slots_.push_back({raan, 2.0 * kPi * j / per_plane + offset});
    }
  }
  mean_motion_ = std::sqrt(kMuEarth / std::pow(params.semi_major_axis_km, 3));
}

Vec3 Constellation::inertial_position(std::size_t sat, double t) const {
  const auto& s = slots_.at(sat);
  const double u = s.arg_latitude + mean_motion_ * t;
  const double ci = std::cos(params_.inclination);
  const double si = std::sin(params_.inclination);
  const double co = std::cos(s.raan);
  const double so = std::sin(s.raan);
  const double cu = std::cos(u);
  const double su = std::sin(u);
  return params_.semi_major_axis_km * Vec3(co * cu - so * su * ci, so * cu + co * su * ci, su * si);
}

Vec3 Constellation::position(std::size_t sat, double t) const {
  const Vec3 r = inertial_position(sat, t);
  const double theta = kEarthRotationRate * (params_.epoch_s + t);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return Vec3(c * r.x() + s * r.y(), -s * r.x() + c * r.y(), r.z());
}

std::vector<Vec3> Constellation::positions(double t) const {
  std::vector<Vec3> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = position(i, t);
  return out;
}

Constellation build_constellation(const WalkerDelta& params) { return Constellation(params); }

Vec3 satellite_position(const Constellation& constellation, std::size_t sat, double t) {
  return constellation.position(sat, t);
}

Vec3 surface_point(double latitude, double longitude) {
  return kEarthRadiusKm * Vec3(std::cos(latitude) * std::cos(longitude),
                               std::cos(latitude) * std::sin(longitude), std::sin(latitude));
}

bool is_visible(const Vec3& sat, const Vec3& point, double fov_half_angle) {
  const Vec3 los = point - sat;
  const double range = los.norm();
  if (range == 0.0) return true;
  // Occlusion: the satellite must be on or above the point's horizon plane.
  if (los.dot(point) > 0.0) return false;
  const double cos_off_nadir = -los.dot(sat) / (range * sat.norm());
  return cos_off_nadir >= std::cos(fov_half_angle) - 1e-12;
}

double footprint_central_angle(double semi_major_axis_km, double fov_half_angle) {
  const double rho = std::asin(kEarthRadiusKm / semi_major_axis_km);  // angular Earth radius
  if (fov_half_angle >= rho) return std::acos(kEarthRadiusKm / semi_major_axis_km);
  const double elevation = std::acos(std::sin(fov_half_angle) / std::sin(rho));
  return kPi / 2.0 - fov_half_angle - elevation;
}

namespace {

void visibility_row(const Vec3& sat, std::span<const Vec3> targets, double fov_half_angle,
                    double cos_reject, std::vector<std::uint32_t>& out) {
  const Vec3 dir = sat.normalized();
  for (std::size_t j = 0; j < targets.size(); ++j) {
    // Cheap central-angle prefilter, then the exact test.
    if (dir.dot(targets[j]) < cos_reject * kEarthRadiusKm) continue;
    if (is_visible(sat, targets[j], fov_half_angle)) out.push_back(static_cast<std::uint32_t>(j));
  }
}

}  // namespace

std::vector<std::vector<std::uint32_t>> visibility_lists(std::span<const Vec3> sats,
                                                         std::span<const Vec3> targets,
                                                         double fov_half_angle, Execution exec) {
  std::vector<std::vector<std::uint32_t>> lists(sats.size());
  if (sats.empty()) return lists;
  const double psi = footprint_central_angle(sats[0].norm(), fov_half_angle);
  const double cos_reject = std::cos(std::min(psi + 1e-3, kPi));
  const auto n = static_cast<std::ptrdiff_t>(sats.size());
  if (exec == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      visibility_row(sats[k], targets, fov_half_angle, cos_reject, lists[k]);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      visibility_row(sats[k], targets, fov_half_angle, cos_reject, lists[k]);
    }
  }
  return lists;
}

Vec3 lorenz63_derivative(const Vec3& s, const LorenzParams& p) {
  return Vec3(p.sigma * (s.y() - s.x()), s.x() * (p.rho - s.z()) - s.y(), s.x() * s.y() - p.beta * s.z());
}

Vec3 lorenz63_rk4(const Vec3& state, double dt, const LorenzParams& p) {
  if (!(dt > 0.0)) throw DomainError("lorenz63_rk4: dt must be positive");
  const Vec3 k1 = lorenz63_derivative(state, p);
  const Vec3 k2 = lorenz63_derivative(state + 0.5 * dt * k1, p);
  const Vec3 k3 = lorenz63_derivative(state + 0.5 * dt * k2, p);
  const Vec3 k4 = lorenz63_derivative(state + dt * k3, p);
  return state + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

FilterState ukf_predict(const FilterState& state, const Dynamics& dynamics, const UkfParams& params) {
  const SigmaSet set = sigma_points(state, params);
  std::vector<Vec3> moved(set.points.size());
  for (std::size_t i = 0; i < set.points.size(); ++i) moved[i] = dynamics(set.points[i]);
  FilterState out;
  // Weights sum to one, so anchoring at the central point avoids cancellation
  // against the large negative central weight when alpha is small.
  out.mean = moved[0];
  for (std::size_t i = 1; i < moved.size(); ++i) out.mean += set.wm[i] * (moved[i] - moved[0]);
  Mat3 cov = params.process_noise;
  for (std::size_t i = 0; i < moved.size(); ++i) {
    const Vec3 d = moved[i] - out.mean;
    cov += set.wc[i] * d * d.transpose();
  }
  out.cov = ensure_spd(cov, "ukf_predict");
  return out;
}

FilterState ukf_update(const FilterState& predicted, std::span<const Vec3> measurements,
                       const UkfParams& params) {
  if (measurements.empty()) return predicted;
  const std::size_t m = measurements.size();
  const auto dim = static_cast<Eigen::Index>(3 * m);
  const SigmaSet set = sigma_points(predicted, params);

  // Every satellite observes the state directly: z = [x; x; ...; x].
  Vec3 x_mean = set.points[0];
  for (std::size_t i = 1; i < set.points.size(); ++i) x_mean += set.wm[i] * (set.points[i] - set.points[0]);
  Eigen::VectorXd z_mean(dim);
  for (std::size_t j = 0; j < m; ++j) z_mean.segment<3>(static_cast<Eigen::Index>(3 * j)) = x_mean;
  Eigen::MatrixXd innov_cov = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(3, dim);
  Eigen::VectorXd dz(dim);
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) dz.segment<3>(static_cast<Eigen::Index>(3 * j)) = set.points[i];
    dz -= z_mean;
    const Vec3 dx = set.points[i] - predicted.mean;
    innov_cov += set.wc[i] * dz * dz.transpose();
    cross += set.wc[i] * dx * dz.transpose();
  }
  Eigen::VectorXd z(dim);
  for (std::size_t j = 0; j < m; ++j) {
    const auto b = static_cast<Eigen::Index>(3 * j);
    innov_cov.block<3, 3>(b, b) += params.measurement_noise;
    z.segment<3>(b) = measurements[j];
  }
  innov_cov = 0.5 * (innov_cov + innov_cov.transpose());
  const Eigen::LDLT<Eigen::MatrixXd> solver(innov_cov);
  if (solver.info() != Eigen::Success) throw NumericalError("ukf_update: singular innovation covariance");
  // K = C S^-1, computed as (S^-1 C^T)^T.
  const Eigen::MatrixXd gain = solver.solve(cross.transpose()).transpose();
  FilterState out;
  out.mean = predicted.mean + gain * (z - z_mean);
  out.cov = ensure_spd(predicted.cov - gain * innov_cov * gain.transpose(), "ukf_update");
  return out;
}

FilterState ukf_step(const FilterState& state, const Dynamics& dynamics,
                     std::span<const Vec3> measurements, const UkfParams& params) {
  return ukf_update(ukf_predict(state, dynamics, params), measurements, params);
}

double information_gain_trace(const Mat3& predicted_cov, std::size_t measurements,
                              const Mat3& measurement_cov) {
  if (measurements == 0) return 0.0;
  const Mat3 info = predicted_cov.inverse() + static_cast<double>(measurements) * measurement_cov.inverse();
  return (predicted_cov - info.inverse()).trace();
}

double fisher_utility(const Mat3& predicted_cov, std::size_t visible_selected,
                      std::size_t visible_full, const Mat3& measurement_cov) {
  if (visible_full == 0) return 0.0;
  const double z = information_gain_trace(predicted_cov, visible_full, measurement_cov);
  if (!(z > 0.0)) return 0.0;
  return information_gain_trace(predicted_cov, visible_selected, measurement_cov) / z;
}

CoverageGrid::CoverageGrid(double cell_deg) {
  const int rows = static_cast<int>(std::lround(180.0 / cell_deg));
  const int cols = static_cast<int>(std::lround(360.0 / cell_deg));
  if (rows <= 0 || std::abs(rows * cell_deg - 180.0) > 1e-9) {
    throw DomainError("CoverageGrid: cell size must divide 180 degrees");
  }
  const double h = cell_deg * kPi / 180.0;
  centers_.reserve(static_cast<std::size_t>(rows * cols));
  areas_.reserve(static_cast<std::size_t>(rows * cols));
  for (int r = 0; r < rows; ++r) {
    const double lo = -kPi / 2.0 + r * h;
    const double lat = lo + 0.5 * h;
    const double area = (std::sin(lo + h) - std::sin(lo)) * h / (4.0 * kPi);
    for (int c = 0; c < cols; ++c) {
      const double lon = -kPi + (c + 0.5) * h;
      centers_.push_back(surface_point(lat, lon));
      areas_.push_back(area);
    }
  }
}

double covered_fraction(const CoverageGrid& grid, std::span<const Vec3> sats, double fov_half_angle) {
  const auto lists = visibility_lists(sats, grid.centers(), fov_half_angle, Execution::kSerial);
  std::vector<char> hit(grid.size(), 0);
  for (const auto& l : lists) {
    for (auto c : l) hit[c] = 1;
  }
  double covered = 0.0;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    if (hit[c]) covered += grid.area_fractions()[c];
  }
  return covered;
}

namespace {

class FisherCursor final : public GainCursor {
 public:
  explicit FisherCursor(const FisherTask& task)
      : GainCursor(task.ground_size()), task_(task), counts_(task.point_count(), 0) {}
  double value() const override { return value_; }
  double gain(Element e) const override {
    double g = 0.0;
    for (auto p : task_.sees(e)) g += task_.table(p, counts_[p] + 1) - task_.table(p, counts_[p]);
    return g / task_.observable_count();
  }

 protected:
  void on_add(Element e) override {
    value_ += gain(e);
    for (auto p : task_.sees(e)) ++counts_[p];
  }

 private:
  const FisherTask& task_;
  std::vector<std::size_t> counts_;
  double value_ = 0.0;
};

}  // namespace

FisherTask::FisherTask(std::vector<std::vector<std::uint32_t>> sees,
                       std::vector<std::vector<double>> tables)
    : sees_(std::move(sees)), tables_(std::move(tables)) {
  if (tables_.empty()) throw DomainError("FisherTask: no points");
  std::vector<std::size_t> counts(tables_.size(), 0);
  for (const auto& s : sees_) {
    for (auto p : s) {
      if (p >= tables_.size()) throw DomainError("FisherTask: point index out of range");
      ++counts[p];
    }
  }
  for (std::size_t p = 0; p < tables_.size(); ++p) {
    if (tables_[p].size() != counts[p] + 1) throw DomainError("FisherTask: table size mismatch");
    if (counts[p] > 0) observable_ += 1.0;
  }
  observable_ = std::max(observable_, 1.0);
}

double FisherTask::evaluate(const Subset& s) const {
  std::vector<std::size_t> counts(tables_.size(), 0);
  s.for_each([&](Element e) {
    for (auto p : sees_[e]) ++counts[p];
  });
  double v = 0.0;
  for (std::size_t p = 0; p < tables_.size(); ++p) v += tables_[p][counts[p]];
  return v / observable_;
}

std::unique_ptr<GainCursor> FisherTask::cursor() const { return std::make_unique<FisherCursor>(*this); }

SatelliteScenario::SatelliteScenario(const ScenarioConfig& config, std::uint64_t seed)
    : config_(config), constellation_(config.constellation), grid_(config.cell_deg), rng_(seed) {
  if (config.tasks == 0 || config.points_per_task == 0) throw DomainError("scenario: no atmospheric points");
  if (!(config.step_seconds > 0.0)) throw DomainError("scenario: step length must be positive");
  if (!(config.lorenz_dt > 0.0)) throw DomainError("scenario: lorenz dt must be positive");
  ukf_.process_noise = config.process_noise * Mat3::Identity();
  ukf_.measurement_noise = config.measurement_noise * Mat3::Identity();

  for (std::size_t t = 0; t < config.tasks; ++t) {
    for (std::size_t k = 0; k < config.points_per_task; ++k) {
      GroundPoint p;
      p.latitude = std::asin(2.0 * uniform01(rng_) - 1.0);
      p.longitude = 2.0 * kPi * uniform01(rng_) - kPi;
      p.task_id = static_cast<int>(t + 1);
      points_.push_back(p);
      point_positions_.push_back(surface_point(p.latitude, p.longitude));
    }
  }
  // Truth starts on the attractor: random start plus burn-in.
  const double sd = std::sqrt(config.initial_variance);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    Vec3 s(standard_normal(rng_), standard_normal(rng_), 20.0 + standard_normal(rng_));
    for (int k = 0; k < 500; ++k) s = lorenz63_rk4(s, config.lorenz_dt, config.lorenz);
    truth_.push_back(s);
    FilterState f;
    f.mean = s + sd * Vec3(standard_normal(rng_), standard_normal(rng_), standard_normal(rng_));
    f.cov = config.initial_variance * Mat3::Identity();
    filters_.push_back(f);
  }
  prepare_step();
}

void SatelliteScenario::prepare_step() {
  const Dynamics dyn = [this](const Vec3& s) { return lorenz63_rk4(s, config_.lorenz_dt, config_.lorenz); };
  predicted_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    truth_[i] = dyn(truth_[i]);
    predicted_[i] = ukf_predict(filters_[i], dyn, ukf_);
  }
  sat_positions_ = constellation_.positions(time());
  const double fov = config_.constellation.fov_half_angle;
  sat_points_ = visibility_lists(sat_positions_, point_positions_, fov, config_.exec);
  sat_cells_ = visibility_lists(sat_positions_, grid_.centers(), fov, config_.exec);
}

void SatelliteScenario::advance() {
  std::vector<std::vector<Vec3>> measurements(points_.size());
  const double sd = std::sqrt(config_.measurement_noise);
  for (const auto& seen : sat_points_) {
    for (auto p : seen) {
      measurements[p].push_back(truth_[p] + sd * Vec3(standard_normal(rng_), standard_normal(rng_),
                                                       standard_normal(rng_)));
    }
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    filters_[i] = ukf_update(predicted_[i], measurements[i], ukf_);
  }
  ++step_;
  prepare_step();
}

std::shared_ptr<const TaskFamily> SatelliteScenario::task_family() const {
  const std::size_t sats = constellation_.size();
  const std::size_t ppt = config_.points_per_task;
  std::vector<std::size_t> full_counts(points_.size(), 0);
  for (const auto& seen : sat_points_) {
    for (auto p : seen) ++full_counts[p];
  }

  std::vector<SetFunctionPtr> tasks;
  for (std::size_t t = 0; t < config_.tasks; ++t) {
    std::vector<std::vector<std::uint32_t>> sees(sats);
    for (std::size_t s = 0; s < sats; ++s) {
      for (auto p : sat_points_[s]) {
        if (p / ppt == t) sees[s].push_back(static_cast<std::uint32_t>(p % ppt));
      }
    }
    std::vector<std::vector<double>> tables(ppt);
    for (std::size_t k = 0; k < ppt; ++k) {
      const std::size_t p = t * ppt + k;
      const std::size_t m_full = full_counts[p];
      tables[k].resize(m_full + 1);
      for (std::size_t m = 0; m <= m_full; ++m) {
        tables[k][m] = fisher_utility(predicted_[p].cov, m, m_full, ukf_.measurement_noise);
      }
    }
    tasks.push_back(std::make_shared<FisherTask>(std::move(sees), std::move(tables)));
  }

  std::vector<std::vector<std::size_t>> covers(sats);
  for (std::size_t s = 0; s < sats; ++s) covers[s].assign(sat_cells_[s].begin(), sat_cells_[s].end());
  std::vector<double> areas(grid_.area_fractions().begin(), grid_.area_fractions().end());
  auto coverage = std::make_shared<CoverageFunction>(std::move(covers), std::move(areas));
  if (coverage->evaluate(Subset::full(sats)) > 0.0) {
    tasks.push_back(normalize_task(coverage));
  } else {
    tasks.push_back(std::make_shared<ModularFunction>(std::vector<double>(sats, 0.0)));
  }
  return std::make_shared<const TaskFamily>(std::move(tasks));
}

void SatelliteScenario::write_trace(std::ostream& out) const {
  char buf[512];
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& f = predicted_[i];
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", step_, i,
                  points_[i].task_id, truth_[i].x(), truth_[i].y(), truth_[i].z(), f.mean.x(), f.mean.y(),
                  f.mean.z(), f.cov.trace());
    out << buf;
  }
}

std::shared_ptr<const TaskFamily> make_satellite_task_family(const SatelliteScenario& scenario) {
  return scenario.task_family();
}

}  // namespace robsub::satsim
