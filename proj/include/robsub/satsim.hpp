#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "robsub/objective.hpp"
#include "robsub/parallel.hpp"
#include "robsub/random.hpp"

namespace robsub::satsim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kMuEarth = 398600.4418;          // km^3 / s^2
inline constexpr double kEarthRotationRate = 7.2921150e-5;  // rad / s

// Walker-Delta pattern i:T/P/F.
struct WalkerDelta {
  double inclination = 75.0 * std::numbers::pi / 180.0;
  int total = 240;
  int planes = 12;
  int phasing = 1;
  double semi_major_axis_km = 8378.1;
  double fov_half_angle = std::numbers::pi / 6.0;
  double epoch_s = 0.0;
};

struct OrbitalSlot {
  double raan = 0.0;
  double arg_latitude = 0.0;  // at epoch
};

class Constellation {
 public:
  explicit Constellation(const WalkerDelta& params);

  std::size_t size() const { return slots_.size(); }
  const WalkerDelta& params() const { return params_; }
  const OrbitalSlot& slot(std::size_t sat) const { return slots_.at(sat); }
  double mean_motion() const { return mean_motion_; }
  double period() const { return 2.0 * std::numbers::pi / mean_motion_; }

  // Circular two-body motion, t seconds after epoch.
  Vec3 inertial_position(std::size_t sat, double t) const;
  // Earth-fixed frame (rotated by the sidereal angle since epoch).
  Vec3 position(std::size_t sat, double t) const;
  std::vector<Vec3> positions(double t) const;

 private:
  WalkerDelta params_;
  std::vector<OrbitalSlot> slots_;
  double mean_motion_;
};

Constellation build_constellation(const WalkerDelta& params);
Vec3 satellite_position(const Constellation& constellation, std::size_t sat, double t);

struct GroundPoint {
  double latitude = 0.0;
  double longitude = 0.0;
  int task_id = 1;
};

// Point on the spherical Earth, Earth-fixed coordinates in km.
Vec3 surface_point(double latitude, double longitude);

// Nadir-pointing closed cone of the given half-angle, with Earth occlusion.
bool is_visible(const Vec3& sat, const Vec3& point, double fov_half_angle);

// Earth-central angle of the footprint edge of a nadir cone.
double footprint_central_angle(double semi_major_axis_km, double fov_half_angle);

// For each satellite, ascending indices of the targets it sees.
std::vector<std::vector<std::uint32_t>> visibility_lists(std::span<const Vec3> sats,
                                                         std::span<const Vec3> targets,
                                                         double fov_half_angle, Execution exec);

// --- Atmosphere -------------------------------------------------------------

struct LorenzParams {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
};

Vec3 lorenz63_derivative(const Vec3& s, const LorenzParams& p);
Vec3 lorenz63_rk4(const Vec3& state, double dt, const LorenzParams& p);

struct FilterState {
  Vec3 mean = Vec3::Zero();
  Mat3 cov = Mat3::Identity();
};

struct UkfParams {
  double alpha = 1e-3;
  double beta = 2.0;
  double kappa = 0.0;
  Mat3 process_noise = 1e-2 * Mat3::Identity();
  Mat3 measurement_noise = Mat3::Identity();
};

using Dynamics = std::function<Vec3(const Vec3&)>;

FilterState ukf_predict(const FilterState& state, const Dynamics& dynamics, const UkfParams& params);
// Each measurement is a direct, independent observation of the state with
// covariance params.measurement_noise. No measurements: returns the input.
FilterState ukf_update(const FilterState& predicted, std::span<const Vec3> measurements,
                       const UkfParams& params);
FilterState ukf_step(const FilterState& state, const Dynamics& dynamics,
                     std::span<const Vec3> measurements, const UkfParams& params);

// Tr(P - (P^-1 + m R^-1)^-1).
double information_gain_trace(const Mat3& predicted_cov, std::size_t measurements,
                              const Mat3& measurement_cov);

// Utility of m of the m_full satellites that see a point, normalized by the
// full-set value; 0 when no satellite sees the point.
double fisher_utility(const Mat3& predicted_cov, std::size_t visible_selected,
                      std::size_t visible_full, const Mat3& measurement_cov);

// --- Coverage grid ----------------------------------------------------------

class CoverageGrid {
 public:
  explicit CoverageGrid(double cell_deg = 2.0);
  std::size_t size() const { return centers_.size(); }
  std::span<const Vec3> centers() const { return centers_; }
  // Spherical area of each cell as a fraction of the whole sphere.
  std::span<const double> area_fractions() const { return areas_; }

 private:
  std::vector<Vec3> centers_;
  std::vector<double> areas_;
};

// Area fraction of grid cells whose center is visible from at least one of sats.
double covered_fraction(const CoverageGrid& grid, std::span<const Vec3> sats, double fov_half_angle);

// --- Task oracles -----------------------------------------------------------

// Mean of the normalized per-point Fisher utility over the task's points that
// at least one satellite sees. Unseen points contribute nothing, so the full
// set scores 1 whenever any point is observable.
class FisherTask : public SetFunction {
 public:
  // sees[sat] lists the task-local point indices visible from sat.
  // tables[p][m] = utility of point p when m selected satellites see it.
  FisherTask(std::vector<std::vector<std::uint32_t>> sees, std::vector<std::vector<double>> tables);
  std::size_t ground_size() const override { return sees_.size(); }
  double evaluate(const Subset& s) const override;
  std::unique_ptr<GainCursor> cursor() const override;

  const std::vector<std::uint32_t>& sees(Element e) const { return sees_[e]; }
  double table(std::size_t point, std::size_t m) const { return tables_[point][m]; }
  std::size_t point_count() const { return tables_.size(); }
  // Points seen by at least one satellite (at least 1, to keep the mean defined).
  double observable_count() const { return observable_; }

 private:
  std::vector<std::vector<std::uint32_t>> sees_;
  std::vector<std::vector<double>> tables_;
  double observable_ = 0.0;
};

// --- Scenario ---------------------------------------------------------------

struct ScenarioConfig {
  WalkerDelta constellation;
  std::size_t tasks = 5;
  std::size_t points_per_task = 5;
  double step_seconds = 60.0;
  double lorenz_dt = 0.01;
  LorenzParams lorenz;
  double process_noise = 1e-2;
  double measurement_noise = 1.0;
  double initial_variance = 1.0;
  double cell_deg = 2.0;
  Execution exec = Execution::kParallel;
};

// Stepwise satellite sensing simulation. At step t the family exposes the
// five atmospheric tasks (built from the predicted covariances) and the
// coverage task; advance() then fuses the measurements of every satellite
// that sees each point and propagates to t+1.
class SatelliteScenario {
 public:
  SatelliteScenario(const ScenarioConfig& config, std::uint64_t seed);

  std::size_t step() const { return step_; }
  double time() const { return static_cast<double>(step_) * config_.step_seconds; }
  const ScenarioConfig& config() const { return config_; }
  const Constellation& constellation() const { return constellation_; }
  const std::vector<GroundPoint>& points() const { return points_; }
  const std::vector<Vec3>& truths() const { return truth_; }
  const std::vector<FilterState>& predicted() const { return predicted_; }
  const std::vector<FilterState>& filters() const { return filters_; }
  const std::vector<Vec3>& satellite_positions() const { return sat_positions_; }

  std::shared_ptr<const TaskFamily> task_family() const;
  void advance();

  // One CSV row per point: step,point,task,truth xyz,mean xyz,trace(P).
  void write_trace(std::ostream& out) const;

 private:
  void prepare_step();

  ScenarioConfig config_;
  Constellation constellation_;
  CoverageGrid grid_;
  UkfParams ukf_;
  Rng rng_;
  std::size_t step_ = 0;
  std::vector<GroundPoint> points_;
  std::vector<Vec3> point_positions_;
  std::vector<Vec3> truth_;
  std::vector<FilterState> filters_;    // posterior at the previous step
  std::vector<FilterState> predicted_;  // prior at the current step
  std::vector<Vec3> sat_positions_;
  std::vector<std::vector<std::uint32_t>> sat_points_;
  std::vector<std::vector<std::uint32_t>> sat_cells_;
};

// Six-task family for the scenario's current step.
std::shared_ptr<const TaskFamily> make_satellite_task_family(const SatelliteScenario& scenario);

}  // namespace robsub::satsim
