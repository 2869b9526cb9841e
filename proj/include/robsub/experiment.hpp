#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "robsub/objective.hpp"
#include "robsub/satsim.hpp"
#include "robsub/simplex.hpp"

namespace robsub::experiment {

enum class Suite { kSatsel, kSwp, kOnline, kImgsum, kVerify };

Suite parse_suite(const std::string& name);  // throws ConfigError
std::string suite_name(Suite suite);

// Metric ids used in the criterion column.
inline constexpr int kReferenceUtility = 1;   // sum_i Q_i f_i(S)
inline constexpr int kWorstTaskUtility = 2;   // min_i f_i(S)
inline constexpr int kLocalWorstCase = 3;     // sum_i P*_i f_i(S)
inline constexpr int kWallTime = 4;           // solver seconds
inline constexpr int kTopTaskUtility = 5;     // mean of the two highest-Q tasks (swp)
inline constexpr int kDistinctElements = 6;   // |union of played sets| (online)

struct SolverSettings {
  std::size_t k = 10;
  double lambda = 0.1;
  double epsilon = 0.1;
  std::optional<std::size_t> sample_size = 24;
  double alpha = 1.0;
  double gamma = 0.5;
  std::size_t window = 5;
  std::optional<double> bisection_floor;
};

struct ImgsumSettings {
  std::size_t count = 819;
  std::size_t dim = 64;
  std::string embeddings;  // CSV path; synthetic embeddings when empty
  std::size_t k_min = 2;
  std::size_t k_max = 12;
};

struct ExperimentConfig {
  Suite suite = Suite::kSatsel;
  std::size_t runs = 15;
  std::uint64_t seed = 1;
  std::string output_dir = "results";
  std::size_t steps = 25;
  bool parallel = true;
  bool trace = false;  // dump per-step filter traces (satellite suites)
  SolverSettings solver;
  satsim::ScenarioConfig scenario;
  ImgsumSettings imgsum;
};

ExperimentConfig default_config(Suite suite);
// JSON document; unknown keys and out-of-range values raise ConfigError.
ExperimentConfig parse_config(const std::string& json_text, Suite suite);
ExperimentConfig load_config(const std::string& path, Suite suite);
void validate(const ExperimentConfig& config);

struct ExperimentRecord {
  std::size_t run = 0;
  std::size_t step = 0;
  std::string algorithm;
  int criterion = 0;
  double value = 0.0;

  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

struct Criteria {
  double reference = 0.0;
  double worst_case = 0.0;
  double local_worst_case = 0.0;
  double wall_time = 0.0;
};

Criteria evaluate_criteria(std::span<const double> values, const SimplexDistribution& q, double lambda,
                           double elapsed);
Criteria evaluate_criteria(const TaskFamily& family, const SimplexDistribution& q, double lambda,
                           const Subset& s, double elapsed);

// Trailing mean over min(window, i+1) points.
std::vector<double> moving_average(std::span<const double> series, std::size_t window);

// Header run,step,algorithm,criterion,value; 17 significant digits; rows sorted.
void write_csv(std::vector<ExperimentRecord> records, const std::string& path);
std::vector<ExperimentRecord> read_csv(const std::string& path);

// Uniform sample from the simplex.
SimplexDistribution sample_reference(std::size_t n, std::uint64_t seed);

struct SuiteOutput {
  std::vector<ExperimentRecord> records;
  std::vector<std::string> files;
};

// Runs every configured run and writes one CSV per algorithm (criteria other
// than wall time) plus one <suite>_<algorithm>_walltime.csv per algorithm.
SuiteOutput run_suite(const ExperimentConfig& config);

}  // namespace robsub::experiment
