#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "robsub/errors.hpp"
#include "robsub/experiment.hpp"
#include "robsub/oracles.hpp"
#include "test_helpers.hpp"

using namespace robsub;
using namespace robsub::experiment;

namespace {

std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("robsub_" + name);
  std::filesystem::remove_all(p);
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("moving average") {
  const std::vector<double> x = {1, 2, 3, 4};
  CHECK(moving_average(x, 1) == x);
  CHECK(moving_average(x, 2) == std::vector<double>{1, 1.5, 2.5, 3.5});
  const std::vector<double> c(7, 0.3);
  for (double v : moving_average(c, 6)) CHECK(v == doctest::Approx(0.3));
  CHECK_THROWS_AS(moving_average(std::vector<double>{}, 2), DomainError);
  CHECK_THROWS_AS(moving_average(x, 0), DomainError);
}

TEST_CASE("criteria") {
  const auto q = make_distribution({0.2, 0.3, 0.5});
  const std::vector<double> same = {0.4, 0.4, 0.4};
  const auto c = evaluate_criteria(same, q, 0.1, 0.5);
  CHECK(c.reference == doctest::Approx(0.4));
  CHECK(c.worst_case == 0.4);
  CHECK(c.local_worst_case == doctest::Approx(0.4));
  CHECK(c.wall_time == 0.5);

  const std::vector<double> v = {0.1, 0.9, 0.5};
  const auto flat = evaluate_criteria(v, q, 1e6, 0.0);
  CHECK(std::abs(flat.local_worst_case - flat.reference) <= 1e-6);

  Rng rng(2);
  for (int k = 0; k < 20; ++k) {
    const auto qq = testing_support::random_distribution(rng, 3);
    const auto f = testing_support::random_values(rng, 3);
    const double lambda = 0.05 + uniform01(rng);
    const auto cr = evaluate_criteria(f, qq, lambda, 0.0);
    CHECK(cr.worst_case <= cr.local_worst_case);
    CHECK(cr.local_worst_case <= cr.reference);
    const auto grid = oracles::simplex_grid_minimum(f, qq.weights(), lambda, 1e-3);
    double f3 = 0.0;
    for (std::size_t i = 0; i < 3; ++i) f3 += grid.argmin[i] * f[i];
    CHECK(std::abs(cr.local_worst_case - f3) <= 5e-3);
  }
}

TEST_CASE("CSV writing sorts and round-trips") {
  const auto dir = temp_dir("csv");
  std::filesystem::create_directories(dir);
  const auto path = dir + "/x.csv";
  write_csv({{0, 0, "Local", 1, 0.1}}, path);
  CHECK(slurp(path) == "run,step,algorithm,criterion,value\n0,0,Local,1,0.10000000000000001\n");

  std::vector<ExperimentRecord> recs = {
      {1, 0, "Local", 2, 1.0 / 3.0}, {0, 3, "Saturate", 1, 2.0 / 7.0}, {0, 3, "Local", 3, 1e-300}, {0, 1, "Local", 1, 0.0}};
  write_csv(recs, path);
  const auto back = read_csv(path);
  REQUIRE(back.size() == 4);
  CHECK(back[0] == recs[3]);
  CHECK(back[1] == recs[2]);
  CHECK(back[2] == recs[1]);
  CHECK(back[3] == recs[0]);
  CHECK_THROWS_AS(write_csv({}, path), DomainError);
  CHECK_THROWS_AS(write_csv(recs, dir + "/no/such/dir/x.csv"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("config parsing") {
  const auto c = parse_config(R"({"runs": 3, "solver": {"k": 5, "lambda": 0.2},
                                  "scenario": {"total": 60, "planes": 6}})",
                              Suite::kSatsel);
  CHECK(c.runs == 3);
  CHECK(c.solver.k == 5);
  CHECK(c.solver.lambda == 0.2);
  CHECK(c.scenario.constellation.total == 60);
  CHECK(*c.solver.sample_size == 24);

  CHECK_THROWS_AS(parse_config(R"({"bogus": 1})", Suite::kSatsel), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"solver": {"K": 1}})", Suite::kSatsel), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"runs": 0})", Suite::kSatsel), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"runs": "many"})", Suite::kSatsel), ConfigError);
  CHECK_THROWS_AS(parse_config("{", Suite::kSatsel), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"suite": "swp"})", Suite::kSatsel), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"scenario": {"total": 61, "planes": 6}})", Suite::kSatsel), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"solver": {"alpha": 0.5}})", Suite::kSwp), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json", Suite::kSatsel), ConfigError);
  CHECK(parse_suite("imgsum") == Suite::kImgsum);
  CHECK_THROWS_AS(parse_suite("nope"), ConfigError);
}

TEST_CASE("satsel suite row counts and determinism") {
  auto c = parse_config(R"({"runs": 1, "steps": 1, "solver": {"k": 3},
                            "scenario": {"total": 24, "planes": 4, "phasing": 1}})",
                        Suite::kSatsel);
  c.output_dir = temp_dir("satsel");
  const auto out = run_suite(c);
  CHECK(out.records.size() == 3 * 4);
  std::size_t rows = 0;
  for (const auto& f : out.files) rows += read_csv(f).size();
  CHECK(rows == 3 * 4);
  for (const auto& r : out.records) {
    if (r.criterion == kWallTime) CHECK(r.value >= 0.0);
    else CHECK((r.value >= 0.0 && r.value <= 1.0 + 1e-12));
  }

  std::map<std::string, std::string> first;
  for (const auto& f : out.files) first[f] = slurp(f);
  run_suite(c);
  for (const auto& [f, text] : first) {
    if (f.find("walltime") == std::string::npos) CHECK(slurp(f) == text);
  }
  std::filesystem::remove_all(c.output_dir);
}

TEST_CASE("seed ladder") {
  auto c = parse_config(R"({"runs": 2, "steps": 2, "solver": {"k": 3},
                            "scenario": {"total": 24, "planes": 4}})",
                        Suite::kSwp);
  c.output_dir = temp_dir("ladder");
  const auto both = run_suite(c);
  c.runs = 1;
  c.seed += 1;
  const auto single = run_suite(c);
  std::vector<ExperimentRecord> tail;
  for (auto r : both.records) {
    if (r.run == 1 && r.criterion != kWallTime) {
      r.run = 0;
      tail.push_back(r);
    }
  }
  std::vector<ExperimentRecord> alone;
  for (const auto& r : single.records) {
    if (r.criterion != kWallTime) alone.push_back(r);
  }
  CHECK(tail == alone);
  std::filesystem::remove_all(c.output_dir);
}

TEST_CASE("unwritable output directory") {
  auto c = default_config(Suite::kSatsel);
  c.output_dir = "/proc/robsub_cannot_write_here";
  CHECK_THROWS_AS(run_suite(c), IoError);
}

TEST_CASE("shipped configs parse and name their suite") {
  std::size_t seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(ROBSUB_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    const std::string stem = entry.path().stem().string();
    const Suite suite = parse_suite(stem.substr(0, stem.find('_')));
    CAPTURE(stem);
    const ExperimentConfig c = load_config(entry.path().string(), suite);
    CHECK(c.suite == suite);
    ++seen;
  }
  CHECK(seen == 8);
}
