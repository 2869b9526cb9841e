// Acceptance battery: one PASS/FAIL line per criterion, nonzero exit on failure.
// Set ROBSUB_ACCEPTANCE_DIR to keep the CSV output somewhere other than a temp dir.

#include <Eigen/Cholesky>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "robsub/experiment.hpp"
#include "robsub/imgsum.hpp"
#include "robsub/objective.hpp"
#include "robsub/random.hpp"
#include "robsub/satsim.hpp"
#include "robsub/solver.hpp"
#include "robsub/verify.hpp"

namespace fs = std::filesystem;
using namespace robsub;
using experiment::ExperimentConfig;
using experiment::ExperimentRecord;
using experiment::Suite;

namespace {

constexpr std::uint64_t kSeed = 20240601;
// Utilities are normalized to [0, 1]; a 1/n stop width would end the bisection
// above the levels that K of |N| satellites can reach.
constexpr double kBisectionFloor = 1e-3;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string format(const char* f, double a = 0, double b = 0, double c = 0, double d = 0) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

fs::path work_root() {
  if (const char* dir = std::getenv("ROBSUB_ACCEPTANCE_DIR")) return dir;
  return fs::temp_directory_path() / "robsub_acceptance";
}

Outcome from_check(const verify::CheckResult& r, double time_limit = 0.0) {
  Outcome o{r.passed, r.detail};
  if (time_limit > 0.0) {
    const bool fast = r.seconds < time_limit;
    o.passed = o.passed && fast;
    o.detail += format("; %.1f s (limit %.0f s)", r.seconds, time_limit);
  }
  return o;
}

// Desk-scale scenario shared by the satellite criteria.
satsim::ScenarioConfig desk_scenario() {
  satsim::ScenarioConfig s;
  s.constellation.total = 60;
  s.constellation.planes = 6;
  s.constellation.phasing = 1;
  return s;
}

ExperimentConfig desk_config(Suite suite, const std::string& dir) {
  ExperimentConfig c = experiment::default_config(suite);
  c.seed = kSeed;
  c.output_dir = (work_root() / dir).string();
  c.scenario = desk_scenario();
  c.solver.k = 5;
  c.solver.bisection_floor = kBisectionFloor;
  return c;
}

// values[alg][run][step] for one criterion.
using Table = std::map<std::string, std::map<std::size_t, std::map<std::size_t, double>>>;

Table tabulate(const std::vector<ExperimentRecord>& records, int criterion) {
  Table t;
  for (const auto& r : records) {
    if (r.criterion == criterion) t[r.algorithm][r.run][r.step] = r.value;
  }
  return t;
}

double mean_over_steps(const std::map<std::size_t, double>& steps) {
  double s = 0.0;
  for (const auto& [step, v] : steps) s += v;
  return steps.empty() ? 0.0 : s / static_cast<double>(steps.size());
}

double grand_mean(const std::map<std::size_t, std::map<std::size_t, double>>& runs) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& [run, steps] : runs) {
    for (const auto& [step, v] : steps) {
      s += v;
      ++n;
    }
  }
  return n == 0 ? 0.0 : s / static_cast<double>(n);
}

double grand_total(const std::map<std::size_t, std::map<std::size_t, double>>& runs) {
  double s = 0.0;
  for (const auto& [run, steps] : runs) {
    for (const auto& [step, v] : steps) s += v;
  }
  return s;
}

// --- Independent saturation reference --------------------------------------
// Plain re-statement of the saturation bisection with whole-set evaluations:
// truncated mean (1/n) sum min(f_i, c), greedy cover up to budget + 1
// elements, bisection on [min(0, min f(empty)), min f(N)] to width 1/n.
std::vector<Element> reference_saturate(const TaskFamily& family, std::size_t k) {
  const std::size_t n = family.size();
  const std::size_t ground = family.ground_size();
  auto truncated = [&](const Subset& s, double c) {
    const TaskValues v = family.values(s);
    double sum = 0.0;
    for (double x : v) sum += std::min(x, c);
    return sum / static_cast<double>(n);
  };
  auto min_of = [](const TaskValues& v) {
    double m = std::numeric_limits<double>::infinity();
    for (double x : v) m = std::min(m, x);
    return m;
  };
  double hi = min_of(family.values(Subset::full(ground)));
  std::vector<Element> best;
  if (!(hi > 0.0)) return best;
  double lo = std::min(0.0, min_of(family.values(Subset(ground))));
  const double width = 1.0 / static_cast<double>(n);
  while (hi - lo >= width) {
    const double c = 0.5 * (lo + hi);
    Subset s(ground);
    std::vector<Element> order;
    bool saturated = false;
    while (true) {
      const double now = truncated(s, c);
      if (now >= c - 1e-9) {
        saturated = true;
        break;
      }
      if (s.size() > k) break;
      double top = -std::numeric_limits<double>::infinity();
      Element pick = ground;
      for (Element e = 0; e < ground; ++e) {
        if (s.contains(e)) continue;
        const double g = truncated(s.with(e), c) - now;
        if (g > top) {
          top = g;
          pick = e;
        }
      }
      if (pick == ground || !(top > 0.0)) break;
      s.insert(pick);
      order.push_back(pick);
    }
    if (saturated && s.size() <= k) {
      lo = c;
      best = order;
    } else {
      hi = c;
    }
  }
  return best;
}

std::shared_ptr<const TaskFamily> random_facility_family(Rng& rng, std::size_t items, std::size_t tasks) {
  std::vector<double> d(items * items, 0.0);
  for (std::size_t i = 0; i < items; ++i) {
    for (std::size_t j = i + 1; j < items; ++j) d[i * items + j] = d[j * items + i] = uniform01(rng);
  }
  auto dm = std::make_shared<const imgsum::DistanceMatrix>(items, std::move(d));
  std::vector<SetFunctionPtr> fs;
  for (std::size_t i = 0; i < tasks; ++i) fs.push_back(std::make_shared<imgsum::FacilityTask>(dm, uniform_index(rng, items)));
  return std::make_shared<const TaskFamily>(std::move(fs));
}

// --- Criteria ---------------------------------------------------------------

Outcome criterion1() { return from_check(verify::check_dual_equivalence(200, kSeed), 120.0); }

Outcome criterion2() { return from_check(verify::check_sandwich_bounds(200, kSeed + 1)); }

Outcome criterion3() { return from_check(verify::check_decomposition(10000, 10000, kSeed + 2)); }

Outcome criterion4() { return from_check(verify::check_stochastic_guarantee(50, kSeed + 3), 60.0); }

Outcome criterion5() {
  const auto sg = verify::check_greedy_degeneracy(20, kSeed + 4);
  std::size_t mismatches = 0;
  Rng rng(kSeed + 5);
  for (std::size_t inst = 0; inst < 20; ++inst) {
    const std::size_t items = 8 + uniform_index(rng, 5);
    const std::size_t tasks = 2 + uniform_index(rng, 4);
    const std::size_t k = 2 + uniform_index(rng, 3);
    auto family = random_facility_family(rng, items, tasks);
    SaturationConfig cfg;
    cfg.lambda = 0.0;
    const auto lib = saturate_with_preference(family, k, cfg);
    if (lib.order != reference_saturate(*family, k)) ++mismatches;
  }
  Outcome o;
  o.passed = sg.passed && mismatches == 0;
  o.detail = sg.detail + format("; SwP(lambda=0) vs reference SSA: %g mismatches over 20 instances",
                                static_cast<double>(mismatches));
  return o;
}

Outcome criterion6() {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig c = desk_config(Suite::kSatsel, "satsel");
  c.runs = 5;
  c.steps = 10;
  const auto out = experiment::run_suite(c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const Table c1 = tabulate(out.records, experiment::kReferenceUtility);
  const Table c3 = tabulate(out.records, experiment::kLocalWorstCase);
  const Table c4 = tabulate(out.records, experiment::kWallTime);
  std::size_t wins = 0;
  for (std::size_t run = 0; run < c.runs; ++run) {
    if (mean_over_steps(c3.at("Local").at(run)) >= mean_over_steps(c3.at("Reference").at(run))) ++wins;
  }
  const double win_rate = static_cast<double>(wins) / static_cast<double>(c.runs);
  const double local_c1 = grand_mean(c1.at("Local"));
  const double ref_c1 = grand_mean(c1.at("Reference"));
  const double rel = std::abs(local_c1 - ref_c1) / ref_c1;
  const double time_ratio = grand_total(c4.at("Saturate")) / grand_total(c4.at("Local"));

  Outcome o;
  o.passed = win_rate >= 0.7 && rel <= 0.1 && time_ratio >= 3.0 && secs < 600.0;
  o.detail = format("Local>=Reference on C3 in %.0f%% of runs; C1 gap %.2f%%; Saturate/Local time %.1fx; %.0f s",
                    100.0 * win_rate, 100.0 * rel, time_ratio, secs);
  return o;
}

Outcome criterion7() {
  ExperimentConfig c = desk_config(Suite::kSwp, "swp");
  c.runs = 15;
  c.steps = 10;
  c.solver.lambda = 0.1;
  const auto out = experiment::run_suite(c);
  const Table top = tabulate(out.records, experiment::kTopTaskUtility);
  std::size_t wins = 0;
  double swp_mean = 0.0;
  double ssa_mean = 0.0;
  for (std::size_t run = 0; run < c.runs; ++run) {
    const double a = mean_over_steps(top.at("SwP").at(run));
    const double b = mean_over_steps(top.at("Saturate").at(run));
    swp_mean += a / static_cast<double>(c.runs);
    ssa_mean += b / static_cast<double>(c.runs);
    if (a > b) ++wins;
  }
  const double rate = static_cast<double>(wins) / static_cast<double>(c.runs);
  return {rate >= 0.6, format("SwP beats SSA on top-2-Q utility in %g/15 runs (%.0f%%); means %.4f vs %.4f",
                              static_cast<double>(wins), 100.0 * rate, swp_mean, ssa_mean)};
}

Outcome criterion8() {
  ExperimentConfig c = desk_config(Suite::kOnline, "online");
  c.runs = 5;
  c.steps = 25;
  c.solver.window = 5;
  const auto out = experiment::run_suite(c);
  const Table c1 = tabulate(out.records, experiment::kReferenceUtility);
  const Table distinct = tabulate(out.records, experiment::kDistinctElements);
  const double cap = std::ceil(25.0 / 5.0) * static_cast<double>(c.solver.k);
  double tr_max = 0.0;
  double tr_mean = 0.0;
  double reg_mean = 0.0;
  for (std::size_t run = 0; run < c.runs; ++run) {
    const double tr = distinct.at("TR").at(run).rbegin()->second;
    const double reg = distinct.at("Regular").at(run).rbegin()->second;
    tr_max = std::max(tr_max, tr);
    tr_mean += tr / static_cast<double>(c.runs);
    reg_mean += reg / static_cast<double>(c.runs);
  }
  const double tr_util = grand_mean(c1.at("TR"));
  const double reg_util = grand_mean(c1.at("Regular"));
  Outcome o;
  o.passed = tr_max <= cap && tr_mean <= 0.75 * reg_mean && tr_util >= 0.8 * reg_util;
  o.detail = format("TR distinct max %g (cap %g), mean %.1f vs baseline %.1f", tr_max, cap, tr_mean, reg_mean) +
             format("; utility %.4f vs %.4f", tr_util, reg_util);
  return o;
}

Outcome criterion9() {
  ExperimentConfig c = experiment::default_config(Suite::kImgsum);
  c.seed = kSeed;
  c.output_dir = (work_root() / "imgsum").string();
  c.runs = 15;
  c.solver.bisection_floor = kBisectionFloor;
  c.imgsum.count = 819;
  c.imgsum.dim = 64;
  c.imgsum.k_min = 2;
  c.imgsum.k_max = 12;
  const auto out = experiment::run_suite(c);
  const Table c1 = tabulate(out.records, experiment::kReferenceUtility);
  const Table c3 = tabulate(out.records, experiment::kLocalWorstCase);
  std::size_t good = 0;
  std::size_t total = 0;
  for (std::size_t run = 0; run < c.runs; ++run) {
    for (std::size_t k = 6; k <= c.imgsum.k_max; ++k) {
      const bool ok = c1.at("Local").at(run).at(k) >= c1.at("Saturate").at(run).at(k) &&
                      c3.at("Local").at(run).at(k) >= c3.at("Saturate").at(run).at(k);
      good += ok ? 1 : 0;
      ++total;
    }
  }
  const double rate = static_cast<double>(good) / static_cast<double>(total);
  return {rate >= 0.7, format("Local >= Saturate on C1 and C3 in %g/%g (seed, K>=6) pairs (%.0f%%)",
                              static_cast<double>(good), static_cast<double>(total), 100.0 * rate)};
}

bool spd(const satsim::Mat3& m) {
  if (!m.isApprox(m.transpose(), 1e-9)) return false;
  Eigen::LLT<satsim::Mat3> llt(m);
  return llt.info() == Eigen::Success;
}

Outcome criterion10() {
  const auto rk4 = verify::check_rk4_order();
  const auto ukf = verify::check_ukf_vs_kalman(200, kSeed + 6);
  const auto cap = verify::check_coverage_cap();

  std::size_t checked = 0;
  std::size_t bad = 0;
  auto sweep = [&](const satsim::ScenarioConfig& cfg, std::uint64_t seed, std::size_t steps) {
    satsim::SatelliteScenario sc(cfg, seed);
    for (std::size_t t = 0; t < steps; ++t) {
      if (t > 0) sc.advance();
      for (const auto& f : sc.predicted()) {
        ++checked;
        bad += spd(f.cov) ? 0 : 1;
      }
      for (const auto& f : sc.filters()) {
        ++checked;
        bad += spd(f.cov) ? 0 : 1;
      }
    }
  };
  for (std::uint64_t s = 0; s < 5; ++s) sweep(desk_scenario(), mix_seed(kSeed, s), 25);
  sweep(satsim::ScenarioConfig{}, kSeed, 25);

  Outcome o;
  o.passed = rk4.passed && ukf.passed && cap.passed && bad == 0;
  o.detail = rk4.detail + "; " + ukf.detail + "; " + cap.detail +
             format("; %g/%g covariances SPD", static_cast<double>(checked - bad), static_cast<double>(checked));
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome criterion11() {
  std::vector<ExperimentConfig> configs;
  for (Suite s : {Suite::kSatsel, Suite::kSwp, Suite::kOnline}) {
    ExperimentConfig c = desk_config(s, "");
    c.runs = 2;
    c.steps = 10;
    configs.push_back(c);
  }
  ExperimentConfig img = experiment::default_config(Suite::kImgsum);
  img.seed = kSeed;
  img.runs = 2;
  img.imgsum.count = 200;
  img.imgsum.dim = 16;
  img.imgsum.k_max = 6;
  configs.push_back(img);

  std::size_t files = 0;
  std::size_t differing = 0;
  for (auto& c : configs) {
    std::vector<std::vector<std::string>> contents;
    for (const char* pass : {"a", "b"}) {
      c.output_dir = (work_root() / "determinism" / (experiment::suite_name(c.suite) + "_" + pass)).string();
      fs::remove_all(c.output_dir);
      const auto out = experiment::run_suite(c);
      std::vector<std::string> blobs;
      for (const auto& f : out.files) blobs.push_back(fs::path(f).filename().string() + "\n" + slurp(f));
      contents.push_back(std::move(blobs));
    }
    // Wall-time files hold measured durations, so only the criterion files must match.
    for (std::size_t i = 0; i < contents[0].size(); ++i) {
      if (contents[0][i].find("_walltime.csv") != std::string::npos) continue;
      ++files;
      if (i >= contents[1].size() || contents[0][i] != contents[1][i]) ++differing;
    }
    if (contents[0].size() != contents[1].size()) ++differing;
  }
  return {differing == 0 && files > 0,
          format("%g CSV files compared across 4 suites, %g differ", static_cast<double>(files),
                 static_cast<double>(differing))};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 dual equivalence", criterion1},
      {"2 sandwich and limit bounds", criterion2},
      {"3 decomposition G = g(h)", criterion3},
      {"4 stochastic greedy guarantee", criterion4},
      {"5 degeneracy equivalences", criterion5},
      {"6 satellite selection (desk scale)", criterion6},
      {"7 preference vs saturation", criterion7},
      {"8 online time-robust", criterion8},
      {"9 image summarization", criterion9},
      {"10 simulator numerics", criterion10},
      {"11 determinism", criterion11},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %s: %s\n", o.passed ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += o.passed ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
