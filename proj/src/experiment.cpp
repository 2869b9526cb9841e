#include "robsub/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "robsub/errors.hpp"
#include "robsub/imgsum.hpp"
#include "robsub/random.hpp"
#include "robsub/solver.hpp"

namespace robsub::experiment {

using nlohmann::json;

Suite parse_suite(const std::string& name) {
  if (name == "satsel") return Suite::kSatsel;
  if (name == "swp") return Suite::kSwp;
  if (name == "online") return Suite::kOnline;
  if (name == "imgsum") return Suite::kImgsum;
  if (name == "verify") return Suite::kVerify;
  throw ConfigError("unknown suite '" + name + "'");
}

std::string suite_name(Suite suite) {
  switch (suite) {
    case Suite::kSatsel: return "satsel";
    case Suite::kSwp: return "swp";
    case Suite::kOnline: return "online";
    case Suite::kImgsum: return "imgsum";
    case Suite::kVerify: return "verify";
  }
  return "unknown";
}

ExperimentConfig default_config(Suite suite) {
  ExperimentConfig c;
  c.suite = suite;
  if (suite == Suite::kImgsum) {
    c.solver.sample_size.reset();
  }
  return c;
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!keys.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <class T>
void read_optional(const json& obj, const char* key, std::optional<T>& out, const std::string& where) {
  if (!obj.contains(key)) return;
  if (obj.at(key).is_null()) {
    out.reset();
    return;
  }
  T v{};
  read(obj, key, v, where);
  out = v;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void validate(const ExperimentConfig& c) {
  require(c.runs >= 1, "runs must be positive");
  require(c.steps >= 1, "steps must be positive");
  require(c.solver.k >= 1, "solver.k must be positive");
  require(c.solver.lambda > 0.0, "solver.lambda must be positive");
  require(c.solver.epsilon > 0.0 && c.solver.epsilon < 1.0, "solver.epsilon must lie in (0,1)");
  require(!c.solver.sample_size || *c.solver.sample_size >= 1, "solver.sample_size must be positive");
  require(c.solver.alpha >= 1.0, "solver.alpha must be >= 1");
  require(c.solver.gamma >= 0.0 && c.solver.gamma <= 1.0, "solver.gamma must lie in [0,1]");
  require(c.solver.window >= 1, "solver.window must be positive");
  require(!c.solver.bisection_floor || *c.solver.bisection_floor > 0.0, "solver.bisection_floor must be positive");
  const auto& w = c.scenario.constellation;
  require(w.total >= 1 && w.planes >= 1 && w.total % w.planes == 0, "scenario: total must be a multiple of planes");
  require(w.phasing >= 0 && w.phasing < w.planes, "scenario.phasing must lie in [0, planes)");
  require(w.semi_major_axis_km > satsim::kEarthRadiusKm, "scenario.semi_major_axis_km must exceed Earth radius");
  require(w.fov_half_angle > 0.0 && w.fov_half_angle < std::numbers::pi / 2, "scenario.fov_half_angle_rad out of range");
  require(c.scenario.tasks >= 1 && c.scenario.points_per_task >= 1, "scenario: need atmospheric points");
  require(c.scenario.step_seconds > 0.0 && c.scenario.lorenz_dt > 0.0, "scenario: time steps must be positive");
  require(c.scenario.process_noise > 0.0 && c.scenario.measurement_noise > 0.0 && c.scenario.initial_variance > 0.0,
          "scenario: noise levels must be positive");
  require(c.imgsum.count >= 2 && c.imgsum.dim >= 1, "imgsum: count >= 2 and dim >= 1 required");
  require(c.imgsum.k_min >= 1 && c.imgsum.k_min <= c.imgsum.k_max, "imgsum: need 1 <= k_min <= k_max");
  if (c.suite == Suite::kSatsel || c.suite == Suite::kSwp || c.suite == Suite::kOnline) {
    require(c.solver.k <= static_cast<std::size_t>(w.total), "solver.k exceeds constellation size");
  }
  if (c.suite == Suite::kOnline) require(c.steps >= c.solver.window, "online: steps must be >= window");
  if (c.suite == Suite::kImgsum && c.imgsum.embeddings.empty()) {
    require(c.imgsum.k_max <= c.imgsum.count, "imgsum: k_max exceeds image count");
  }
}

ExperimentConfig parse_config(const std::string& json_text, Suite suite) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c = default_config(suite);
  reject_unknown(doc, {"suite", "runs", "seed", "output_dir", "steps", "parallel", "trace", "solver", "scenario", "imgsum"},
                 "config");
  if (doc.contains("suite")) {
    std::string name;
    read(doc, "suite", name, "config");
    if (parse_suite(name) != suite) throw ConfigError("config is for suite '" + name + "', not '" + suite_name(suite) + "'");
  }
  read(doc, "runs", c.runs, "config");
  read(doc, "seed", c.seed, "config");
  read(doc, "output_dir", c.output_dir, "config");
  read(doc, "steps", c.steps, "config");
  read(doc, "parallel", c.parallel, "config");
  read(doc, "trace", c.trace, "config");

  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    reject_unknown(s, {"k", "lambda", "epsilon", "sample_size", "alpha", "gamma", "window", "bisection_floor"}, "solver");
    read(s, "k", c.solver.k, "solver");
    read(s, "lambda", c.solver.lambda, "solver");
    read(s, "epsilon", c.solver.epsilon, "solver");
    read_optional(s, "sample_size", c.solver.sample_size, "solver");
    read(s, "alpha", c.solver.alpha, "solver");
    read(s, "gamma", c.solver.gamma, "solver");
    read(s, "window", c.solver.window, "solver");
    read_optional(s, "bisection_floor", c.solver.bisection_floor, "solver");
  }
  if (doc.contains("scenario")) {
    const json& s = doc.at("scenario");
    reject_unknown(s, {"inclination_deg", "total", "planes", "phasing", "semi_major_axis_km", "fov_half_angle_rad",
                       "tasks", "points_per_task", "step_seconds", "lorenz_dt", "process_noise", "measurement_noise",
                       "initial_variance", "cell_deg"},
                   "scenario");
    auto& w = c.scenario.constellation;
    double incl_deg = w.inclination * 180.0 / std::numbers::pi;
    read(s, "inclination_deg", incl_deg, "scenario");
    w.inclination = incl_deg * std::numbers::pi / 180.0;
    read(s, "total", w.total, "scenario");
    read(s, "planes", w.planes, "scenario");
    read(s, "phasing", w.phasing, "scenario");
    read(s, "semi_major_axis_km", w.semi_major_axis_km, "scenario");
    read(s, "fov_half_angle_rad", w.fov_half_angle, "scenario");
    read(s, "tasks", c.scenario.tasks, "scenario");
    read(s, "points_per_task", c.scenario.points_per_task, "scenario");
    read(s, "step_seconds", c.scenario.step_seconds, "scenario");
    read(s, "lorenz_dt", c.scenario.lorenz_dt, "scenario");
    read(s, "process_noise", c.scenario.process_noise, "scenario");
    read(s, "measurement_noise", c.scenario.measurement_noise, "scenario");
    read(s, "initial_variance", c.scenario.initial_variance, "scenario");
    read(s, "cell_deg", c.scenario.cell_deg, "scenario");
  }
  if (doc.contains("imgsum")) {
    const json& s = doc.at("imgsum");
    reject_unknown(s, {"count", "dim", "embeddings", "k_min", "k_max"}, "imgsum");
    read(s, "count", c.imgsum.count, "imgsum");
    read(s, "dim", c.imgsum.dim, "imgsum");
    read(s, "embeddings", c.imgsum.embeddings, "imgsum");
    read(s, "k_min", c.imgsum.k_min, "imgsum");
    read(s, "k_max", c.imgsum.k_max, "imgsum");
  }
  c.scenario.exec = c.parallel ? Execution::kParallel : Execution::kSerial;
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path, Suite suite) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), suite);
}

Criteria evaluate_criteria(std::span<const double> values, const SimplexDistribution& q, double lambda,
                           double elapsed) {
  Criteria c;
  c.reference = aggregate(values, q, AggregateMode::weighted_average());
  c.worst_case = aggregate(values, q, AggregateMode::worst_case());
  const SimplexDistribution p = local_worst_case(values, q, lambda);
  for (std::size_t i = 0; i < values.size(); ++i) c.local_worst_case += p[i] * values[i];
  // P* lies between the worst-case vertex and Q, so F2 <= F3 <= F1 up to rounding.
  c.local_worst_case = std::clamp(c.local_worst_case, c.worst_case, std::max(c.worst_case, c.reference));
  c.wall_time = elapsed;
  return c;
}

Criteria evaluate_criteria(const TaskFamily& family, const SimplexDistribution& q, double lambda, const Subset& s,
                           double elapsed) {
  return evaluate_criteria(family.values(s), q, lambda, elapsed);
}

std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
  if (series.empty()) throw DomainError("moving_average: empty series");
  if (window == 0) throw DomainError("moving_average: window must be positive");
  std::vector<double> out(series.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    sum += series[i];
    if (i >= window) sum -= series[i - window];
    out[i] = sum / static_cast<double>(std::min(window, i + 1));
  }
  return out;
}

void write_csv(std::vector<ExperimentRecord> records, const std::string& path) {
  if (records.empty()) throw DomainError("write_csv: no records");
  std::sort(records.begin(), records.end(), [](const ExperimentRecord& a, const ExperimentRecord& b) {
    return std::tie(a.run, a.step, a.algorithm, a.criterion) < std::tie(b.run, b.step, b.algorithm, b.criterion);
  });
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "run,step,algorithm,criterion,value\n";
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.value);
    out << r.run << ',' << r.step << ',' << r.algorithm << ',' << r.criterion << ',' << buf << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<ExperimentRecord> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "run,step,algorithm,criterion,value") {
    throw FormatError("'" + path + "': missing CSV header");
  }
  std::vector<ExperimentRecord> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string run, step, alg, crit, value;
    if (!std::getline(ss, run, ',') || !std::getline(ss, step, ',') || !std::getline(ss, alg, ',') ||
        !std::getline(ss, crit, ',') || !std::getline(ss, value)) {
      throw FormatError("'" + path + "': malformed row " + std::to_string(row));
    }
    try {
      out.push_back({std::stoull(run), std::stoull(step), alg, std::stoi(crit), std::stod(value)});
    } catch (const std::exception&) {
      throw FormatError("'" + path + "': malformed row " + std::to_string(row));
    }
  }
  return out;
}

SimplexDistribution sample_reference(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> w(n);
  for (auto& x : w) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    x = -std::log(u);
  }
  return make_distribution(std::move(w));
}

namespace {

using Clock = std::chrono::steady_clock;

struct RunContext {
  const ExperimentConfig& config;
  std::size_t run;
  std::uint64_t seed;
  std::vector<ExperimentRecord>& records;

  void criteria(std::size_t step, const std::string& alg, const Criteria& c) const {
    records.push_back({run, step, alg, kReferenceUtility, c.reference});
    records.push_back({run, step, alg, kWorstTaskUtility, c.worst_case});
    records.push_back({run, step, alg, kLocalWorstCase, c.local_worst_case});
    records.push_back({run, step, alg, kWallTime, c.wall_time});
  }
  void metric(std::size_t step, const std::string& alg, int id, double v) const {
    records.push_back({run, step, alg, id, v});
  }
  Execution exec() const { return config.parallel ? Execution::kParallel : Execution::kSerial; }
  StochasticGreedyOptions sampling(std::size_t step) const {
    StochasticGreedyOptions o;
    o.epsilon = config.solver.epsilon;
    o.sample_size = config.solver.sample_size;
    o.seed = mix_seed(seed, 100 + step);
    o.exec = exec();
    return o;
  }
  SaturationConfig saturation(double lambda, const SimplexDistribution& q) const {
    SaturationConfig s;
    s.lambda = lambda;
    s.reference = q;
    s.alpha = config.solver.alpha;
    s.bisection_floor = config.solver.bisection_floor;
    s.exec = exec();
    return s;
  }
};

std::unique_ptr<std::ofstream> open_trace(const ExperimentConfig& c, std::size_t run) {
  if (!c.trace) return nullptr;
  const auto path = std::filesystem::path(c.output_dir) /
                    (suite_name(c.suite) + "_trace_run" + std::to_string(run) + ".csv");
  auto out = std::make_unique<std::ofstream>(path);
  if (!*out) throw IoError("cannot write '" + path.string() + "'");
  *out << "step,point,task,truth_x,truth_y,truth_z,mean_x,mean_y,mean_z,cov_trace\n";
  return out;
}

void run_satsel(const RunContext& ctx) {
  const auto& c = ctx.config;
  const SimplexDistribution q = sample_reference(c.scenario.tasks + 1, mix_seed(ctx.seed, 0));
  satsim::SatelliteScenario scenario(c.scenario, mix_seed(ctx.seed, 1));
  auto trace = open_trace(c, ctx.run);
  const double lambda = c.solver.lambda;
  for (std::size_t t = 0; t < c.steps; ++t) {
    if (t > 0) scenario.advance();
    if (trace) scenario.write_trace(*trace);
    auto family = scenario.task_family();
    const AggregateObjective local(family, q, AggregateMode::kl_robust(lambda));
    const AggregateObjective reference(family, q, AggregateMode::weighted_average());

    const auto r_local = stochastic_greedy(local, c.solver.k, ctx.sampling(t));
    ctx.criteria(t, "Local", evaluate_criteria(*family, q, lambda, r_local.selection, r_local.wall_time));
    const auto r_sat = saturate_with_preference(family, c.solver.k, ctx.saturation(0.0, q));
    ctx.criteria(t, "Saturate", evaluate_criteria(*family, q, lambda, r_sat.selection, r_sat.wall_time));
    const auto r_ref = stochastic_greedy(reference, c.solver.k, ctx.sampling(t));
    ctx.criteria(t, "Reference", evaluate_criteria(*family, q, lambda, r_ref.selection, r_ref.wall_time));
  }
}

double top_two_utility(const TaskValues& v, const SimplexDistribution& q) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return q[a] > q[b]; });
  if (idx.size() == 1) return v[idx[0]];
  return 0.5 * (v[idx[0]] + v[idx[1]]);
}

void run_swp(const RunContext& ctx) {
  const auto& c = ctx.config;
  const SimplexDistribution q = sample_reference(c.scenario.tasks + 1, mix_seed(ctx.seed, 0));
  satsim::SatelliteScenario scenario(c.scenario, mix_seed(ctx.seed, 1));
  auto trace = open_trace(c, ctx.run);
  const double lambda = c.solver.lambda;
  for (std::size_t t = 0; t < c.steps; ++t) {
    if (t > 0) scenario.advance();
    if (trace) scenario.write_trace(*trace);
    auto family = scenario.task_family();
    const auto r_swp = saturate_with_preference(family, c.solver.k, ctx.saturation(lambda, q));
    const auto r_ssa = saturate_with_preference(family, c.solver.k, ctx.saturation(0.0, q));
    for (const auto& [alg, res] : {std::pair<std::string, const SolverResult*>{"SwP", &r_swp}, {"Saturate", &r_ssa}}) {
      const TaskValues v = family->values(res->selection);
      ctx.criteria(t, alg, evaluate_criteria(v, q, lambda, res->wall_time));
      ctx.metric(t, alg, kTopTaskUtility, top_two_utility(v, q));
    }
  }
}

void run_online(const RunContext& ctx) {
  const auto& c = ctx.config;
  const SimplexDistribution q = sample_reference(c.scenario.tasks + 1, mix_seed(ctx.seed, 0));
  satsim::SatelliteScenario scenario(c.scenario, mix_seed(ctx.seed, 1));
  auto trace = open_trace(c, ctx.run);
  std::vector<std::shared_ptr<const TaskFamily>> families;
  std::vector<SetFunctionPtr> stream;
  for (std::size_t t = 0; t < c.steps; ++t) {
    if (t > 0) scenario.advance();
    if (trace) scenario.write_trace(*trace);
    families.push_back(scenario.task_family());
    stream.push_back(std::make_shared<AggregateObjective>(families.back(), q, AggregateMode::weighted_average()));
  }
  StochasticGreedyOptions sampling = ctx.sampling(0);
  sampling.seed = mix_seed(ctx.seed, 2);
  OnlineConfig oc;
  oc.window = c.solver.window;
  oc.gamma = c.solver.gamma;
  oc.lambda = c.solver.lambda;
  oc.k = c.solver.k;
  oc.sampling = sampling;
  const auto regular = online_per_step(stream, c.solver.k, sampling);
  const auto tr = online_tr_driver(stream, oc);
  for (const auto& [alg, steps] : {std::pair<std::string, const std::vector<OnlineStep>*>{"Regular", &regular}, {"TR", &tr}}) {
    for (const auto& s : *steps) {
      ctx.criteria(s.step, alg, evaluate_criteria(*families[s.step], q, c.solver.lambda, s.played, s.solve_time));
      ctx.metric(s.step, alg, kDistinctElements, static_cast<double>(s.distinct));
    }
  }
}

void run_imgsum(const RunContext& ctx) {
  const auto& c = ctx.config;
  const imgsum::EmbeddingMatrix emb = c.imgsum.embeddings.empty()
                                          ? imgsum::synthetic_embeddings(c.imgsum.count, c.imgsum.dim, mix_seed(ctx.seed, 0))
                                          : imgsum::load_embeddings(c.imgsum.embeddings);
  if (c.imgsum.k_max > emb.rows()) throw ConfigError("imgsum: k_max exceeds image count");
  auto d = std::make_shared<const imgsum::DistanceMatrix>(imgsum::distance_matrix(emb, ctx.exec()));
  auto family = imgsum::image_task_family(d);
  const SimplexDistribution q = SimplexDistribution::uniform(family->size());
  const double lambda = c.solver.lambda;
  const AggregateObjective local(family, q, AggregateMode::kl_robust(lambda));
  for (std::size_t k = c.imgsum.k_min; k <= c.imgsum.k_max; ++k) {
    const auto r_local = stochastic_greedy(local, k, ctx.sampling(k));
    ctx.criteria(k, "Local", evaluate_criteria(*family, q, lambda, r_local.selection, r_local.wall_time));
    const auto r_sat = saturate_with_preference(family, k, ctx.saturation(0.0, q));
    ctx.criteria(k, "Saturate", evaluate_criteria(*family, q, lambda, r_sat.selection, r_sat.wall_time));
  }
}

}  // namespace

SuiteOutput run_suite(const ExperimentConfig& config) {
  validate(config);
  if (config.suite == Suite::kVerify) throw ConfigError("run_suite: use the property battery for 'verify'");
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec || !std::filesystem::is_directory(config.output_dir)) {
    throw IoError("cannot create output directory '" + config.output_dir + "'");
  }

  SuiteOutput out;
  for (std::size_t run = 0; run < config.runs; ++run) {
    RunContext ctx{config, run, config.seed + run, out.records};
    switch (config.suite) {
      case Suite::kSatsel: run_satsel(ctx); break;
      case Suite::kSwp: run_swp(ctx); break;
      case Suite::kOnline: run_online(ctx); break;
      case Suite::kImgsum: run_imgsum(ctx); break;
      case Suite::kVerify: break;
    }
  }

  std::map<std::string, std::vector<ExperimentRecord>> by_file;
  const std::string prefix = suite_name(config.suite) + "_";
  for (const auto& r : out.records) {
    const std::string name = prefix + r.algorithm + (r.criterion == kWallTime ? "_walltime.csv" : ".csv");
    by_file[name].push_back(r);
  }
  for (auto& [name, recs] : by_file) {
    const auto path = (std::filesystem::path(config.output_dir) / name).string();
    write_csv(recs, path);
    out.files.push_back(path);
  }
  return out;
}

}  // namespace robsub::experiment
