#pragma once

// MDB / ATB / DY metrics, multi-seed aggregation and the benchmark suite.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "salamander/controllers.hpp"
#include "salamander/train.hpp"

namespace salamander {

enum class DyMode { kMean, kMax, kTerminal };

inline DyMode parse_dy_mode(const std::string& s) {
  if (s == "mean") return DyMode::kMean;
  if (s == "max") return DyMode::kMax;
  if (s == "terminal") return DyMode::kTerminal;
  throw ConfigError("eval.dy_mode must be mean, max or terminal, got: " + s);
}

inline std::string_view dy_mode_name(DyMode m) {
  switch (m) {
    case DyMode::kMean: return "mean";
    case DyMode::kMax: return "max";
    case DyMode::kTerminal: return "terminal";
  }
  return "?";
}

struct EpisodeMetrics {
  double mdb = 0.0;  // metres, minimum goal distance over the episode
  long atb = 0;      // first step inside the goal radius, horizon if never
  double dy = 0.0;   // metres, |y| deviation per DyMode
  bool reached = false;
};

// Streaming MDB/ATB/DY over post-step samples, step index starting at 1.
class MetricAccumulator {
 public:
  MetricAccumulator(double goal_radius, long horizon, DyMode mode = DyMode::kMean)
      : goal_radius_(goal_radius), horizon_(horizon), mode_(mode) {
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  }

  void add(double goal_distance, double abs_y) {
    ++steps_;
    mdb_ = std::min(mdb_, goal_distance);
    if (!atb_ && goal_distance < goal_radius_) atb_ = steps_;
    y_sum_ += abs_y;
    y_max_ = std::max(y_max_, abs_y);
    y_last_ = abs_y;
  }

  long steps() const { return steps_; }

  EpisodeMetrics result() const {
    EpisodeMetrics m;
    m.mdb = steps_ > 0 ? mdb_ : 0.0;
    m.reached = atb_.has_value();
    m.atb = atb_.value_or(horizon_);
    switch (mode_) {
      case DyMode::kMean: m.dy = steps_ > 0 ? y_sum_ / static_cast<double>(steps_) : 0.0; break;
      case DyMode::kMax: m.dy = y_max_; break;
      case DyMode::kTerminal: m.dy = y_last_; break;
    }
    return m;
  }

 private:
  double goal_radius_;
  long horizon_;
  DyMode mode_;
  long steps_ = 0;
  double mdb_ = std::numeric_limits<double>::infinity();
  std::optional<long> atb_;
  double y_sum_ = 0.0;
  double y_max_ = 0.0;
  double y_last_ = 0.0;
};

inline EpisodeMetrics metrics_from_trace(std::span<const double> goal_distances, std::span<const double> abs_y,
                                         double goal_radius, long horizon, DyMode mode = DyMode::kMean) {
  if (goal_distances.size() != abs_y.size()) throw std::invalid_argument("trace columns differ in length");
  MetricAccumulator acc(goal_radius, horizon, mode);
  for (std::size_t i = 0; i < goal_distances.size(); ++i) acc.add(goal_distances[i], abs_y[i]);
  return acc.result();
}

// Rolls one episode from env.reset(seed) until the env ends it or horizon
// steps have been taken.
inline EpisodeMetrics run_episode(SimEnv& env, const Controller& controller, long horizon, std::uint64_t seed = 0,
                                  DyMode mode = DyMode::kMean, TrajectoryLog* log = nullptr) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  MetricAccumulator acc(env.config().goal_radius, horizon, mode);
  Observation obs = env.reset(seed);
  for (long k = 0; k < horizon; ++k) {
    const StepResult r = env.step(controller(env, obs));
    acc.add(r.info.goal_distance, std::abs(env.state().pose.y));
    if (log) log->write(env.state(), r.info);
    if (r.done) break;
    obs = r.obs;
  }
  return acc.result();
}

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample std, n - 1 denominator; 0 for n = 1
};

inline MetricSummary summarize(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("cannot summarise an empty sample");
  MetricSummary s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

struct ScenarioReport {
  std::string version;
  std::string id;
  MetricSummary mdb;
  MetricSummary atb;
  MetricSummary dy;
  int reached = 0;
  bool deterministic = false;  // single open-loop run, no spread
  std::vector<std::uint64_t> seeds;
  std::vector<EpisodeMetrics> per_seed;
  std::string config_hash;
};

inline ScenarioReport aggregate(const std::vector<EpisodeMetrics>& metrics) {
  if (metrics.empty()) throw std::invalid_argument("aggregate needs at least one seed");
  std::vector<double> mdb, atb, dy;
  ScenarioReport r;
  for (const auto& m : metrics) {
    mdb.push_back(m.mdb);
    atb.push_back(static_cast<double>(m.atb));
    dy.push_back(m.dy);
    r.reached += m.reached ? 1 : 0;
  }
  r.mdb = summarize(mdb);
  r.atb = summarize(atb);
  r.dy = summarize(dy);
  r.per_seed = metrics;
  return r;
}

namespace detail {
inline std::string printf_string(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}
}  // namespace detail

// "mean ± std" cells: distances as %.2f ± %.2g, timesteps as integers.
inline std::string format_metric(const MetricSummary& s, bool steps, bool with_std) {
  std::string out = detail::printf_string(steps ? "%.0f" : "%.2f", s.mean);
  if (with_std) out += " ± " + detail::printf_string(steps ? "%.0f" : "%.2g", s.std);
  return out;
}

inline std::string format_row(const ScenarioReport& r) {
  const bool with_std = !r.deterministic;
  return format_metric(r.mdb, false, with_std) + " | " + format_metric(r.atb, true, with_std) + " | " +
         format_metric(r.dy, false, with_std);
}

inline void write_markdown_table(std::ostream& out, const std::vector<ScenarioReport>& reports, DyMode mode) {
  out << "| Version of the Robot | MDB ↓ | ATB ↓ | DY (" << dy_mode_name(mode) << ") ↓ |\n";
  out << "|---|---|---|---|\n";
  for (const auto& r : reports) {
    const bool with_std = !r.deterministic;
    out << "| " << r.version << " | " << format_metric(r.mdb, false, with_std) << " | "
        << format_metric(r.atb, true, with_std) << " | " << format_metric(r.dy, false, with_std) << " |\n";
  }
}

inline void write_metrics_csv(std::ostream& out, const std::vector<ScenarioReport>& reports) {
  out << "version,id,row,seed,mdb,atb,dy,reached\n";
  auto num = [](double v) { return detail::printf_string("%.9g", v); };
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.per_seed.size(); ++i) {
      const auto& m = r.per_seed[i];
      out << '"' << r.version << "\"," << r.id << ",seed," << r.seeds[i] << ',' << num(m.mdb) << ',' << m.atb << ','
          << num(m.dy) << ',' << (m.reached ? 1 : 0) << '\n';
    }
    out << '"' << r.version << "\"," << r.id << ",mean,," << num(r.mdb.mean) << ',' << num(r.atb.mean) << ','
        << num(r.dy.mean) << ',' << r.reached << '\n';
    out << '"' << r.version << "\"," << r.id << ",std,," << num(r.mdb.std) << ',' << num(r.atb.std) << ','
        << num(r.dy.std) << ",\n";
  }
}

// Mean evaluation return per version against env steps.
inline void write_curves_svg(std::ostream& out, const std::vector<std::pair<std::string, std::vector<LearningCurve>>>& curves) {
  const double w = 640, h = 400, pad = 50;
  double xmax = 1, ymin = 0, ymax = 1;
  std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> series;
  for (const auto& [name, runs] : curves) {
    if (runs.empty() || runs.front().points.empty()) continue;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < runs.front().points.size(); ++i) {
      double sum = 0.0;
      for (const auto& run : runs) sum += run.points[i].eval_return;
      pts.emplace_back(static_cast<double>(runs.front().points[i].env_step), sum / static_cast<double>(runs.size()));
    }
    series.emplace_back(name, std::move(pts));
  }
  bool first = true;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.second) {
      xmax = std::max(xmax, x);
      if (first) {
        ymin = ymax = y;
        first = false;
      }
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (ymax - ymin < 1e-9) ymax = ymin + 1.0;
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad << "\" y2=\"" << h - pad
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << h - pad
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">env steps (max " << xmax
      << ")</text>\n";
  out << "<text x=\"12\" y=\"" << h / 2 << "\" transform=\"rotate(-90 12 " << h / 2
      << ")\" text-anchor=\"middle\">eval return</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    out << "<polyline fill=\"none\" stroke=\"" << colors[k % 6] << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : series[k].second) {
      const double px = pad + (w - 2 * pad) * x / xmax;
      const double py = h - pad - (h - 2 * pad) * (y - ymin) / (ymax - ymin);
      out << px << ',' << py << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << pad + 10 << "\" y=\"" << pad + 16 * (k + 1) << "\" fill=\"" << colors[k % 6] << "\">"
        << series[k].first << "</text>\n";
  }
  out << "</svg>\n";
}

// Everything needed to instantiate one robot version from a config.
struct Scenario {
  VersionInfo version;
  Config config;
  RobotModel model;
  GaitParams gait;
  EnvConfig env;

  static Scenario from(const VersionInfo& v, const Config& c) {
    RobotModel m = build_robot(v, c);
    GaitParams g = gait_params_from(c, m);
    return {v, c, m, g, env_config_from(c)};
  }

  static Scenario from(const Config& c) { return from(resolve_version(c), c); }

  bool trainable() const {
    return version.controller == ControllerKind::kPolicy || version.controller == ControllerKind::kHybrid;
  }

  SimEnv make_env() const { return SimEnv(model, env); }
  LocomotionTask make_task() const { return LocomotionTask(make_env(), version.controller, gait); }
};

// SAC settings for locomotion; sac.* keys override.
inline SacConfig locomotion_sac_config(const Config& c) {
  Config defaults;
  defaults.set("sac.batch_size", "64");
  defaults.set("sac.init_alpha", "0.1");
  defaults.set("sac.reward_scale", "20");
  defaults.set("sac.eval_interval", "5000");
  defaults.merge(c);
  return sac_config_from(defaults);
}

inline SacAgent make_agent(const Scenario& s, std::uint64_t seed) {
  const LocomotionTask task = s.make_task();
  return SacAgent(static_cast<int>(task.observation_size()), static_cast<int>(task.action_size()),
                  locomotion_sac_config(s.config), seed);
}

inline Controller make_controller(const Scenario& s, const GaussianPolicy* policy) {
  switch (s.version.controller) {
    case ControllerKind::kHildebrand: return hildebrand_controller(s.gait);
    case ControllerKind::kCpg: {
      const CpgSettings cs = cpg_settings_from(s.config, s.gait);
      return cpg_controller(make_walk_network(s.gait, s.model, cs), cs.substeps);
    }
    case ControllerKind::kPolicy:
      if (!policy) throw std::invalid_argument("policy version needs a trained policy");
      return policy_controller(*policy);
    case ControllerKind::kHybrid:
      if (!policy) throw std::invalid_argument("hybrid version needs a trained spine policy");
      return hybrid_policy_controller(*policy, s.gait);
  }
  throw std::logic_error("unknown controller kind");
}

struct SuiteConfig {
  std::vector<VersionInfo> versions;
  int seeds = 5;
  long train_steps = 30000;
  bool train = true;
  std::string checkpoint_dir;  // read when train = false
  DyMode dy_mode = DyMode::kMean;
  int workers = 1;
  bool timestamp_dir = true;
  Config base;  // everything, including the suite.* keys
};

inline SuiteConfig suite_config_from(const Config& c) {
  SuiteConfig s;
  const auto names = c.get_strings("suite.versions");
  if (names.empty()) {
    s.versions.assign(kVersions.begin(), kVersions.end());
  } else {
    for (const auto& n : names) {
      if (n == "custom") {
        s.versions.push_back(resolve_version([&] {
          Config cc = c;
          cc.set("version", "custom");
          return cc;
        }()));
        continue;
      }
      auto v = find_version(n);
      if (!v) throw ConfigError("suite.versions: unknown version " + n);
      s.versions.push_back(*v);
    }
  }
  s.seeds = static_cast<int>(c.get_int("suite.seeds", s.seeds));
  s.train_steps = c.get_int("suite.train_steps", s.train_steps);
  s.train = c.get_bool("suite.train", s.train);
  s.checkpoint_dir = c.get_string("suite.checkpoint_dir", "");
  s.dy_mode = parse_dy_mode(c.get_string("eval.dy_mode", "mean"));
  s.workers = static_cast<int>(c.get_int("suite.workers", 1));
  s.timestamp_dir = c.get_bool("suite.timestamp_dir", true);
  if (s.seeds < 1) throw ConfigError("suite.seeds must be at least 1");
  if (s.train_steps < 1) throw ConfigError("suite.train_steps must be positive");
  if (s.workers < 1) throw ConfigError("suite.workers must be at least 1");
  s.base = c;
  return s;
}

inline std::string checkpoint_name(const VersionInfo& v, std::uint64_t seed) {
  return std::string(v.id) + "-seed" + std::to_string(seed) + ".ckpt";
}

struct SeedOutcome {
  EpisodeMetrics metrics;
  LearningCurve curve;
  std::string checkpoint;  // serialised agent, empty for open-loop versions
};

// Trains (or loads) one seed of a learned version and evaluates it
// deterministically.
inline SeedOutcome run_learned_seed(const Scenario& s, const SuiteConfig& suite, std::uint64_t seed,
                                    const std::string& hash) {
  SeedOutcome out;
  SacAgent agent = make_agent(s, seed);
  if (suite.train) {
    LocomotionTask task = s.make_task();
    out.curve = train(task, agent, suite.train_steps, seed);
  } else {
    if (suite.checkpoint_dir.empty()) {
      throw std::runtime_error("training is disabled and no suite.checkpoint_dir is set");
    }
    const auto path = std::filesystem::path(suite.checkpoint_dir) / checkpoint_name(s.version, seed);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing checkpoint for " + std::string(s.version.id) + ": " + path.string());
    agent.load(in);
  }
  std::ostringstream ck;
  agent.save(ck, hash);
  out.checkpoint = ck.str();
  SimEnv env = s.make_env();
  out.metrics = run_episode(env, make_controller(s, &agent.policy()), s.env.horizon, seed, suite.dy_mode);
  return out;
}

struct SuiteResult {
  std::vector<ScenarioReport> reports;
  std::vector<std::pair<std::string, std::vector<LearningCurve>>> curves;
  std::map<std::string, std::string> checkpoints;  // file name -> contents
  std::string config_hash;
};

inline SuiteResult run_suite_in_memory(const SuiteConfig& suite) {
  Config hashed = suite.base;
  hashed.set("suite.seeds", std::to_string(suite.seeds));
  hashed.set("suite.train_steps", std::to_string(suite.train_steps));
  SuiteResult result;
  result.config_hash = hashed.hash_hex();

  for (const auto& v : suite.versions) {
    Config vc = suite.base;
    vc.set("version", v.id == "custom" ? "custom" : std::string(v.id));
    const Scenario s = Scenario::from(v, vc);
    ScenarioReport report;
    if (!s.trainable()) {
      SimEnv env = s.make_env();
      const EpisodeMetrics m = run_episode(env, make_controller(s, nullptr), s.env.horizon, 0, suite.dy_mode);
      report = aggregate({m});
      report.deterministic = true;
      report.seeds = {0};
    } else {
      std::vector<std::uint64_t> seeds;
      for (int k = 1; k <= suite.seeds; ++k) seeds.push_back(static_cast<std::uint64_t>(k));
      std::vector<SeedOutcome> outcomes(seeds.size());
      if (suite.workers > 1) {
        // Each worker owns its env and agent; results land by seed index.
        std::vector<std::future<void>> jobs;
        std::size_t next = 0;
        while (next < seeds.size()) {
          jobs.clear();
          for (int w = 0; w < suite.workers && next < seeds.size(); ++w, ++next) {
            jobs.push_back(std::async(std::launch::async, [&, i = next] {
              outcomes[i] = run_learned_seed(s, suite, seeds[i], result.config_hash);
            }));
          }
          for (auto& j : jobs) j.get();
        }
      } else {
        for (std::size_t i = 0; i < seeds.size(); ++i) {
          outcomes[i] = run_learned_seed(s, suite, seeds[i], result.config_hash);
        }
      }
      std::vector<EpisodeMetrics> metrics;
      std::vector<LearningCurve> curves;
      for (std::size_t i = 0; i < seeds.size(); ++i) {
        metrics.push_back(outcomes[i].metrics);
        curves.push_back(outcomes[i].curve);
        result.checkpoints[checkpoint_name(v, seeds[i])] = outcomes[i].checkpoint;
      }
      report = aggregate(metrics);
      report.seeds = seeds;
      if (suite.train) result.curves.emplace_back(std::string(v.id), std::move(curves));
    }
    report.version = std::string(v.name);
    report.id = std::string(v.id);
    report.config_hash = result.config_hash;
    result.reports.push_back(std::move(report));
  }
  return result;
}

// Writes metrics.csv, table.md, curves.csv/svg, config.txt and checkpoints
// under out_root/<timestamp>-<hash>/ (or out_root/<hash>/). Returns the run
// directory.
inline std::filesystem::path write_suite_outputs(const SuiteResult& result, const SuiteConfig& suite,
                                                 const std::filesystem::path& out_root) {
  std::string dir_name = result.config_hash;
  if (suite.timestamp_dir) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", std::gmtime(&now));
    dir_name = std::string(stamp) + "-" + result.config_hash;
  }
  std::filesystem::path dir = out_root / dir_name;
  for (int k = 1; std::filesystem::exists(dir) && suite.timestamp_dir; ++k) {
    dir = out_root / (dir_name + "-" + std::to_string(k));
  }
  std::filesystem::create_directories(dir / "checkpoints");

  std::ofstream(dir / "config.txt") << "# config hash " << result.config_hash << "\n" << suite.base.dump();
  {
    std::ofstream f(dir / "metrics.csv");
    write_metrics_csv(f, result.reports);
  }
  {
    std::ofstream f(dir / "table.md");
    write_markdown_table(f, result.reports, suite.dy_mode);
    f << "\nconfig hash " << result.config_hash << "\n";
  }
  {
    std::ofstream f(dir / "curves.csv");
    f << "version,env_step,eval_return,eval_goal_distance,seed\n";
    for (const auto& [id, runs] : result.curves) {
      for (const auto& run : runs) {
        for (const auto& p : run.points) {
          f << id << ',' << p.env_step << ',' << Config::format_double(p.eval_return) << ','
            << Config::format_double(p.eval_goal_distance) << ',' << p.seed << '\n';
        }
      }
    }
  }
  {
    std::ofstream f(dir / "curves.svg");
    write_curves_svg(f, result.curves);
  }
  for (const auto& [name, text] : result.checkpoints) std::ofstream(dir / "checkpoints" / name) << text;
  return dir;
}

}  // namespace salamander
