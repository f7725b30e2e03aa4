// Command-line front end: gait, cpg-demo, train, bench, rollout.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "salamander/eval.hpp"

namespace fs = std::filesystem;
using namespace salamander;

namespace {

Config load_config(const std::string& path) {
  return path.empty() ? Config{} : Config::load(path);
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

int run_gait(const std::string& config_path, int cycles, const std::string& out_path) {
  Config cfg = load_config(config_path);
  if (!cfg.has("version")) cfg.set("version", "hildebrand-8");
  const Scenario s = Scenario::from(cfg);
  if (cycles < 1) throw std::invalid_argument("--cycles must be at least 1");
  SimEnv env = s.make_env();
  const long steps = std::lround(cycles * s.gait.period / s.env.dt);
  auto out = open_output(out_path);
  TrajectoryLog log(out, s.model);
  const Controller ctl = hildebrand_controller(s.gait);
  Observation obs = env.reset(cfg.get_int("seed", 0));
  const double x0 = env.state().pose.x;
  long k = 0;
  for (; k < steps; ++k) {
    const StepResult r = env.step(ctl(env, obs));
    log.write(env.state(), r.info);
    obs = r.obs;
    if (r.done) {
      ++k;
      break;
    }
  }
  const double cycles_run = static_cast<double>(k) * s.env.dt / s.gait.period;
  std::printf("steps %ld  x %.4f m  mean dx per cycle %.4f m  goal distance %.4f m\n", k, env.state().pose.x,
              (env.state().pose.x - x0) / cycles_run, env.state().goal_distance());
  return 0;
}

int run_cpg_demo(const std::string& config_path, double seconds, const std::string& out_path) {
  Config cfg = load_config(config_path);
  if (!cfg.has("version")) cfg.set("version", "hybrid-9");
  const Scenario s = Scenario::from(cfg);
  if (!(seconds > 0.0)) throw std::invalid_argument("--seconds must be positive");
  const CpgSettings cs = cpg_settings_from(cfg, s.gait);
  CpgNetwork net = make_walk_network(s.gait, s.model, cs);
  const double h = s.env.dt / cs.substeps;
  const long steps = std::lround(seconds / s.env.dt);
  auto out = open_output(out_path);
  out << "t";
  for (std::size_t i = 0; i < net.size(); ++i) out << ",x" << i << ",y" << i;
  for (int j = 0; j < s.model.n_joints; ++j) out << ',' << kJointNames[j];
  out << '\n' << std::setprecision(10);
  for (long k = 0; k <= steps; ++k) {
    out << static_cast<double>(k) * s.env.dt;
    for (const auto& st : net.states) out << ',' << st.x << ',' << st.y;
    const JointVector q = cpg_to_joints(net, s.model);
    for (double v : q.view()) out << ',' << v;
    out << '\n';
    for (int i = 0; i < cs.substeps; ++i) net = network_step(net, h);
  }
  return 0;
}

int run_train(const std::string& config_path, const std::string& version, std::uint64_t seed, long steps,
              const std::string& out_dir) {
  Config cfg = load_config(config_path);
  cfg.set("version", version);
  const Scenario s = Scenario::from(cfg);
  if (!s.trainable()) throw std::invalid_argument(version + " has no learned controller to train");
  if (steps < 1) throw std::invalid_argument("--steps must be positive");
  cfg.set("train.steps", std::to_string(steps));
  cfg.set("train.seed", std::to_string(seed));
  const std::string hash = cfg.hash_hex();

  SacAgent agent = make_agent(s, seed);
  LocomotionTask task = s.make_task();
  const LearningCurve curve = train(task, agent, steps, seed);

  fs::create_directories(out_dir);
  {
    auto out = open_output(fs::path(out_dir) / "curve.csv");
    write_curve_csv(out, curve);
  }
  {
    auto out = open_output(fs::path(out_dir) / checkpoint_name(s.version, seed));
    agent.save(out, hash);
  }
  open_output(fs::path(out_dir) / "config.txt") << "# config hash " << hash << "\n" << cfg.dump();

  SimEnv env = s.make_env();
  const EpisodeMetrics m = run_episode(env, make_controller(s, &agent.policy()), s.env.horizon, seed);
  std::printf("%s seed %llu: %zu updates, mdb %.3f m, atb %ld, dy %.3f m, reached %d\n", s.version.id.data(),
              static_cast<unsigned long long>(seed), static_cast<std::size_t>(curve.updates), m.mdb, m.atb, m.dy,
              m.reached ? 1 : 0);
  return 0;
}

int run_bench(const std::string& suite_path, int seeds, const std::string& out_dir, long steps_override,
              const std::string& checkpoints, int workers) {
  Config cfg = load_config(suite_path);
  if (seeds > 0) cfg.set("suite.seeds", std::to_string(seeds));
  if (steps_override > 0) cfg.set("suite.train_steps", std::to_string(steps_override));
  if (!checkpoints.empty()) {
    cfg.set("suite.train", "false");
    cfg.set("suite.checkpoint_dir", checkpoints);
  }
  if (workers > 0) cfg.set("suite.workers", std::to_string(workers));
  const SuiteConfig suite = suite_config_from(cfg);
  const SuiteResult result = run_suite_in_memory(suite);
  const fs::path dir = write_suite_outputs(result, suite, out_dir);
  write_markdown_table(std::cout, result.reports, suite.dy_mode);
  std::cout << "\nwrote " << dir.string() << "\n";
  return 0;
}

int run_rollout(const std::string& config_path, const std::string& version, const std::string& checkpoint,
                const std::string& trace_path, std::uint64_t seed, const std::string& metrics_path) {
  Config cfg = load_config(config_path);
  cfg.set("version", version);
  const Scenario s = Scenario::from(cfg);
  std::optional<SacAgent> agent;
  if (s.trainable()) {
    if (checkpoint.empty()) throw std::invalid_argument(version + " needs --checkpoint");
    std::ifstream in(checkpoint);
    if (!in) throw std::runtime_error("cannot read checkpoint " + checkpoint);
    agent.emplace(make_agent(s, seed));
    agent->load(in);
  }
  SimEnv env = s.make_env();
  auto out = open_output(trace_path);
  TrajectoryLog log(out, s.model);
  const DyMode mode = parse_dy_mode(cfg.get_string("eval.dy_mode", "mean"));
  const EpisodeMetrics m = run_episode(env, make_controller(s, agent ? &agent->policy() : nullptr), s.env.horizon,
                                       seed, mode, &log);
  if (!metrics_path.empty()) {
    ScenarioReport r = aggregate({m});
    r.version = std::string(s.version.name);
    r.id = std::string(s.version.id);
    r.seeds = {seed};
    auto mo = open_output(metrics_path);
    write_metrics_csv(mo, {r});
  }
  std::printf("%s: mdb %.3f m, atb %ld, dy %.3f m, reached %d\n", s.version.id.data(), m.mdb, m.atb, m.dy,
              m.reached ? 1 : 0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Salamander robot locomotion workbench"};
  app.require_subcommand(1);

  std::string config, out, version, checkpoint, trace, metrics;
  int cycles = 10;
  double seconds = 5.0;
  std::uint64_t seed = 1;
  long steps = 30000;

  auto* gait = app.add_subcommand("gait", "Roll the open-loop Hildebrand gait and write a trajectory CSV");
  gait->add_option("--config", config, "Scenario config file")->check(CLI::ExistingFile);
  gait->add_option("--cycles", cycles, "Gait cycles to run")->default_val(10);
  gait->add_option("--out", out, "Trajectory CSV")->required();

  auto* cpg = app.add_subcommand("cpg-demo", "Integrate the Hopf CPG network and write oscillator and joint traces");
  cpg->add_option("--config", config, "Scenario config file")->check(CLI::ExistingFile);
  cpg->add_option("--seconds", seconds, "Simulated seconds")->default_val(5.0);
  cpg->add_option("--out", out, "Output CSV")->required();

  auto* tr = app.add_subcommand("train", "Train one SAC agent for a robot version");
  tr->add_option("--config", config, "Scenario config file")->check(CLI::ExistingFile);
  tr->add_option("--version", version, "Robot version name or id")->required();
  tr->add_option("--seed", seed, "Seed")->default_val(1);
  tr->add_option("--steps", steps, "Environment steps")->default_val(30000);
  tr->add_option("--out", out, "Output directory")->required();

  std::string suite, ckdir;
  int seeds = 0, workers = 0;
  long bench_steps = 0;
  auto* bench = app.add_subcommand("bench", "Run the benchmark suite and write metrics, table and curves");
  bench->add_option("--suite", suite, "Suite config file")->required()->check(CLI::ExistingFile);
  bench->add_option("--seeds", seeds, "Seeds per learned version (overrides suite.seeds)");
  bench->add_option("--steps", bench_steps, "Training steps per seed (overrides suite.train_steps)");
  bench->add_option("--checkpoints", ckdir, "Evaluate stored checkpoints instead of training")
      ->check(CLI::ExistingDirectory);
  bench->add_option("--workers", workers, "Parallel training threads (overrides suite.workers)");
  bench->add_option("--out", out, "Results root directory")->required();

  auto* ro = app.add_subcommand("rollout", "Evaluate one version deterministically and write its trace");
  ro->add_option("--config", config, "Scenario config file")->check(CLI::ExistingFile);
  ro->add_option("--version", version, "Robot version name or id")->required();
  ro->add_option("--checkpoint", checkpoint, "Checkpoint for learned versions");
  ro->add_option("--seed", seed, "Episode seed")->default_val(1);
  ro->add_option("--trace", trace, "Trajectory CSV")->required();
  ro->add_option("--metrics", metrics, "Also write a one-row metrics CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gait) return run_gait(config, cycles, out);
    if (*cpg) return run_cpg_demo(config, seconds, out);
    if (*tr) return run_train(config, version, seed, steps, out);
    if (*bench) return run_bench(suite, seeds, out, bench_steps, ckdir, workers);
    if (*ro) return run_rollout(config, version, checkpoint, trace, seed, metrics);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
