#pragma once

#include <concepts>
#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "salamander/sac.hpp"
#include "salamander/sim_env.hpp"

namespace salamander {

// Anything with reset(seed) -> Observation and step(normalised action) ->
// StepResult over a [-1, 1]^action_size box.
template <typename E>
concept RlEnvironment = requires(E env, const std::vector<double>& action, std::uint64_t seed) {
  { env.reset(seed) } -> std::convertible_to<Observation>;
  { env.step(action) } -> std::convertible_to<StepResult>;
  { env.observation_size() } -> std::convertible_to<std::size_t>;
  { env.action_size() } -> std::convertible_to<std::size_t>;
};

struct CurvePoint {
  long env_step = 0;
  double eval_return = 0.0;
  double eval_goal_distance = 0.0;
  std::uint64_t seed = 0;
};

struct LearningCurve {
  std::vector<CurvePoint> points;
  std::vector<double> entropy_trace;  // batch entropy per update
  long updates = 0;
};

inline void write_curve_csv(std::ostream& out, const LearningCurve& curve) {
  out << "env_step,eval_return,eval_goal_distance,seed\n";
  for (const auto& p : curve.points) {
    out << p.env_step << ',' << Config::format_double(p.eval_return) << ','
        << Config::format_double(p.eval_goal_distance) << ',' << p.seed << '\n';
  }
}

struct EvalResult {
  double episode_return = 0.0;
  double final_goal_distance = 0.0;
  long steps = 0;
};

template <RlEnvironment Env>
EvalResult evaluate_policy(Env env, SacAgent& agent, std::uint64_t seed) {
  EvalResult r;
  Observation obs = env.reset(seed);
  for (;;) {
    const StepResult s = env.step(agent.act(obs, true));
    r.episode_return += s.reward;
    r.final_goal_distance = s.info.goal_distance;
    ++r.steps;
    if (s.done) break;
    obs = s.obs;
  }
  return r;
}

// Off-policy interaction loop: act, store, update; one deterministic
// evaluation episode every eval_interval environment steps.
template <RlEnvironment Env>
LearningCurve train(Env& env, SacAgent& agent, long total_steps, std::uint64_t seed) {
  const SacConfig& cfg = agent.config();
  ReplayBuffer buffer(cfg.buffer_capacity, static_cast<int>(env.observation_size()), static_cast<int>(env.action_size()));
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  const Env eval_env = env;

  LearningCurve curve;
  std::uint64_t episode = 0;
  Observation obs = env.reset(seed);
  long episode_len = 0;
  double update_credit = 0.0;

  for (long step = 1; step <= total_steps; ++step) {
    std::vector<double> action;
    if (step <= cfg.random_steps) {
      action.resize(env.action_size());
      for (auto& a : action) a = uniform(rng);
    } else {
      action = agent.act(obs, false);
    }
    StepResult r = env.step(action);
    ++episode_len;
    const bool terminal = r.done && !r.truncated && !(cfg.bootstrap_goal && r.info.goal_reached);
    buffer.add({obs, action, r.reward, r.obs, terminal});
    if (r.done || (cfg.train_horizon > 0 && episode_len >= cfg.train_horizon)) {
      ++episode;
      obs = env.reset(seed + 7919 * episode);
      episode_len = 0;
    } else {
      obs = std::move(r.obs);
    }

    if (static_cast<long>(buffer.size()) >= std::max<long>(cfg.warmup, 1)) {
      update_credit += cfg.updates_per_step;
      while (update_credit >= 1.0) {
        update_credit -= 1.0;
        const LossReport rep = sac_update(agent, buffer);
        curve.entropy_trace.push_back(rep.entropy);
        ++curve.updates;
      }
    }

    if (step % cfg.eval_interval == 0) {
      const EvalResult e = evaluate_policy(eval_env, agent, seed);
      curve.points.push_back({step, e.episode_return, e.final_goal_distance, seed});
    }
  }
  return curve;
}

}  // namespace salamander
