#pragma once

// One-dimensional goal reaching: a point starts against a wall at x = 0 and
// commands its velocity. Rewarded with the same five-term sum as SimEnv
// (lateral term identically zero).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "salamander/sac.hpp"
#include "salamander/sim_env.hpp"

namespace salamander {

struct PointGoalConfig {
  double goal = 1.0;
  double max_speed = 0.02;  // per step, at |action| = 1
  double goal_radius = 0.05;
  long horizon = 100;
  RewardWeights weights{1.0, 1.0, -0.5, -0.001, 0.0};
};

class PointGoalEnv {
 public:
  explicit PointGoalEnv(PointGoalConfig config = {}) : config_(config) {}

  std::size_t observation_size() const { return 2; }
  std::size_t action_size() const { return 1; }
  double position() const { return x_; }

  Observation reset(std::uint64_t /*seed*/) {
    x_ = 0.0;
    t_ = 0;
    return observe();
  }

  StepResult step(const std::vector<double>& action) {
    if (action.size() != 1) throw std::invalid_argument("point env takes a single action");
    const double a = std::clamp(action[0], -1.0, 1.0);
    const double prev_x = x_;
    x_ = std::max(0.0, x_ + a * config_.max_speed);
    ++t_;

    StepResult r;
    auto& terms = r.info.terms;
    terms.dx = x_ - prev_x;
    terms.dd = std::abs(config_.goal - prev_x) - std::abs(config_.goal - x_);
    terms.dy = 0.0;
    terms.control = a * a;
    terms.healthy = config_.weights.healthy;
    const auto& w = config_.weights;
    terms.total = w.w1 * terms.dx + w.w2 * terms.dd + w.w3 * terms.dy + w.w4 * terms.control + terms.healthy;
    r.reward = terms.total;
    r.info.goal_distance = std::abs(config_.goal - x_);
    r.info.goal_reached = r.info.goal_distance < config_.goal_radius;
    r.info.timeout = t_ >= config_.horizon;
    r.done = r.info.goal_reached || r.info.timeout;
    r.truncated = r.done && !r.info.goal_reached;
    r.obs = observe();
    return r;
  }

 private:
  Observation observe() const { return {x_, config_.goal - x_}; }

  PointGoalConfig config_;
  double x_ = 0.0;
  long t_ = 0;
};

// SAC settings that solve PointGoalEnv within 20k steps.
inline SacConfig point_goal_sac_config() {
  SacConfig c;
  c.batch_size = 64;
  c.warmup = 500;
  c.random_steps = 500;
  c.eval_interval = 2000;
  c.init_alpha = 0.1;
  c.reward_scale = 10.0;
  return c;
}

// Mean undiscounted return of uniformly random actions.
inline double random_policy_return(const PointGoalConfig& config, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("need at least one episode");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    PointGoalEnv env(config);
    env.reset(seed);
    for (;;) {
      const StepResult r = env.step({u(rng)});
      total += r.reward;
      if (r.done) break;
    }
  }
  return total / episodes;
}

}  // namespace salamander
