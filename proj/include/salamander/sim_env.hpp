#pragma once

// Kinematic goal-reaching environment. Feet that are down stay pinned to
// their world anchors; after every joint update the body pose is the
// least-squares rigid fit that keeps the pinned feet where they are.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "salamander/config.hpp"
#include "salamander/robot_model.hpp"

namespace salamander {

struct BaseMotion {
  PlanarTransform transform;
  bool airborne = false;
};

// Closed-form 2D Procrustes: the transform T minimising
// sum ||T(feet_body[i]) - anchors_world[i]||^2. A single pair cannot fix the
// rotation, so prior_rotation is kept and only the translation is solved.
inline BaseMotion solve_base_motion(std::span<const Vec2> anchors_world, std::span<const Vec2> feet_body,
                                    double prior_rotation = 0.0) {
  if (anchors_world.size() != feet_body.size()) {
    throw std::invalid_argument("anchor and foot lists must be matched pairwise");
  }
  const std::size_t n = anchors_world.size();
  if (n == 0) return {{}, true};
  if (n == 1) {
    return {{prior_rotation, anchors_world[0] - rotate(feet_body[0], prior_rotation)}, false};
  }
  Vec2 ca, cf;
  for (std::size_t i = 0; i < n; ++i) {
    ca += anchors_world[i];
    cf += feet_body[i];
  }
  ca = ca * (1.0 / static_cast<double>(n));
  cf = cf * (1.0 / static_cast<double>(n));
  double sdot = 0.0;
  double scross = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 f = feet_body[i] - cf;
    const Vec2 a = anchors_world[i] - ca;
    sdot += dot(f, a);
    scross += cross(f, a);
  }
  const double rotation = (sdot == 0.0 && scross == 0.0) ? prior_rotation : std::atan2(scross, sdot);
  return {{rotation, ca - rotate(cf, rotation)}, false};
}

struct RewardWeights {
  double w1 = 1.0;     // forward progress
  double w2 = 1.0;     // approach to goal
  double w3 = -0.5;    // lateral drift growth
  double w4 = -0.001;  // control cost
  double healthy = 0.05;
};

struct RewardTerms {
  double dx = 0.0;
  double dd = 0.0;
  double dy = 0.0;
  double control = 0.0;
  double healthy = 0.0;  // H if the step was healthy, else 0
  double total = 0.0;
};

struct SimState {
  BodyPose pose;
  JointVector q;
  JointVector q_prev;
  Vec2 goal;
  long t = 0;
  std::array<bool, 4> anchored{};
  std::array<Vec2, 4> anchors{};

  double goal_distance() const { return (goal - Vec2{pose.x, pose.y}).norm(); }
};

inline RewardTerms compute_reward(const SimState& prev, const SimState& next, const JointVector& action,
                                  const RewardWeights& w, bool healthy = true) {
  RewardTerms r;
  r.dx = next.pose.x - prev.pose.x;
  r.dd = prev.goal_distance() - next.goal_distance();
  r.dy = std::abs(next.pose.y) - std::abs(prev.pose.y);
  for (double a : action.view()) r.control += a * a;
  r.healthy = healthy ? w.healthy : 0.0;
  r.total = w.w1 * r.dx + w.w2 * r.dd + w.w3 * r.dy + w.w4 * r.control + r.healthy;
  return r;
}

struct EnvConfig {
  double dt = 0.02;  // seconds per control step
  long horizon = 3000;
  Vec2 goal{1.5, 0.0};
  double goal_jitter = 0.0;  // uniform +/- per axis, seeded
  double goal_radius = 0.1;
  double heading_limit = kPi / 2.0;
  RewardWeights weights;

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("env.dt must be positive");
    if (horizon < 1) throw ConfigError("env.horizon must be at least 1");
    if (!(goal_radius > 0.0)) throw ConfigError("env.goal_radius must be positive");
    if (!(goal_jitter >= 0.0)) throw ConfigError("env.goal_jitter must be non-negative");
  }
};

inline EnvConfig env_config_from(const Config& c) {
  EnvConfig e;
  e.dt = c.get_double("env.dt", e.dt);
  e.horizon = c.get_int("env.horizon", e.horizon);
  e.goal = {c.get_double("env.goal_x", e.goal.x), c.get_double("env.goal_y", e.goal.y)};
  e.goal_jitter = c.get_double("env.goal_jitter", e.goal_jitter);
  e.goal_radius = c.get_double("env.goal_radius", e.goal_radius);
  e.heading_limit = c.get_double("env.heading_limit", e.heading_limit);
  e.weights.w1 = c.get_double("reward.w1", e.weights.w1);
  e.weights.w2 = c.get_double("reward.w2", e.weights.w2);
  e.weights.w3 = c.get_double("reward.w3", e.weights.w3);
  e.weights.w4 = c.get_double("reward.w4", e.weights.w4);
  e.weights.healthy = c.get_double("reward.healthy", e.weights.healthy);
  e.validate();
  return e;
}

using Observation = std::vector<double>;

struct StepInfo {
  RewardTerms terms;
  double goal_distance = 0.0;
  double mdb_so_far = 0.0;
  int stance_mask = 0;  // bit l set when limb l is down
  bool goal_reached = false;
  bool timeout = false;
  bool unhealthy = false;
  bool airborne = false;
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;
  bool truncated = false;  // ended by the horizon only
  StepInfo info;
};

class SimEnv {
 public:
  SimEnv(RobotModel model, EnvConfig config) : model_(std::move(model)), config_(config) {
    model_.validate();
    config_.validate();
    reset(0);
  }

  const RobotModel& model() const { return model_; }
  const EnvConfig& config() const { return config_; }
  const SimState& state() const { return state_; }
  std::size_t observation_size() const { return 2 * static_cast<std::size_t>(model_.n_joints) + 6; }
  std::size_t action_size() const { return static_cast<std::size_t>(model_.n_joints); }
  double time() const { return static_cast<double>(state_.t) * config_.dt; }

  // Home posture is all joints at zero with every foot down.
  Observation reset(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    state_ = SimState{};
    state_.q = JointVector(action_size());
    state_.q_prev = state_.q;
    state_.goal = config_.goal;
    if (config_.goal_jitter > 0.0) {
      std::uniform_real_distribution<double> u(-config_.goal_jitter, config_.goal_jitter);
      state_.goal.x += u(rng);
      state_.goal.y += u(rng);
    }
    const FootState feet = forward_kinematics(model_, state_.pose, state_.q);
    for (int l = 0; l < kNumLimbs; ++l) {
      state_.anchored[l] = feet.down[l];
      state_.anchors[l] = feet.positions[l];
    }
    mdb_ = state_.goal_distance();
    done_ = false;
    return observe();
  }

  StepResult step(const JointVector& action) {
    check_size(model_, action);
    if (done_) throw std::logic_error("step() called on a finished episode; call reset()");
    const SimState prev = state_;
    SimState next = state_;
    next.q_prev = prev.q;
    next.q = clamp_action(model_, prev.q, action);
    next.t = prev.t + 1;

    const FootState feet = body_frame_feet(model_, next.q);
    std::vector<Vec2> anchors;
    std::vector<Vec2> body;
    for (int l = 0; l < kNumLimbs; ++l) {
      if (prev.anchored[l] && feet.down[l]) {
        anchors.push_back(prev.anchors[l]);
        body.push_back(feet.positions[l]);
      }
    }
    if (!anchors.empty()) {
      const BaseMotion motion = solve_base_motion(anchors, body, prev.pose.theta);
      next.pose = BodyPose::from_transform(motion.transform);
    }
    const PlanarTransform to_world = next.pose.transform();
    StepInfo info;
    for (int l = 0; l < kNumLimbs; ++l) {
      next.anchored[l] = feet.down[l];
      if (feet.down[l]) {
        info.stance_mask |= 1 << l;
        if (!prev.anchored[l]) next.anchors[l] = to_world.apply(feet.positions[l]);
      }
    }

    info.airborne = feet.stance_count() == 0;
    info.unhealthy = info.airborne || std::abs(next.pose.theta) > config_.heading_limit;
    info.goal_distance = next.goal_distance();
    info.goal_reached = info.goal_distance < config_.goal_radius;
    info.timeout = next.t >= config_.horizon;
    info.terms = compute_reward(prev, next, action, config_.weights, !info.unhealthy);
    mdb_ = std::min(mdb_, info.goal_distance);
    info.mdb_so_far = mdb_;

    state_ = next;
    StepResult r;
    r.obs = observe();
    r.reward = info.terms.total;
    r.done = info.goal_reached || info.unhealthy || info.timeout;
    r.truncated = r.done && !info.goal_reached && !info.unhealthy;
    r.info = info;
    done_ = r.done;
    return r;
  }

  // [q, q - q_prev, sin(theta), cos(theta), goal in body frame, distance, y]
  Observation observe() const {
    Observation o;
    o.reserve(observation_size());
    for (double v : state_.q.view()) o.push_back(v);
    for (std::size_t j = 0; j < state_.q.size(); ++j) o.push_back(state_.q[j] - state_.q_prev[j]);
    o.push_back(std::sin(state_.pose.theta));
    o.push_back(std::cos(state_.pose.theta));
    const Vec2 rel = rotate(state_.goal - Vec2{state_.pose.x, state_.pose.y}, -state_.pose.theta);
    o.push_back(rel.x);
    o.push_back(rel.y);
    o.push_back(state_.goal_distance());
    o.push_back(state_.pose.y);
    return o;
  }

 private:
  RobotModel model_;
  EnvConfig config_;
  SimState state_;
  double mdb_ = 0.0;
  bool done_ = false;
};

// Per-step CSV: t, pose, joints, reward terms, stance mask, goal distance.
class TrajectoryLog {
 public:
  TrajectoryLog(std::ostream& out, const RobotModel& model) : out_(out) {
    out_ << "t,x,y,theta";
    for (int j = 0; j < model.n_joints; ++j) out_ << ',' << kJointNames[j];
    out_ << ",reward,dx,dd,dy,control,healthy,stance_mask,goal_distance\n";
    out_ << std::setprecision(10);
  }

  void write(const SimState& s, const StepInfo& info) {
    out_ << s.t << ',' << s.pose.x << ',' << s.pose.y << ',' << s.pose.theta;
    for (double v : s.q.view()) out_ << ',' << v;
    const auto& r = info.terms;
    out_ << ',' << r.total << ',' << r.dx << ',' << r.dd << ',' << r.dy << ',' << r.control << ',' << r.healthy << ','
         << info.stance_mask << ',' << info.goal_distance << '\n';
  }

 private:
  std::ostream& out_;
};

}  // namespace salamander
