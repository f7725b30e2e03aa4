#pragma once

// Joint-level controllers for SimEnv and the adapter that exposes a robot
// version as a normalised-action RL task.

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "salamander/cpg.hpp"
#include "salamander/gait.hpp"
#include "salamander/sac.hpp"
#include "salamander/sim_env.hpp"

namespace salamander {

// Returns the joint targets to send on the next env.step().
using Controller = std::function<JointVector(const SimEnv& env, const Observation& obs)>;

// Affine map of a normalised value in [-1, 1] onto joint j's angle range.
inline double denormalise_joint(const RobotModel& model, int j, double a) {
  const auto& lim = model.joint_limits[static_cast<std::size_t>(j)];
  const double mid = 0.5 * (lim.max + lim.min);
  const double half = 0.5 * (lim.max - lim.min);
  return mid + half * std::clamp(a, -1.0, 1.0);
}

inline JointVector policy_to_joints(const RobotModel& model, std::span<const double> action) {
  if (action.size() != static_cast<std::size_t>(model.n_joints)) {
    throw std::invalid_argument("policy action must have one entry per joint");
  }
  JointVector q(action.size());
  for (int j = 0; j < model.n_joints; ++j) q[j] = denormalise_joint(model, j, action[j]);
  return q;
}

// Limb joints follow the open-loop gait; the spine takes the policy's single
// normalised output.
inline JointVector hybrid_controller(const GaitParams& gait,
                                     const std::function<std::vector<double>(const Observation&)>& spine_policy,
                                     const RobotModel& model, const Observation& obs, double t) {
  if (!model.has_spine) throw std::invalid_argument("hybrid control needs a model with a spinal joint");
  const std::vector<double> a = spine_policy(obs);
  if (a.size() != 1) throw std::invalid_argument("hybrid spine policy must output exactly one action");
  GaitParams limbs_only = gait;
  limbs_only.spine_amplitude = 0.0;
  JointVector q = joint_targets(limbs_only, model, t);
  q[kSpineJoint] = denormalise_joint(model, kSpineJoint, a[0]);
  return q;
}

inline Controller hildebrand_controller(GaitParams gait) {
  return [gait](const SimEnv& env, const Observation&) {
    return joint_targets(gait, env.model(), env.time() + env.config().dt);
  };
}

// Integrates the network substeps times per control step.
inline Controller cpg_controller(CpgNetwork net, int substeps) {
  auto state = std::make_shared<CpgNetwork>(std::move(net));
  return [state, substeps](const SimEnv& env, const Observation&) {
    const double h = env.config().dt / substeps;
    for (int i = 0; i < substeps; ++i) *state = network_step(*state, h);
    return cpg_to_joints(*state, env.model());
  };
}

inline Controller policy_controller(GaussianPolicy policy) {
  return [policy = std::move(policy)](const SimEnv& env, const Observation& obs) {
    const Vector a = policy.deterministic_action(Eigen::Map<const Vector>(obs.data(), static_cast<Eigen::Index>(obs.size())));
    return policy_to_joints(env.model(), std::span<const double>(a.data(), static_cast<std::size_t>(a.size())));
  };
}

inline Controller hybrid_policy_controller(GaussianPolicy policy, GaitParams gait) {
  return [policy = std::move(policy), gait](const SimEnv& env, const Observation& obs) {
    auto spine = [&policy](const Observation& o) {
      const Vector a = policy.deterministic_action(Eigen::Map<const Vector>(o.data(), static_cast<Eigen::Index>(o.size())));
      return std::vector<double>(a.data(), a.data() + a.size());
    };
    return hybrid_controller(gait, spine, env.model(), obs, env.time() + env.config().dt);
  };
}

// RL view of a robot version: full joint control (policy) or spine only
// (hybrid), both in normalised [-1, 1] action units.
class LocomotionTask {
 public:
  LocomotionTask(SimEnv env, ControllerKind kind, GaitParams gait) : env_(std::move(env)), kind_(kind), gait_(gait) {
    if (kind_ != ControllerKind::kPolicy && kind_ != ControllerKind::kHybrid) {
      throw std::invalid_argument("only policy and hybrid versions are trainable");
    }
    if (kind_ == ControllerKind::kHybrid && !env_.model().has_spine) {
      throw std::invalid_argument("hybrid control needs a model with a spinal joint");
    }
  }

  std::size_t observation_size() const { return env_.observation_size(); }
  std::size_t action_size() const { return kind_ == ControllerKind::kHybrid ? 1 : env_.action_size(); }
  const SimEnv& env() const { return env_; }

  Observation reset(std::uint64_t seed) {
    obs_ = env_.reset(seed);
    return obs_;
  }

  StepResult step(const std::vector<double>& action) {
    if (action.size() != action_size()) throw std::invalid_argument("task action has the wrong size");
    JointVector q;
    if (kind_ == ControllerKind::kHybrid) {
      auto fixed = [&action](const Observation&) { return action; };
      q = hybrid_controller(gait_, fixed, env_.model(), obs_, env_.time() + env_.config().dt);
    } else {
      q = policy_to_joints(env_.model(), action);
    }
    StepResult r = env_.step(q);
    obs_ = r.obs;
    return r;
  }

 private:
  SimEnv env_;
  ControllerKind kind_;
  GaitParams gait_;
  Observation obs_;
};

}  // namespace salamander
