#include <gtest/gtest.h>

#include <sstream>

#include "salamander/controllers.hpp"
#include "salamander/toy_env.hpp"
#include "salamander/train.hpp"

using namespace salamander;

static_assert(RlEnvironment<PointGoalEnv>);
static_assert(RlEnvironment<LocomotionTask>);

TEST(PointGoal, Dynamics) {
  PointGoalEnv env;
  EXPECT_EQ(env.reset(0), (Observation{0.0, 1.0}));
  StepResult r = env.step({-1.0});
  EXPECT_EQ(env.position(), 0.0);  // wall
  r = env.step({1.0});
  EXPECT_NEAR(env.position(), 0.02, 1e-15);
  EXPECT_NEAR(r.reward, 0.02 + 0.02 - 0.001, 1e-15);
  EXPECT_THROW(env.step({1.0, 2.0}), std::invalid_argument);
}

TEST(PointGoal, FullSpeedReachesGoal) {
  PointGoalEnv env;
  env.reset(0);
  StepResult r;
  int steps = 0;
  do {
    r = env.step({1.0});
    ++steps;
  } while (!r.done);
  EXPECT_TRUE(r.info.goal_reached);
  EXPECT_FALSE(r.truncated);
  EXPECT_EQ(steps, 48);
}

TEST(PointGoal, RandomBaselineIsSmall) {
  const double base = random_policy_return({}, 500, 1);
  EXPECT_GT(base, 0.0);
  EXPECT_LT(base, 0.5);
}

TEST(Train, CurveHasOnePointPerInterval) {
  PointGoalEnv env;
  SacConfig c = point_goal_sac_config();
  c.eval_interval = 500;
  c.hidden = 16;
  SacAgent agent(2, 1, c, 3);
  const LearningCurve curve = train(env, agent, 2000, 3);
  ASSERT_EQ(curve.points.size(), 4u);
  EXPECT_EQ(curve.points[0].env_step, 500);
  EXPECT_EQ(curve.points[3].env_step, 2000);
  EXPECT_EQ(curve.updates, 2000 - c.warmup + 1);
  EXPECT_EQ(curve.entropy_trace.size(), static_cast<std::size_t>(curve.updates));
  std::ostringstream out;
  write_curve_csv(out, curve);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "env_step,eval_return,eval_goal_distance,seed");
}

TEST(Train, UpdatesPerStepScalesUpdates) {
  PointGoalEnv env;
  SacConfig c = point_goal_sac_config();
  c.hidden = 8;
  c.updates_per_step = 0.5;
  SacAgent agent(2, 1, c, 3);
  const LearningCurve curve = train(env, agent, 1500, 3);
  EXPECT_EQ(curve.updates, (1500 - c.warmup + 1) / 2);
}

TEST(Train, SameSeedSameCurve) {
  auto run = [] {
    PointGoalEnv env;
    SacConfig c = point_goal_sac_config();
    c.eval_interval = 500;
    c.hidden = 16;
    SacAgent agent(2, 1, c, 9);
    const LearningCurve curve = train(env, agent, 1500, 9);
    std::ostringstream out;
    write_curve_csv(out, curve);
    agent.save(out, "x");
    return out.str();
  };
  EXPECT_EQ(run(), run());
}

TEST(Train, LearnsPointGoalQuickly) {
  PointGoalEnv env;
  SacAgent agent(2, 1, point_goal_sac_config(), 1);
  train(env, agent, 8000, 1);
  const EvalResult e = evaluate_policy(PointGoalEnv{}, agent, 1);
  EXPECT_GT(e.episode_return, 5 * random_policy_return({}, 500, 1));
}

TEST(LocomotionTask, ActionSizes) {
  Config c;
  c.set("version", "hybrid-9");
  const RobotModel hybrid = build_robot(c);
  LocomotionTask task(SimEnv(hybrid, env_config_from(c)), ControllerKind::kHybrid, gait_params_from(c, hybrid));
  EXPECT_EQ(task.action_size(), 1u);
  EXPECT_EQ(task.observation_size(), 24u);
  task.reset(0);
  EXPECT_THROW(task.step({0.0, 0.0}), std::invalid_argument);
  EXPECT_NO_THROW(task.step({0.3}));

  c.set("version", "rl-8");
  const RobotModel eight = build_robot(c);
  EXPECT_THROW(LocomotionTask(SimEnv(eight, env_config_from(c)), ControllerKind::kHybrid, gait_params_from(c, eight)),
               std::invalid_argument);
  EXPECT_THROW(LocomotionTask(SimEnv(eight, env_config_from(c)), ControllerKind::kHildebrand, gait_params_from(c, eight)),
               std::invalid_argument);
}

TEST(Controllers, DenormaliseCoversJointRange) {
  Config c;
  c.set("version", "rl-9");
  const RobotModel m = build_robot(c);
  for (int j = 0; j < m.n_joints; ++j) {
    EXPECT_DOUBLE_EQ(denormalise_joint(m, j, -1.0), m.joint_limits[j].min);
    EXPECT_DOUBLE_EQ(denormalise_joint(m, j, 1.0), m.joint_limits[j].max);
    EXPECT_DOUBLE_EQ(denormalise_joint(m, j, 5.0), m.joint_limits[j].max);
  }
  EXPECT_THROW(policy_to_joints(m, std::vector<double>(8)), std::invalid_argument);
}

TEST(Controllers, HybridConfinesPolicyToSpine) {
  Config c;
  c.set("version", "hybrid-9");
  const RobotModel m = build_robot(c);
  const GaitParams g = gait_params_from(c, m);
  GaitParams limbs = g;
  limbs.spine_amplitude = 0.0;
  for (double a : {-1.0, 0.0, 0.7}) {
    auto spine = [a](const Observation&) { return std::vector<double>{a}; };
    for (int k = 0; k < 100; ++k) {
      const double t = k * 0.02;
      const JointVector q = hybrid_controller(g, spine, m, {}, t);
      const JointVector ref = joint_targets(limbs, m, t);
      for (int j = 0; j < 8; ++j) EXPECT_EQ(q[j], ref[j]);
      EXPECT_DOUBLE_EQ(q[kSpineJoint], denormalise_joint(m, kSpineJoint, a));
    }
  }
  auto two = [](const Observation&) { return std::vector<double>{0.0, 0.0}; };
  EXPECT_THROW(hybrid_controller(g, two, m, {}, 0.0), std::invalid_argument);
}
