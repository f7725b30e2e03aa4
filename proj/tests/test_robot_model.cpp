#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "salamander/robot_model.hpp"

using namespace salamander;

namespace {

// Homogeneous 3x3 frames, composed independently of the library's Vec2 math.
Eigen::Matrix3d frame(double angle, double tx, double ty) {
  Eigen::Matrix3d m;
  m << std::cos(angle), -std::sin(angle), tx, std::sin(angle), std::cos(angle), ty, 0, 0, 1;
  return m;
}

Vec2 chain_foot(const RobotModel& m, const BodyPose& pose, const JointVector& q, int limb) {
  const double side = is_left(limb) ? 1.0 : -1.0;
  const double spine = (m.has_spine && is_front(limb)) ? q[kSpineJoint] : 0.0;
  const Vec2 anchor = m.shoulder_anchors[limb];
  const Eigen::Matrix3d world = frame(pose.theta, pose.x, pose.y) * frame(spine, 0, 0) *
                                frame(0, anchor.x, anchor.y) * frame(-side * q[shoulder_index(limb)], 0, 0);
  const Eigen::Vector3d p = world * Eigen::Vector3d(0, side * m.limb_length, 1);
  return {p.x(), p.y()};
}

RobotModel model_for(const char* id) {
  Config c;
  c.set("version", id);
  return build_robot(c);
}

}  // namespace

TEST(RobotModel, VersionsInTableOrder) {
  ASSERT_EQ(kVersions.size(), 6u);
  EXPECT_EQ(kVersions[0].name, "8-joints Hildebrand");
  EXPECT_EQ(kVersions[3].name, "8-joints Hildebrand + 1 joint RL");
  EXPECT_FALSE(kVersions[1].torque_limited);
  EXPECT_TRUE(kVersions[2].torque_limited);
  EXPECT_TRUE(kVersions[5].has_spine);
  EXPECT_EQ(find_version("rl-9-tl")->name, "9-joints RL with torque limit on shoulder and leg joints");
  EXPECT_FALSE(find_version("10-joints").has_value());
}

TEST(RobotModel, JointCountFollowsSpine) {
  EXPECT_EQ(model_for("rl-8").n_joints, 8);
  EXPECT_EQ(model_for("rl-9").n_joints, 9);
  EXPECT_EQ(model_for("rl-9").joint_limits.size(), 9u);
}

TEST(RobotModel, TorqueLimitTightensLimbStepsOnly) {
  const RobotModel free = model_for("rl-9");
  const RobotModel limited = model_for("rl-9-tl");
  for (int j = 0; j < 8; ++j) EXPECT_LT(limited.action_limits[j], free.action_limits[j]);
  EXPECT_EQ(limited.action_limits[kSpineJoint], free.action_limits[kSpineJoint]);
}

TEST(RobotModel, UnknownVersionAndBadGeometryThrow) {
  Config c;
  c.set("version", "nope");
  EXPECT_THROW(build_robot(c), ConfigError);
  c.set("version", "rl-8");
  c.set("robot.limb_length", -1.0);
  EXPECT_THROW(build_robot(c), std::invalid_argument);
}

TEST(RobotModel, CustomVersion) {
  const Config c = Config::parse("version = custom\nrobot.has_spine = true\ncontroller = cpg\n");
  const VersionInfo v = resolve_version(c);
  EXPECT_TRUE(v.has_spine);
  EXPECT_EQ(v.controller, ControllerKind::kCpg);
  EXPECT_EQ(build_robot(c).n_joints, 9);
}

TEST(ForwardKinematics, MatchesChainOfFrames) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const char* id : {"rl-8", "rl-9"}) {
    const RobotModel m = model_for(id);
    for (int trial = 0; trial < 200; ++trial) {
      JointVector q(m.n_joints);
      for (int j = 0; j < m.n_joints; ++j) q[j] = 0.7 * u(rng);
      const BodyPose pose{u(rng), u(rng), 3.0 * u(rng)};
      const FootState feet = forward_kinematics(m, pose, q);
      for (int l = 0; l < kNumLimbs; ++l) {
        const Vec2 expect = chain_foot(m, pose, q, l);
        EXPECT_NEAR(feet.positions[l].x, expect.x, 1e-12);
        EXPECT_NEAR(feet.positions[l].y, expect.y, 1e-12);
        EXPECT_EQ(feet.down[l], q[leg_index(l)] <= m.lift_threshold);
      }
    }
  }
}

TEST(ForwardKinematics, HomePostureIsSymmetric) {
  const RobotModel m = model_for("rl-9");
  const FootState f = body_frame_feet(m, JointVector(9));
  EXPECT_EQ(f.stance_count(), 4);
  EXPECT_DOUBLE_EQ(f.positions[kFrontLeft].y, -f.positions[kFrontRight].y);
  EXPECT_DOUBLE_EQ(f.positions[kHindLeft].x, -f.positions[kFrontLeft].x);
}

TEST(ForwardKinematics, SizeMismatchThrows) {
  const RobotModel m = model_for("rl-8");
  EXPECT_THROW(forward_kinematics(m, {}, JointVector(9)), std::invalid_argument);
}

TEST(ClampAction, RespectsLimitsAndStep) {
  const RobotModel m = model_for("rl-8-tl");
  JointVector current(8);
  JointVector request(8);
  for (int j = 0; j < 8; ++j) request[j] = 10.0;
  const JointVector out = clamp_action(m, current, request);
  for (int j = 0; j < 8; ++j) {
    EXPECT_DOUBLE_EQ(out[j], std::min(m.action_limits[j], m.joint_limits[j].max));
  }
}

TEST(ClampAction, IsIdempotentAndBounded) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const RobotModel m = model_for("rl-9");
  for (int trial = 0; trial < 500; ++trial) {
    JointVector cur(9), req(9);
    for (int j = 0; j < 9; ++j) {
      cur[j] = std::clamp(u(rng), m.joint_limits[j].min, m.joint_limits[j].max);
      req[j] = u(rng);
    }
    const JointVector once = clamp_action(m, cur, req);
    for (int j = 0; j < 9; ++j) {
      EXPECT_LE(std::abs(once[j] - cur[j]), m.action_limits[j] + 1e-15);
      EXPECT_GE(once[j], m.joint_limits[j].min);
      EXPECT_LE(once[j], m.joint_limits[j].max);
    }
    EXPECT_EQ(clamp_action(m, once, once), once);
  }
}

TEST(BodyPose, TransformRoundTrip) {
  const BodyPose p{0.3, -0.2, 2.5};
  const BodyPose back = BodyPose::from_transform(p.transform());
  EXPECT_NEAR(back.x, p.x, 1e-15);
  EXPECT_NEAR(back.theta, p.theta, 1e-15);
  const Vec2 v{0.1, 0.4};
  const Vec2 w = p.transform().apply_inverse(p.transform().apply(v));
  EXPECT_NEAR(w.x, v.x, 1e-15);
  EXPECT_NEAR(w.y, v.y, 1e-15);
}
