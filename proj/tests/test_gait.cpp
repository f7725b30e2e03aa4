#include <gtest/gtest.h>

#include <random>

#include "salamander/gait.hpp"

using namespace salamander;

namespace {

RobotModel model_for(const char* id) {
  Config c;
  c.set("version", id);
  return build_robot(c);
}

}  // namespace

TEST(Gait, DefaultsMatchWalk) {
  const GaitParams p;
  EXPECT_DOUBLE_EQ(p.duty, 0.75);
  EXPECT_DOUBLE_EQ(p.period, 1.0);
}

TEST(Gait, StanceFractionPerLimb) {
  const GaitParams p;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 10000;
  std::array<int, 4> stance{};
  for (int i = 0; i < n; ++i) {
    const double g = u(rng);
    for (int l = 0; l < kNumLimbs; ++l) stance[l] += is_stance(limb_phase(g, l, p), p.duty);
  }
  for (int l = 0; l < kNumLimbs; ++l) EXPECT_NEAR(stance[l] / double(n), 0.75, 0.015);
}

// Enumerated grid: exactly one limb swings at any phase for the default
// lateral-sequence offsets (each limb swings over its own quarter).
TEST(Gait, ExactlyOneLimbInSwingOnGrid) {
  const GaitParams p;
  for (int i = 0; i < 4000; ++i) {
    const double g = (i + 0.5) / 4000.0;
    int swing = 0;
    for (int l = 0; l < kNumLimbs; ++l) swing += !is_stance(limb_phase(g, l, p), p.duty);
    EXPECT_EQ(swing, 1) << "phase " << g;
  }
}

TEST(Gait, FootfallOrderIsLateralSequence) {
  // Touchdown (local phase 0) order through the cycle: HL, FL, HR, FR.
  const GaitParams p;
  std::vector<std::pair<double, int>> touchdown;
  for (int l = 0; l < kNumLimbs; ++l) touchdown.emplace_back(p.limb_offsets[l], l);
  std::sort(touchdown.begin(), touchdown.end());
  EXPECT_EQ(touchdown[0].second, kHindLeft);
  EXPECT_EQ(touchdown[1].second, kFrontLeft);
  EXPECT_EQ(touchdown[2].second, kHindRight);
  EXPECT_EQ(touchdown[3].second, kFrontRight);
}

TEST(Gait, ProfilesAreContinuousAndPeriodic) {
  const GaitParams p;
  const RobotModel m = model_for("rl-9");
  JointVector prev = joint_targets(p, m, 0.0);
  double max_jump = 0.0;
  for (int i = 1; i <= 2000; ++i) {
    const JointVector q = joint_targets(p, m, i * 1e-3);
    for (int j = 0; j < 9; ++j) max_jump = std::max(max_jump, std::abs(q[j] - prev[j]));
    prev = q;
  }
  EXPECT_LT(max_jump, 0.02);
  const JointVector a = joint_targets(p, m, 0.3);
  const JointVector b = joint_targets(p, m, 1.3);
  for (int j = 0; j < 9; ++j) EXPECT_NEAR(a[j], b[j], 1e-12);
}

TEST(Gait, ShoulderAndLiftValues) {
  const GaitParams p;
  EXPECT_DOUBLE_EQ(shoulder_profile(0.0, p), p.shoulder_amplitude);
  EXPECT_NEAR(shoulder_profile(p.duty - 1e-12, p), -p.shoulder_amplitude, 1e-9);
  EXPECT_DOUBLE_EQ(shoulder_profile(p.duty / 2, p), 0.0);
  EXPECT_DOUBLE_EQ(lift_profile(0.3, p), 0.0);
  EXPECT_DOUBLE_EQ(lift_profile(p.duty + 0.5 * (1 - p.duty), p), p.lift_amplitude);
  EXPECT_NEAR(lift_profile(1.0 - 1e-12, p), 0.0, 1e-9);
}

TEST(Gait, LiftedLegsAreSwingLegs) {
  GaitParams p;
  p.spine_amplitude = 0.0;
  const RobotModel m = model_for("rl-8");
  for (int i = 0; i < 1000; ++i) {
    const double t = i / 1000.0;
    const JointVector q = joint_targets(p, m, t);
    for (int l = 0; l < kNumLimbs; ++l) {
      if (q[leg_index(l)] > m.lift_threshold) EXPECT_FALSE(is_stance(limb_phase(global_phase(t, p), l, p), p.duty));
    }
  }
}

TEST(Gait, SpinelessModelRejectsSpineAmplitude) {
  GaitParams p;
  p.spine_amplitude = 0.2;
  EXPECT_THROW(joint_targets(p, model_for("rl-8"), 0.0), std::invalid_argument);
  Config c;
  c.set("version", "rl-8");
  EXPECT_DOUBLE_EQ(gait_params_from(c, model_for("rl-8")).spine_amplitude, 0.0);
}

TEST(Gait, InvalidParamsThrow) {
  GaitParams p;
  p.duty = 1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.period = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.limb_offsets[2] = 1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  EXPECT_THROW(limb_phase(0.0, 4, GaitParams{}), std::out_of_range);
  const Config c = Config::parse("gait.limb_offsets = 0, 0.5\n");
  EXPECT_THROW(gait_params_from(c, model_for("rl-8")), ConfigError);
}

TEST(Gait, MirrorOffsetsMirrorJointTrace) {
  // Swapping left and right offsets mirrors the limb joints: the left limbs
  // of one gait follow the right limbs of the other.
  GaitParams a;
  a.spine_amplitude = 0.0;
  GaitParams b = a;
  std::swap(b.limb_offsets[kFrontLeft], b.limb_offsets[kFrontRight]);
  std::swap(b.limb_offsets[kHindLeft], b.limb_offsets[kHindRight]);
  const RobotModel m = model_for("rl-8");
  for (int i = 0; i < 200; ++i) {
    const double t = i * 0.013;
    const JointVector qa = joint_targets(a, m, t);
    const JointVector qb = joint_targets(b, m, t);
    EXPECT_DOUBLE_EQ(qa[shoulder_index(kFrontLeft)], qb[shoulder_index(kFrontRight)]);
    EXPECT_DOUBLE_EQ(qa[leg_index(kHindRight)], qb[leg_index(kHindLeft)]);
  }
}
