#pragma once

// Planar (top view) kinematic model of the salamander-like quadruped.
//
// Body frame origin is the spine pivot, x forward. The rear segment is the
// body frame itself; the front segment is rotated by the spine angle about
// the pivot. Each limb has a shoulder joint that sweeps the foot fore-aft
// (positive = protraction) and a leg joint that acts as a lift channel: a
// foot is down while its leg angle is at or below lift_threshold.

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "salamander/common.hpp"
#include "salamander/config.hpp"

namespace salamander {

enum Limb : int { kFrontLeft = 0, kFrontRight = 1, kHindLeft = 2, kHindRight = 3 };
inline constexpr int kNumLimbs = 4;
inline constexpr int kSpineJoint = 8;

inline constexpr int shoulder_index(int limb) { return 2 * limb; }
inline constexpr int leg_index(int limb) { return 2 * limb + 1; }
inline constexpr bool is_front(int limb) { return limb == kFrontLeft || limb == kFrontRight; }
inline constexpr bool is_left(int limb) { return limb == kFrontLeft || limb == kHindLeft; }

inline constexpr std::array<std::string_view, 9> kJointNames = {
    "fl_shoulder", "fl_leg", "fr_shoulder", "fr_leg", "hl_shoulder",
    "hl_leg",      "hr_shoulder", "hr_leg", "spine"};

// Joint angles in radians, ordered FL, FR, HL, HR (shoulder, leg) then spine.
class JointVector {
 public:
  JointVector() = default;
  explicit JointVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  JointVector(std::initializer_list<double> v) : values_(v) {}
  explicit JointVector(std::vector<double> v) : values_(std::move(v)) {}

  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> view() const { return values_; }
  const std::vector<double>& values() const { return values_; }
  bool operator==(const JointVector&) const = default;

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

 private:
  std::vector<double> values_;
};

struct BodyPose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // heading of the rear segment, (-pi, pi]

  PlanarTransform transform() const { return {theta, {x, y}}; }
  static BodyPose from_transform(const PlanarTransform& t) {
    return {t.translation.x, t.translation.y, wrap_angle(t.rotation)};
  }
};

struct JointLimit {
  double min = 0.0;
  double max = 0.0;
};

enum class ControllerKind { kHildebrand, kPolicy, kHybrid, kCpg };

struct VersionInfo {
  std::string_view name;
  std::string_view id;
  bool has_spine;
  bool torque_limited;
  ControllerKind controller;
};

// Robot versions, in benchmark order.
inline constexpr std::array<VersionInfo, 6> kVersions = {{
    {"8-joints Hildebrand", "hildebrand-8", false, false, ControllerKind::kHildebrand},
    {"8-joints RL", "rl-8", false, false, ControllerKind::kPolicy},
    {"8-joints RL with torque limit on shoulder and leg joints", "rl-8-tl", false, true,
     ControllerKind::kPolicy},
    {"8-joints Hildebrand + 1 joint RL", "hybrid-9", true, false, ControllerKind::kHybrid},
    {"9-joints RL", "rl-9", true, false, ControllerKind::kPolicy},
    {"9-joints RL with torque limit on shoulder and leg joints", "rl-9-tl", true, true,
     ControllerKind::kPolicy},
}};

inline std::optional<VersionInfo> find_version(std::string_view name_or_id) {
  for (const auto& v : kVersions) {
    if (v.name == name_or_id || v.id == name_or_id) return v;
  }
  return std::nullopt;
}

inline ControllerKind parse_controller(const std::string& s) {
  if (s == "hildebrand") return ControllerKind::kHildebrand;
  if (s == "policy" || s == "rl") return ControllerKind::kPolicy;
  if (s == "hybrid") return ControllerKind::kHybrid;
  if (s == "cpg") return ControllerKind::kCpg;
  throw ConfigError("unknown controller kind: " + s);
}

inline std::string_view controller_name(ControllerKind k) {
  switch (k) {
    case ControllerKind::kHildebrand: return "hildebrand";
    case ControllerKind::kPolicy: return "policy";
    case ControllerKind::kHybrid: return "hybrid";
    case ControllerKind::kCpg: return "cpg";
  }
  return "?";
}

// Resolves "version" (full name or short id, or "custom") into a
// VersionInfo. Custom variants read robot.has_spine, robot.torque_limited and
// controller.
inline VersionInfo resolve_version(const Config& config) {
  const std::string name = config.get_string("version", "8-joints Hildebrand");
  if (name == "custom") {
    return {"custom", "custom", config.get_bool("robot.has_spine", false),
            config.get_bool("robot.torque_limited", false),
            parse_controller(config.get_string("controller", "hildebrand"))};
  }
  auto v = find_version(name);
  if (!v) throw ConfigError("unknown robot version: " + name);
  return *v;
}

struct RobotModel {
  int n_joints = 8;
  bool has_spine = false;
  double body_half_length = 0.15;
  // Segment-frame anchors, FL FR HL HR. Front anchors live in the front
  // segment frame, hind anchors in the rear one; both frames share the pivot.
  std::array<Vec2, 4> shoulder_anchors{};
  double limb_length = 0.08;
  double lift_threshold = 0.05;
  std::vector<JointLimit> joint_limits;
  std::vector<double> action_limits;  // max |delta angle| per control step

  void validate() const {
    if (n_joints != (has_spine ? 9 : 8)) {
      throw std::invalid_argument("n_joints must be 8 without spine and 9 with spine");
    }
    if (!(body_half_length > 0.0) || !(limb_length > 0.0)) {
      throw std::invalid_argument("robot geometry must be strictly positive");
    }
    if (joint_limits.size() != static_cast<std::size_t>(n_joints) ||
        action_limits.size() != static_cast<std::size_t>(n_joints)) {
      throw std::invalid_argument("limit vectors must have n_joints entries");
    }
    for (const auto& l : joint_limits) {
      if (!(l.min < l.max)) throw std::invalid_argument("joint limit interval is empty");
    }
    for (double a : action_limits) {
      if (!(a > 0.0)) throw std::invalid_argument("action limits must be strictly positive");
    }
    for (int limb = 0; limb < kNumLimbs; ++limb) {
      const double x = shoulder_anchors[limb].x;
      if (is_front(limb) ? !(x > 0.0) : !(x < 0.0)) {
        throw std::invalid_argument("front limbs must anchor ahead of the pivot, hind limbs behind");
      }
    }
  }
};

inline RobotModel build_robot(const VersionInfo& version, const Config& config) {
  RobotModel m;
  m.has_spine = version.has_spine;
  m.n_joints = m.has_spine ? 9 : 8;
  m.body_half_length = config.get_double("robot.body_half_length", 0.15);
  m.limb_length = config.get_double("robot.limb_length", 0.08);
  m.lift_threshold = config.get_double("robot.lift_threshold", 0.05);
  const double lateral = config.get_double("robot.anchor_lateral", 0.05);
  if (!(m.body_half_length > 0.0) || !(m.limb_length > 0.0) || !(lateral >= 0.0)) {
    throw std::invalid_argument("robot geometry must be strictly positive");
  }
  m.shoulder_anchors = {Vec2{m.body_half_length, lateral}, Vec2{m.body_half_length, -lateral},
                        Vec2{-m.body_half_length, lateral}, Vec2{-m.body_half_length, -lateral}};

  const double shoulder_lim = config.get_double("robot.shoulder_limit", 0.8);
  const JointLimit leg{config.get_double("robot.leg_min", -0.4), config.get_double("robot.leg_max", 0.6)};
  const double spine_lim = config.get_double("robot.spine_limit", 0.6);

  double shoulder_step = config.get_double("robot.shoulder_step_limit", 0.5);
  double leg_step = config.get_double("robot.leg_step_limit", 0.5);
  const double spine_step = config.get_double("robot.spine_step_limit", 0.5);
  if (version.torque_limited) {
    const double limited = config.get_double("robot.torque_limited_step_limit", 0.05);
    shoulder_step = std::min(shoulder_step, limited);
    leg_step = std::min(leg_step, limited);
  }

  for (int limb = 0; limb < kNumLimbs; ++limb) {
    m.joint_limits.push_back({-shoulder_lim, shoulder_lim});
    m.joint_limits.push_back(leg);
    m.action_limits.push_back(shoulder_step);
    m.action_limits.push_back(leg_step);
  }
  if (m.has_spine) {
    m.joint_limits.push_back({-spine_lim, spine_lim});
    m.action_limits.push_back(spine_step);
  }
  m.validate();
  return m;
}

inline RobotModel build_robot(const Config& config) { return build_robot(resolve_version(config), config); }

struct FootState {
  std::array<Vec2, 4> positions{};
  std::array<bool, 4> down{};

  int stance_count() const { return static_cast<int>(std::count(down.begin(), down.end(), true)); }
};

inline void check_size(const RobotModel& model, const JointVector& q) {
  if (q.size() != static_cast<std::size_t>(model.n_joints)) {
    throw std::invalid_argument("joint vector has " + std::to_string(q.size()) + " entries, model expects " +
                                std::to_string(model.n_joints));
  }
}

inline double spine_angle(const RobotModel& model, const JointVector& q) {
  return model.has_spine ? q[kSpineJoint] : 0.0;
}

// Foot positions in the body (rear-segment) frame.
inline FootState body_frame_feet(const RobotModel& model, const JointVector& q) {
  check_size(model, q);
  FootState out;
  const double spine = spine_angle(model, q);
  for (int limb = 0; limb < kNumLimbs; ++limb) {
    const double a = q[shoulder_index(limb)];
    const double side = is_left(limb) ? 1.0 : -1.0;
    Vec2 foot = model.shoulder_anchors[limb] + Vec2{std::sin(a), side * std::cos(a)} * model.limb_length;
    if (is_front(limb) && spine != 0.0) foot = rotate(foot, spine);
    out.positions[limb] = foot;
    out.down[limb] = q[leg_index(limb)] <= model.lift_threshold;
  }
  return out;
}

inline FootState forward_kinematics(const RobotModel& model, const BodyPose& pose, const JointVector& q) {
  FootState feet = body_frame_feet(model, q);
  const PlanarTransform t = pose.transform();
  for (auto& p : feet.positions) p = t.apply(p);
  return feet;
}

// Moves each joint toward its request by at most action_limits[j], within
// joint limits.
inline JointVector clamp_action(const RobotModel& model, const JointVector& current, const JointVector& requested) {
  check_size(model, current);
  check_size(model, requested);
  JointVector out(current.size());
  for (std::size_t j = 0; j < current.size(); ++j) {
    const auto& lim = model.joint_limits[j];
    const double target = std::clamp(requested[j], lim.min, lim.max);
    const double step = model.action_limits[j];
    out[j] = std::clamp(target, current[j] - step, current[j] + step);
  }
  return out;
}

}  // namespace salamander
