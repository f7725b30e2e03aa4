#pragma once

// Open-loop Hildebrand walk. Each limb runs the same periodic profile
// shifted by its phase offset: stance for local phase in [0, duty), swing
// for the rest of the cycle.

#include <array>
#include <cmath>
#include <stdexcept>

#include "salamander/config.hpp"
#include "salamander/robot_model.hpp"

namespace salamander {

struct GaitParams {
  double period = 1.0;  // seconds
  double duty = 0.75;
  // Indexed FL, FR, HL, HR; lateral-sequence walk HL -> FL -> HR -> FR.
  std::array<double, 4> limb_offsets = {0.25, 0.75, 0.0, 0.5};
  double shoulder_amplitude = 0.5;
  double lift_amplitude = 0.4;
  double spine_amplitude = 0.3;
  double spine_phase = 0.0;
  // Fraction of swing spent on each half-cosine lift/lower ramp.
  double lift_blend = 0.2;

  void validate() const {
    if (!(period > 0.0)) throw std::invalid_argument("gait period must be positive");
    if (!(duty > 0.0 && duty < 1.0)) throw std::invalid_argument("duty factor must lie in (0, 1)");
    for (double o : limb_offsets) {
      if (!(o >= 0.0 && o < 1.0)) throw std::invalid_argument("limb offsets must lie in [0, 1)");
    }
    if (!(spine_phase >= 0.0 && spine_phase < 1.0)) throw std::invalid_argument("spine phase must lie in [0, 1)");
    if (!(shoulder_amplitude >= 0.0) || !(lift_amplitude >= 0.0) || !(spine_amplitude >= 0.0)) {
      throw std::invalid_argument("gait amplitudes must be non-negative");
    }
    if (!(lift_blend > 0.0 && lift_blend <= 0.5)) throw std::invalid_argument("lift blend must lie in (0, 0.5]");
  }
};

// Reads gait.* keys. The spine amplitude is forced to zero for spineless
// models unless explicitly configured (which then fails consistency checks).
inline GaitParams gait_params_from(const Config& config, const RobotModel& model) {
  GaitParams p;
  p.period = config.get_double("gait.period", p.period);
  p.duty = config.get_double("gait.duty", p.duty);
  auto offsets = config.get_doubles("gait.limb_offsets",
                                    {p.limb_offsets[0], p.limb_offsets[1], p.limb_offsets[2], p.limb_offsets[3]});
  if (offsets.size() != 4) throw ConfigError("gait.limb_offsets needs 4 values (FL, FR, HL, HR)");
  for (int i = 0; i < 4; ++i) p.limb_offsets[i] = offsets[i];
  p.shoulder_amplitude = config.get_double("gait.shoulder_amplitude", p.shoulder_amplitude);
  p.lift_amplitude = config.get_double("gait.lift_amplitude", p.lift_amplitude);
  p.spine_amplitude = config.get_double("gait.spine_amplitude", model.has_spine ? p.spine_amplitude : 0.0);
  p.spine_phase = config.get_double("gait.spine_phase", p.spine_phase);
  p.lift_blend = config.get_double("gait.lift_blend", p.lift_blend);
  p.validate();
  return p;
}

inline double global_phase(double t, const GaitParams& params) { return fract(t / params.period); }

inline double limb_phase(double global, int limb, const GaitParams& params) {
  if (limb < 0 || limb >= kNumLimbs) throw std::out_of_range("limb index out of range");
  return fract(global - params.limb_offsets[limb]);
}

inline bool is_stance(double local, double duty) { return local < duty; }

// Shoulder: +A at touchdown, linear retraction to -A over stance, linear
// return over swing.
inline double shoulder_profile(double local, const GaitParams& p) {
  const double a = p.shoulder_amplitude;
  if (is_stance(local, p.duty)) return a - 2.0 * a * (local / p.duty);
  return -a + 2.0 * a * ((local - p.duty) / (1.0 - p.duty));
}

// Leg lift: 0 in stance; half-cosine ramps at both ends of swing.
inline double lift_profile(double local, const GaitParams& p) {
  if (is_stance(local, p.duty)) return 0.0;
  const double s = (local - p.duty) / (1.0 - p.duty);
  const double b = p.lift_blend;
  if (s < b) return 0.5 * p.lift_amplitude * (1.0 - std::cos(kPi * s / b));
  if (s > 1.0 - b) return 0.5 * p.lift_amplitude * (1.0 - std::cos(kPi * (1.0 - s) / b));
  return p.lift_amplitude;
}

inline double spine_profile(double global, const GaitParams& p) {
  return p.spine_amplitude * std::sin(kTwoPi * (global - p.spine_phase));
}

inline JointVector joint_targets(const GaitParams& params, const RobotModel& model, double t) {
  if (!model.has_spine && params.spine_amplitude != 0.0) {
    throw std::invalid_argument("spine amplitude must be zero for a model without a spinal joint");
  }
  const double g = global_phase(t, params);
  JointVector q(static_cast<std::size_t>(model.n_joints));
  for (int limb = 0; limb < kNumLimbs; ++limb) {
    const double local = limb_phase(g, limb, params);
    q[shoulder_index(limb)] = shoulder_profile(local, params);
    q[leg_index(limb)] = lift_profile(local, params);
  }
  if (model.has_spine) q[kSpineJoint] = spine_profile(g, params);
  return q;
}

}  // namespace salamander
