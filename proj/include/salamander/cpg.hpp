#pragma once

// Coupled Hopf oscillators driving the joints.
//
//   dx/dt = alpha (mu - r^2) x - omega y + cx
//   dy/dt = alpha (mu - r^2) y + omega x + cy
//
// The coupling input to oscillator j is sum_i k_ij R(phi_ij) s_i, which pulls
// the phase of j toward phase(i) + phi_ij. Parameters and couplings are plain
// data so an outer controller can retune them between steps.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "salamander/config.hpp"
#include "salamander/gait.hpp"
#include "salamander/robot_model.hpp"

namespace salamander {

struct HopfParams {
  double alpha = 10.0;
  double mu = 1.0;
  double omega = kTwoPi;

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("Hopf alpha must be positive");
    if (!(mu >= 0.0)) throw std::invalid_argument("Hopf mu must be non-negative");
    if (!std::isfinite(omega)) throw std::invalid_argument("Hopf omega must be finite");
  }
};

struct Coupling {
  int from = 0;
  int to = 0;
  double weight = 0.0;
  double phase_bias = 0.0;  // radians
};

enum class Channel { kX, kY };

struct JointMapping {
  int oscillator = 0;
  double gain = 0.0;
  double offset = 0.0;
  Channel channel = Channel::kX;
};

struct CpgNetwork {
  std::vector<Vec2> states;
  std::vector<HopfParams> params;
  std::vector<Coupling> couplings;
  std::vector<JointMapping> mapping;  // one entry per robot joint

  std::size_t size() const { return states.size(); }

  void validate() const {
    if (params.size() != states.size()) throw std::invalid_argument("one HopfParams per oscillator required");
    for (const auto& p : params) p.validate();
    const int n = static_cast<int>(states.size());
    for (const auto& c : couplings) {
      if (c.from < 0 || c.from >= n || c.to < 0 || c.to >= n) {
        throw std::invalid_argument("coupling references an unknown oscillator");
      }
      if (!(c.weight >= 0.0)) throw std::invalid_argument("coupling weights must be non-negative");
    }
    for (const auto& m : mapping) {
      if (m.oscillator < 0 || m.oscillator >= n) throw std::invalid_argument("joint mapping references an unknown oscillator");
    }
  }
};

inline Vec2 hopf_derivative(const Vec2& s, const HopfParams& p, const Vec2& coupling_input) {
  const double radial = p.alpha * (p.mu - (s.x * s.x + s.y * s.y));
  return {radial * s.x - p.omega * s.y + coupling_input.x, radial * s.y + p.omega * s.x + coupling_input.y};
}

namespace detail {

inline std::vector<Vec2> network_derivative(const CpgNetwork& net, const std::vector<Vec2>& states) {
  std::vector<Vec2> input(states.size());
  for (const auto& c : net.couplings) input[c.to] += rotate(states[c.from], c.phase_bias) * c.weight;
  std::vector<Vec2> d(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) d[i] = hopf_derivative(states[i], net.params[i], input[i]);
  return d;
}

inline std::vector<Vec2> axpy(const std::vector<Vec2>& x, const std::vector<Vec2>& dx, double h) {
  std::vector<Vec2> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + dx[i] * h;
  return out;
}

}  // namespace detail

// One classical RK4 step of the whole coupled system.
inline CpgNetwork network_step(CpgNetwork net, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("CPG step size must be positive");
  const auto& s = net.states;
  const auto k1 = detail::network_derivative(net, s);
  const auto k2 = detail::network_derivative(net, detail::axpy(s, k1, 0.5 * dt));
  const auto k3 = detail::network_derivative(net, detail::axpy(s, k2, 0.5 * dt));
  const auto k4 = detail::network_derivative(net, detail::axpy(s, k3, dt));
  for (std::size_t i = 0; i < s.size(); ++i) {
    net.states[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
  }
  return net;
}

inline JointVector cpg_to_joints(const CpgNetwork& net, const RobotModel& model) {
  if (net.mapping.size() != static_cast<std::size_t>(model.n_joints)) {
    throw std::invalid_argument("CPG mapping must cover every robot joint exactly once");
  }
  JointVector q(net.mapping.size());
  for (std::size_t j = 0; j < net.mapping.size(); ++j) {
    const auto& m = net.mapping[j];
    if (m.oscillator < 0 || static_cast<std::size_t>(m.oscillator) >= net.size()) {
      throw std::invalid_argument("joint mapping references an unknown oscillator");
    }
    const Vec2& s = net.states[m.oscillator];
    const double v = m.offset + m.gain * (m.channel == Channel::kX ? s.x : s.y);
    q[j] = std::clamp(v, model.joint_limits[j].min, model.joint_limits[j].max);
  }
  return q;
}

struct CpgSettings {
  HopfParams hopf;
  double coupling = 1.0;
  double shoulder_gain = 0.5;
  double shoulder_offset = 0.0;
  double leg_gain = -0.4;
  double leg_offset = -0.2;
  double spine_gain = 0.0;
  double spine_offset = 0.0;
  int substeps = 20;  // integration steps per control step
};

inline CpgSettings cpg_settings_from(const Config& config, const GaitParams& gait) {
  CpgSettings s;
  s.hopf.alpha = config.get_double("cpg.alpha", s.hopf.alpha);
  s.hopf.mu = config.get_double("cpg.mu", s.hopf.mu);
  s.hopf.omega = config.get_double("cpg.omega", kTwoPi / gait.period);
  s.coupling = config.get_double("cpg.coupling", s.coupling);
  s.shoulder_gain = config.get_double("cpg.shoulder_gain", s.shoulder_gain);
  s.shoulder_offset = config.get_double("cpg.shoulder_offset", s.shoulder_offset);
  s.leg_gain = config.get_double("cpg.leg_gain", s.leg_gain);
  s.leg_offset = config.get_double("cpg.leg_offset", s.leg_offset);
  s.spine_gain = config.get_double("cpg.spine_gain", s.spine_gain);
  s.spine_offset = config.get_double("cpg.spine_offset", s.spine_offset);
  s.substeps = static_cast<int>(config.get_int("cpg.substeps", s.substeps));
  if (s.substeps < 1) throw ConfigError("cpg.substeps must be at least 1");
  s.hopf.validate();
  return s;
}

// Four limb oscillators, all-to-all coupled with biases that reproduce the
// gait's limb offsets: oscillator phase = 2 pi (global - offset). Shoulders
// read x (protracted at local phase 0), legs read y so the lift peaks mid
// protraction. The spine, when present, follows the hind-left oscillator.
inline CpgNetwork make_walk_network(const GaitParams& gait, const RobotModel& model, const CpgSettings& s,
                                    bool start_on_cycle = true) {
  CpgNetwork net;
  const double radius = std::sqrt(s.hopf.mu);
  for (int limb = 0; limb < kNumLimbs; ++limb) {
    const double phase = -kTwoPi * gait.limb_offsets[limb];
    net.states.push_back(start_on_cycle ? Vec2{radius * std::cos(phase), radius * std::sin(phase)}
                                        : Vec2{0.1 + 0.01 * limb, 0.0});
    net.params.push_back(s.hopf);
  }
  for (int i = 0; i < kNumLimbs; ++i) {
    for (int j = 0; j < kNumLimbs; ++j) {
      if (i == j) continue;
      const double bias = kTwoPi * (gait.limb_offsets[i] - gait.limb_offsets[j]);
      net.couplings.push_back({i, j, s.coupling, bias});
    }
  }
  for (int limb = 0; limb < kNumLimbs; ++limb) {
    net.mapping.push_back({limb, s.shoulder_gain, s.shoulder_offset, Channel::kX});
    net.mapping.push_back({limb, s.leg_gain, s.leg_offset, Channel::kY});
  }
  if (model.has_spine) net.mapping.push_back({kHindLeft, s.spine_gain, s.spine_offset, Channel::kY});
  net.validate();
  return net;
}

}  // namespace salamander
