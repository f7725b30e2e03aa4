#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace salamander {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

inline Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Maps an angle onto (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, kTwoPi);
  if (w <= -kPi) w += kTwoPi;
  return w;
}

// Fractional part in [0, 1), also for negative inputs.
inline double fract(double v) {
  double f = v - std::floor(v);
  if (f >= 1.0) f = 0.0;
  return f;
}

// Rigid planar transform: p_world = R(rotation) * p + translation.
struct PlanarTransform {
  double rotation = 0.0;
  Vec2 translation;

  Vec2 apply(const Vec2& p) const { return rotate(p, rotation) + translation; }
  Vec2 apply_inverse(const Vec2& p) const { return rotate(p - translation, -rotation); }
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace salamander
