#pragma once

#include <cmath>

#include "rslam/core.hpp"

namespace rslam {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;

  double norm() const { return std::hypot(x, y); }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

/// Absolute pose p = [x, y, theta]. The sensor frame maps to the world frame
/// through U(theta) = [[cos, sin], [-sin, cos]]:
///   world = (x, y) + U(theta) * local.
/// Local x is the boresight, local y the +90 degree steering direction.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // radians, wrapped to (-pi, pi]

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose&, const Pose&) = default;
};

/// U(theta) * v.
inline Vec2 apply_u(double theta, Vec2 v) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {c * v.x + s * v.y, -s * v.x + c * v.y};
}

/// U(theta)^T * v, the inverse of apply_u.
inline Vec2 apply_u_transpose(double theta, Vec2 v) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

inline Vec2 local_to_world(const Pose& p, Vec2 local) { return p.position() + apply_u(p.theta, local); }
inline Vec2 world_to_local(const Pose& p, Vec2 world) { return apply_u_transpose(p.theta, world - p.position()); }

/// World direction of the local steering angle phi (radians).
inline Vec2 steering_direction(const Pose& p, double phi) { return apply_u(p.theta, {std::cos(phi), std::sin(phi)}); }

/// Express pose b in the frame anchored at pose a (a becomes the origin with
/// zero heading), consistently with the U(theta) composition rule.
inline Pose relative_to(const Pose& a, const Pose& b) {
  const Vec2 d = apply_u_transpose(a.theta, b.position() - a.position());
  return {d.x, d.y, wrap_angle(b.theta - a.theta)};
}

}  // namespace rslam
