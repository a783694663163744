#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "rslam/geometry.hpp"
#include "rslam/pose.hpp"

namespace rslam::track {

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Matrix3 = Eigen::Matrix3d;

// State layout [x, y, vx, vy, theta, omega].
enum StateIndex : int { kX = 0, kY = 1, kVx = 2, kVy = 3, kTheta = 4, kOmega = 5 };

/// Raw absolute pose from the previous one and a relative pose in the sensor
/// frame: p_k = p_{k-1} + U(theta_{k-1}) * [dx, dy, dtheta].
inline Pose compose_pose(const Pose& prev, const RelativePose& rel) {
  const Vec2 d = apply_u(prev.theta, {rel.dx, rel.dy});
  return {prev.x + d.x, prev.y + d.y, wrap_angle(prev.theta + deg2rad(rel.dtheta_deg))};
}

struct KinematicState {
  Vector6 mean = Vector6::Zero();
  Matrix6 cov = Matrix6::Zero();

  Pose pose() const { return {mean(kX), mean(kY), mean(kTheta)}; }
};

/// Origin, zero velocity, diag(1e-6 pose, 1e-2 velocity).
inline KinematicState initial_state(const Pose& start = {}) {
  KinematicState s;
  s.mean(kX) = start.x;
  s.mean(kY) = start.y;
  s.mean(kTheta) = start.theta;
  s.cov.diagonal() << 1e-6, 1e-6, 1e-2, 1e-2, 1e-6, 1e-2;
  return s;
}

struct MotionModel {
  double t_f = 1.0;
  double w0 = 1e-4;
  double w_theta = 1e-4;
  Matrix6 A = Matrix6::Identity();
  Matrix6 Q = Matrix6::Zero();
};

/// Constant-velocity model with white acceleration noise of spectral
/// densities w0 (linear) and w_theta (angular).
inline MotionModel build_motion_model(double t_f, double w0, double w_theta) {
  require(t_f > 0.0, "track", "T_F must be positive");
  require(w0 >= 0.0 && w_theta >= 0.0, "track", "noise densities must be nonnegative");
  MotionModel m{t_f, w0, w_theta, Matrix6::Identity(), Matrix6::Zero()};
  m.A(kX, kVx) = t_f;
  m.A(kY, kVy) = t_f;
  m.A(kTheta, kOmega) = t_f;
  const double t2 = t_f * t_f / 2.0, t3 = t_f * t_f * t_f / 3.0;
  for (const auto& [p, v] : {std::pair{kX, kVx}, std::pair{kY, kVy}}) {
    m.Q(p, p) = w0 * t3;
    m.Q(p, v) = m.Q(v, p) = w0 * t2;
    m.Q(v, v) = w0 * t_f;
  }
  m.Q(kTheta, kTheta) = w_theta * t3;
  m.Q(kTheta, kOmega) = m.Q(kOmega, kTheta) = w_theta * t2;
  m.Q(kOmega, kOmega) = w_theta * t_f;
  return m;
}

struct ObservationModel {
  double sigma_x = 4.7e-3;
  double sigma_y = 4.7e-3;
  double sigma_theta = 1.7e-3;
  double q_min = 1e-2;

  /// Rows (x, y, theta) of the state.
  static Eigen::Matrix<double, 3, 6> B() {
    Eigen::Matrix<double, 3, 6> b = Eigen::Matrix<double, 3, 6>::Zero();
    b(0, kX) = b(1, kY) = b(2, kTheta) = 1.0;
    return b;
  }
};

inline Matrix3 build_R(double sigma_x, double sigma_y, double sigma_theta, double q, double q_min = 1e-2) {
  require(sigma_x > 0.0 && sigma_y > 0.0 && sigma_theta > 0.0, "track", "sigmas must be positive");
  const double qq = std::max(std::isfinite(q) ? q : 0.0, q_min);
  return Eigen::Vector3d(sigma_x * sigma_x, sigma_y * sigma_y, sigma_theta * sigma_theta).asDiagonal() *
         (1.0 / (qq * qq));
}

inline KinematicState predict(const KinematicState& s, const MotionModel& m) {
  KinematicState out;
  out.mean = m.A * s.mean;
  out.mean(kTheta) = wrap_angle(out.mean(kTheta));
  out.cov = m.A * s.cov * m.A.transpose() + m.Q;
  out.cov = (0.5 * (out.cov + out.cov.transpose())).eval();
  return out;
}

/// Joseph-form measurement update; the heading residual is wrapped.
inline KinematicState update(const KinematicState& s, const Pose& meas, const ObservationModel& obs, double q) {
  const auto B = ObservationModel::B();
  const Matrix3 R = build_R(obs.sigma_x, obs.sigma_y, obs.sigma_theta, q, obs.q_min);
  Eigen::Vector3d nu(meas.x - s.mean(kX), meas.y - s.mean(kY), wrap_angle(meas.theta - s.mean(kTheta)));
  const Matrix3 S = B * s.cov * B.transpose() + R;
  const Eigen::Matrix<double, 6, 3> K = s.cov * B.transpose() * S.inverse();
  KinematicState out;
  out.mean = s.mean + K * nu;
  out.mean(kTheta) = wrap_angle(out.mean(kTheta));
  const Matrix6 I_KB = Matrix6::Identity() - K * B;
  out.cov = I_KB * s.cov * I_KB.transpose() + K * R * K.transpose();
  out.cov = (0.5 * (out.cov + out.cov.transpose())).eval();
  return out;
}

/// Predict then update; a non-finite measurement only predicts.
inline KinematicState kf_step(const KinematicState& s, const Pose& meas, const MotionModel& m,
                              const ObservationModel& obs, double q) {
  const KinematicState pred = predict(s, m);
  if (!std::isfinite(meas.x) || !std::isfinite(meas.y) || !std::isfinite(meas.theta)) return pred;
  return update(pred, meas, obs, q);
}

}  // namespace rslam::track
