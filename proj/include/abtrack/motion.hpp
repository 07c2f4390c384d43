#pragma once

// Constant-velocity Kalman filter over (cx, cy, area, aspect) with velocities on
// the first three components, following the SORT parameterisation.

#include <Eigen/Dense>

#include <cmath>
#include <utility>

#include "abtrack/geometry.hpp"

namespace abtrack {

struct MotionNoise {
  // Initial state covariance.
  double init_position_var = 10.0;
  double init_velocity_var = 10000.0;
  // Process noise.
  double process_position_var = 1.0;
  double process_velocity_var = 0.01;
  double process_area_velocity_var = 0.0001;
  // Measurement noise on (cx, cy) and (area, aspect).
  double measurement_position_var = 1.0;
  double measurement_shape_var = 10.0;
};

struct Velocity {
  double dx = 0.0;
  double dy = 0.0;
};

class MotionFilter {
 public:
  using State = Eigen::Matrix<double, 7, 1>;
  using Covariance = Eigen::Matrix<double, 7, 7>;
  using Measurement = Eigen::Matrix<double, 4, 1>;

  explicit MotionFilter(const BBox2D& box, const MotionNoise& noise = {})
      : noise_(noise), last_box_(box) {
    state_.setZero();
    state_.head<4>() = to_measurement(box);
    covariance_.setZero();
    for (int i = 0; i < 4; ++i) covariance_(i, i) = noise.init_position_var;
    for (int i = 4; i < 7; ++i) covariance_(i, i) = noise.init_velocity_var;
  }

  /// Advances one frame under the constant-velocity model and returns the
  /// predicted box. A non-positive predicted area or aspect leaves the last
  /// valid box in place and marks the filter stale.
  BBox2D predict() {
    if (state_(2) + state_(6) <= 0.0) state_(6) = 0.0;

    Covariance f = Covariance::Identity();
    f(0, 4) = f(1, 5) = f(2, 6) = 1.0;
    state_ = f * state_;
    covariance_ = f * covariance_ * f.transpose() + process_noise();
    covariance_ = (0.5 * (covariance_ + covariance_.transpose())).eval();

    ++age_;
    ++frames_since_update_;

    if (auto box = state_box(); box.has_value) {
      last_box_ = box.value;
      stale_ = false;
    } else {
      stale_ = true;
    }
    return last_box_;
  }

  /// Kalman correction with an observed box (Joseph form).
  void update(const BBox2D& observation) {
    Eigen::Matrix<double, 4, 7> h = Eigen::Matrix<double, 4, 7>::Zero();
    for (int i = 0; i < 4; ++i) h(i, i) = 1.0;
    Eigen::Matrix4d r = Eigen::Matrix4d::Zero();
    r(0, 0) = r(1, 1) = noise_.measurement_position_var;
    r(2, 2) = r(3, 3) = noise_.measurement_shape_var;

    const Measurement residual = to_measurement(observation) - h * state_;
    const Eigen::Matrix4d s = h * covariance_ * h.transpose() + r;
    const Eigen::Matrix<double, 7, 4> gain = covariance_ * h.transpose() * s.inverse();
    state_ += gain * residual;
    const Covariance ikh = Covariance::Identity() - gain * h;
    covariance_ = ikh * covariance_ * ikh.transpose() + gain * r * gain.transpose();
    covariance_ = (0.5 * (covariance_ + covariance_.transpose())).eval();

    frames_since_update_ = 0;
    if (auto box = state_box(); box.has_value) {
      last_box_ = box.value;
      stale_ = false;
    } else {
      last_box_ = observation;
      stale_ = true;
    }
  }

  /// Box implied by the current state (last valid box when degenerate).
  BBox2D box() const { return last_box_; }
  Velocity velocity() const { return {state_(4), state_(5)}; }

  const State& state() const { return state_; }
  const Covariance& covariance() const { return covariance_; }
  int age() const { return age_; }
  int frames_since_update() const { return frames_since_update_; }
  bool stale() const { return stale_; }

  static Measurement to_measurement(const BBox2D& b) {
    Measurement z;
    const Point2D c = b.center();
    z << c.x, c.y, b.area(), b.w() / b.h();
    return z;
  }

 private:
  struct MaybeBox {
    bool has_value = false;
    BBox2D value;
  };

  MaybeBox state_box() const {
    const double area = state_(2);
    const double aspect = state_(3);
    if (!(area > 0.0) || !(aspect > 0.0) || !std::isfinite(area) || !std::isfinite(aspect)) {
      return {};
    }
    const double w = std::sqrt(area * aspect);
    const double h = area / w;
    return {true, BBox2D(state_(0) - w / 2.0, state_(1) - h / 2.0, w, h)};
  }

  Covariance process_noise() const {
    Covariance q = Covariance::Zero();
    for (int i = 0; i < 4; ++i) q(i, i) = noise_.process_position_var;
    q(4, 4) = q(5, 5) = noise_.process_velocity_var;
    q(6, 6) = noise_.process_area_velocity_var;
    return q;
  }

  MotionNoise noise_;
  State state_;
  Covariance covariance_;
  BBox2D last_box_;
  int age_ = 0;
  int frames_since_update_ = 0;
  bool stale_ = false;
};

}  // namespace abtrack
