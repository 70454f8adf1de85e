// Copyright 2026 The Crossflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CROSSFLOW__KINEMATICS_HPP_
#define CROSSFLOW__KINEMATICS_HPP_

namespace crossflow::kinematics
{

/// Vehicle limits. Defaults describe an ordinary passenger car.
struct VehicleConfig
{
  double wheelbase = 2.5;
  double delta_max = 0.6;
  double v_cap = 15.0;
  double yaw_rate_cap = 1.0;
  /// Below this rear-wheel speed the steering angle is undefined.
  double v_eps = 1e-3;
};

struct Point
{
  double x = 0.0;
  double y = 0.0;
};

/// Pose of the baseline midpoint plus yaw. Axle centers are derived.
struct BicycleState
{
  double x_m = 0.0;
  double y_m = 0.0;
  double yaw = 0.0;

  Point rear_axle(double wheelbase) const;
  Point front_axle(double wheelbase) const;

  static BicycleState from_rear_axle(double x_r, double y_r, double yaw, double wheelbase);
};

/// Rear-wheel speed and front steering angle.
struct ControlInput
{
  double v_r = 0.0;
  double delta = 0.0;
};

/// Midpoint velocity in the RSU frame plus yaw rate.
struct ActionVector
{
  double vx = 0.0;
  double vy = 0.0;
  double yaw_rate = 0.0;

  bool operator==(const ActionVector &) const = default;
};

struct ControlTranslation
{
  ControlInput control;
  /// True when |v_r| < v_eps with a non-zero yaw rate; delta is then pinned
  /// to sign(yaw_rate) * delta_max.
  bool degenerate = false;
};

/// Inverse of the bicycle velocity map: rear speed by projecting the
/// midpoint velocity on the heading, steering from psi_dot = v_r tan(delta) / l.
ControlTranslation action_to_control(
  const ActionVector & a, double yaw, const VehicleConfig & cfg = {});

/// Forward velocity map: yaw rate from steering, rear-axle velocity along the
/// heading, midpoint velocity offset by the rotation about the rear axle.
ActionVector control_to_action(const ControlInput & u, double yaw, double wheelbase);

/// Rear-axle state derivative for a fixed control.
struct RearAxleRate
{
  double x_dot = 0.0;
  double y_dot = 0.0;
  double yaw_dot = 0.0;
};
RearAxleRate rear_axle_rate(double yaw, const ControlInput & u, double wheelbase);

/// One RK4 step on the rear-axle ODE with constant control. Requires
/// 0 < dt <= 0.1. The returned yaw is wrapped into (-pi, pi].
BicycleState integrate_step(
  const BicycleState & s, const ControlInput & u, double dt, double wheelbase);

inline constexpr double kMaxStep = 0.1;

}  // namespace crossflow::kinematics

#endif  // CROSSFLOW__KINEMATICS_HPP_
