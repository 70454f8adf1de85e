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

#include "crossflow/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include "crossflow/common.hpp"

namespace crossflow::kinematics
{

Point BicycleState::rear_axle(double wheelbase) const
{
  return {x_m - 0.5 * wheelbase * std::cos(yaw), y_m - 0.5 * wheelbase * std::sin(yaw)};
}

Point BicycleState::front_axle(double wheelbase) const
{
  const Point r = rear_axle(wheelbase);
  return {r.x + wheelbase * std::cos(yaw), r.y + wheelbase * std::sin(yaw)};
}

BicycleState BicycleState::from_rear_axle(double x_r, double y_r, double yaw, double wheelbase)
{
  return {x_r + 0.5 * wheelbase * std::cos(yaw), y_r + 0.5 * wheelbase * std::sin(yaw), yaw};
}

ControlTranslation action_to_control(
  const ActionVector & a, double yaw, const VehicleConfig & cfg)
{
  if (!(cfg.wheelbase > 0.0)) {
    throw Error("action_to_control: wheelbase must be positive");
  }
  ControlTranslation out;
  out.control.v_r = a.vx * std::cos(yaw) + a.vy * std::sin(yaw);
  if (std::abs(out.control.v_r) < cfg.v_eps) {
    if (a.yaw_rate != 0.0) {
      out.control.delta = std::copysign(cfg.delta_max, a.yaw_rate);
      out.degenerate = true;
    }
    return out;
  }
  const double delta = std::atan(cfg.wheelbase * a.yaw_rate / out.control.v_r);
  out.control.delta = std::clamp(delta, -cfg.delta_max, cfg.delta_max);
  return out;
}

ActionVector control_to_action(const ControlInput & u, double yaw, double wheelbase)
{
  if (!(wheelbase > 0.0)) {
    throw Error("control_to_action: wheelbase must be positive");
  }
  const double yaw_rate = u.v_r / wheelbase * std::tan(u.delta);
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const double half_turn = 0.5 * wheelbase * yaw_rate;
  return {u.v_r * c - half_turn * s, u.v_r * s + half_turn * c, yaw_rate};
}

RearAxleRate rear_axle_rate(double yaw, const ControlInput & u, double wheelbase)
{
  return {u.v_r * std::cos(yaw), u.v_r * std::sin(yaw), u.v_r / wheelbase * std::tan(u.delta)};
}

BicycleState integrate_step(
  const BicycleState & s, const ControlInput & u, double dt, double wheelbase)
{
  if (!(dt > 0.0 && dt <= kMaxStep)) {
    throw Error("integrate_step: dt must lie in (0, 0.1]");
  }
  const Point r = s.rear_axle(wheelbase);
  // Yaw evolves independently of position for constant control, so the
  // stages only need the intermediate yaw.
  const auto k1 = rear_axle_rate(s.yaw, u, wheelbase);
  const auto k2 = rear_axle_rate(s.yaw + 0.5 * dt * k1.yaw_dot, u, wheelbase);
  const auto k3 = rear_axle_rate(s.yaw + 0.5 * dt * k2.yaw_dot, u, wheelbase);
  const auto k4 = rear_axle_rate(s.yaw + dt * k3.yaw_dot, u, wheelbase);
  const double x_r = r.x + dt * (k1.x_dot + 2.0 * k2.x_dot + 2.0 * k3.x_dot + k4.x_dot) / 6.0;
  const double y_r = r.y + dt * (k1.y_dot + 2.0 * k2.y_dot + 2.0 * k3.y_dot + k4.y_dot) / 6.0;
  const double yaw =
    s.yaw + dt * (k1.yaw_dot + 2.0 * k2.yaw_dot + 2.0 * k3.yaw_dot + k4.yaw_dot) / 6.0;
  return BicycleState::from_rear_axle(x_r, y_r, normalize_angle(yaw), wheelbase);
}

}  // namespace crossflow::kinematics
