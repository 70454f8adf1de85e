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

#include "crossflow/driving.hpp"

#include <algorithm>
#include <cmath>

#include "crossflow/common.hpp"

namespace crossflow::env
{

double pure_pursuit_steering(
  const world::ParticipantState & ego, const Route & route, double lateral_bias,
  const kinematics::VehicleConfig & vehicle)
{
  const double l = vehicle.wheelbase;
  const double rx = ego.x - 0.5 * l * std::cos(ego.heading);
  const double ry = ego.y - 0.5 * l * std::sin(ego.heading);
  const auto proj = route.centerline.project(rx, ry);
  const double lookahead = std::clamp(2.0 + 0.6 * ego.speed, 4.0, 12.0);
  const auto target = route.centerline.pose_at(proj.s + lookahead, lateral_bias);
  const double dx = target.x - rx;
  const double dy = target.y - ry;
  const double dist = std::hypot(dx, dy);
  if (dist < 1e-9) {
    return 0.0;
  }
  const double alpha = normalize_angle(std::atan2(dy, dx) - ego.heading);
  const double delta = std::atan(2.0 * l * std::sin(alpha) / dist);
  return std::clamp(delta, -vehicle.delta_max, vehicle.delta_max);
}

double rate_limited_speed(double current, double target, double accel, double decel, double dt)
{
  return std::max(0.0, std::clamp(target, current - decel * dt, current + accel * dt));
}

kinematics::ActionVector follow_route(
  const world::ParticipantState & ego, const Route & route, double speed, double lateral_bias,
  const kinematics::VehicleConfig & vehicle)
{
  const double delta = pure_pursuit_steering(ego, route, lateral_bias, vehicle);
  return kinematics::control_to_action({speed, delta}, ego.heading, vehicle.wheelbase);
}

}  // namespace crossflow::env
