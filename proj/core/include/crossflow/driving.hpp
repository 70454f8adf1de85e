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

#ifndef CROSSFLOW__DRIVING_HPP_
#define CROSSFLOW__DRIVING_HPP_

#include "crossflow/intersection_map.hpp"
#include "crossflow/kinematics.hpp"
#include "crossflow/world.hpp"

namespace crossflow::env
{

/// Pure-pursuit steering from the rear axle toward a point one lookahead
/// distance further along the route, shifted by `lateral_bias` (left positive).
double pure_pursuit_steering(
  const world::ParticipantState & ego, const Route & route, double lateral_bias,
  const kinematics::VehicleConfig & vehicle);

/// Speed change limited to [-decel*dt, +accel*dt], never negative.
double rate_limited_speed(
  double current, double target, double accel, double decel, double dt);

/// Action that drives at `speed` with pure-pursuit steering.
kinematics::ActionVector follow_route(
  const world::ParticipantState & ego, const Route & route, double speed, double lateral_bias,
  const kinematics::VehicleConfig & vehicle);

}  // namespace crossflow::env

#endif  // CROSSFLOW__DRIVING_HPP_
