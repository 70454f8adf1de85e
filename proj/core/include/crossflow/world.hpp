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

#ifndef CROSSFLOW__WORLD_HPP_
#define CROSSFLOW__WORLD_HPP_

#include <cstddef>
#include <limits>
#include <span>
#include <string_view>

namespace crossflow::world
{

enum class ParticipantKind { Pedestrian, Vehicle, Cyclist };

std::string_view to_string(ParticipantKind kind);
/// Accepts the lowercase names produced by to_string. Throws Error otherwise.
ParticipantKind parse_kind(std::string_view name);

/// One tracked object as reported by the roadside unit. Positions are object
/// centers in the RSU frame; v_lon / v_lat are body-frame velocity components
/// (v_lat positive to the left).
struct ParticipantState
{
  ParticipantKind kind = ParticipantKind::Vehicle;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
  double v_lon = 0.0;
  double v_lat = 0.0;

  double world_vx() const;
  double world_vy() const;

  bool operator==(const ParticipantState &) const = default;
};

/// Builds a consistent state from a world-frame velocity.
ParticipantState make_state(
  ParticipantKind kind, double x, double y, double heading, double vx, double vy);

enum class SurroundArea { LeftFront, MiddleFront, RightFront, Back };

std::string_view to_string(SurroundArea area);

/// Ego footprint used to split the plane into surround areas.
struct Footprint
{
  double half_width = 0.9;
  /// Longitudinal offset of the front bumper line from the ego midpoint.
  double front_offset = 1.25;
};

struct RelativeKinematics
{
  double distance = 0.0;
  double closing_speed = 0.0;
  /// Angle between the displacement other->ego and the velocity of other
  /// relative to ego. Below pi/2 the pair is closing.
  double approach_angle = 0.0;
};

struct Observation
{
  ParticipantState ego;
  ParticipantState lf;
  ParticipantState mf;
  ParticipantState rf;
  bool lf_present = false;
  bool mf_present = false;
  bool rf_present = false;
  /// Signed lateral offset of the ego midpoint from its route centerline
  /// (left positive). Filled in by the environment; 0 when unknown.
  double lane_offset = 0.0;

  const ParticipantState & slot(SurroundArea area) const;
  bool present(SurroundArea area) const;

  bool operator==(const Observation &) const = default;
};

inline constexpr double kSentinelRange = 100.0;

/// Stand-in for an empty surround area: a copy of the ego placed
/// kSentinelRange ahead in its body frame, so relative velocity is zero.
ParticipantState absent_sentinel(const ParticipantState & ego);

SurroundArea classify_area(
  const ParticipantState & ego, const ParticipantState & other, const Footprint & fp = {});

struct NearestResult
{
  ParticipantState state;
  bool present = false;
  /// Index into the input list, or npos when absent.
  std::size_t index = static_cast<std::size_t>(-1);
};

/// Closest participant in a front area; the lower index wins ties.
/// Throws Error for SurroundArea::Back.
NearestResult nearest_in_area(
  const ParticipantState & ego, std::span<const ParticipantState> others, SurroundArea area,
  const Footprint & fp = {});

/// Throws Error when the two centers coincide.
RelativeKinematics relative_kinematics(
  const ParticipantState & ego, const ParticipantState & other);

inline constexpr double kDefaultRecedingTtc = 1.0;

/// Piecewise time-to-collision. Closing pairs get d / (v cos theta); pairs
/// with theta in [pi/2, pi] get receding_ttc. A closing angle with zero
/// closing rate yields +infinity.
double compute_ttc(const RelativeKinematics & rel, double receding_ttc = kDefaultRecedingTtc);

Observation build_observation(
  const ParticipantState & ego, std::span<const ParticipantState> others,
  const Footprint & fp = {});

}  // namespace crossflow::world

#endif  // CROSSFLOW__WORLD_HPP_
