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

#ifndef CROSSFLOW__ENV_HPP_
#define CROSSFLOW__ENV_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "crossflow/common.hpp"
#include "crossflow/intersection_map.hpp"
#include "crossflow/kinematics.hpp"
#include "crossflow/world.hpp"

namespace crossflow::env
{

using kinematics::ActionVector;
using world::Observation;
using world::ParticipantKind;
using world::ParticipantState;

struct RewardConfig
{
  double alpha_safety = 1.0 / 3.0;
  double alpha_effi = 1.0;
  double alpha_dev = 1.0;
  double ttc_thre = 4.0;
  double receding_ttc = world::kDefaultRecedingTtc;
  double gamma = 0.99;

  /// Largest attainable per-step total reward.
  double max_total() const { return 3.0 * alpha_safety + alpha_effi + alpha_dev; }
  void validate() const;
};

enum class Density { Low, Middle, High };

std::string_view to_string(Density d);
/// "low" / "middle" / "high"; throws Error otherwise.
Density parse_density(std::string_view name);
Density density_from_count(int objects_in_zone);

enum class EgoRoutes { Through, All };

struct TrafficConfig
{
  /// Per-participant desired-speed range for vehicles, as fractions of v_max.
  double vehicle_speed_min = 0.7;
  double vehicle_speed_max = 1.1;
  double cyclist_speed_min = 3.0;
  double cyclist_speed_max = 5.0;
  double pedestrian_speed_min = 1.0;
  double pedestrian_speed_max = 1.6;
  double pedestrian_wait_max = 6.0;
  /// Car-following: decelerate inside reaction_gap, stop inside stop_gap.
  double reaction_gap = 8.0;
  double stop_gap = 3.0;
  double follow_corridor = 1.6;
  double accel = 2.0;
  double decel = 4.0;
  double cyclist_lane_offset = 1.0;
  double spawn_min_separation = 4.0;
  /// When false, reset() places the ego alone.
  bool enabled = true;
};

struct EnvConfig
{
  MapConfig map;
  kinematics::VehicleConfig vehicle;
  RewardConfig reward;
  TrafficConfig traffic;
  double ego_half_width = 0.9;
  double dt = 0.1;
  int timeout_steps = 600;
  /// Distance past the zone edge, along the exit arm, that ends an episode.
  double exit_margin = 10.0;
  double collision_radius = 1.5;
  double collision_radius_pedestrian = 1.0;
  double off_route_distance = 7.0;
  double ego_start_distance = 35.0;
  double ego_initial_speed = 5.0;
  EgoRoutes ego_routes = EgoRoutes::Through;

  world::Footprint footprint() const { return {ego_half_width, 0.5 * vehicle.wheelbase}; }
  void validate() const;
};

// Reward terms.

double reward_safety(const Observation & obs, const RewardConfig & cfg);
double reward_efficiency(double speed, double v_max);
double reward_deviation(double lateral_offset, double lane_width);

enum class Behavior { CruiseCarFollowing, PedestrianCrossing, CyclistCruise };

struct ScriptedParticipant
{
  int track_id = 0;
  ParticipantKind kind = ParticipantKind::Vehicle;
  Behavior behavior = Behavior::CruiseCarFollowing;
  /// Route id for vehicles and cyclists; crosswalk index for pedestrians.
  int path = 0;
  double path_position = 0.0;
  double speed = 0.0;
  double desired_speed = 0.0;
  double lateral_offset = 0.0;
  /// Pedestrians walk a->b when +1, b->a when -1.
  int direction = 1;
  double wait_remaining = 0.0;
  bool active = true;
  ParticipantState state;
};

enum class DoneReason { None, ExitedIntersectionArea, Collision, Timeout, OffRoute };

std::string_view to_string(DoneReason r);

struct EnvState
{
  std::uint64_t seed = 0;
  Density requested_density = Density::Low;
  int step = 0;
  int route_id = 0;
  kinematics::BicycleState ego_pose;
  ParticipantState ego;
  std::vector<ScriptedParticipant> participants;
  Rng rng{0};
  int next_track_id = 1;
  bool done = false;
  DoneReason done_reason = DoneReason::None;
  /// Interpolated crossing times of the zone boundary, seconds since reset.
  std::optional<double> zone_entry_time;
  std::optional<double> zone_exit_time;
};

/// Hash of every participant's initial-condition bytes; equal hashes mean
/// bit-identical scenes.
std::uint64_t scene_hash(const EnvState & s);

struct StepOutcome
{
  Observation observation;
  double reward_total = 0.0;
  double reward_safety = 0.0;
  double reward_effi = 0.0;
  double reward_dev = 0.0;
  bool done = false;
  DoneReason done_reason = DoneReason::None;
  int objects_in_zone = 0;
  /// The action after sanitization, i.e. what the vehicle actually did.
  ActionVector executed_action;
};

/// Projects an arbitrary action into the executable set: speed and yaw-rate
/// caps, forward-only rear-wheel speed, and a rear-speed cap that keeps the
/// executed midpoint speed within v_cap. Returns the control and the action
/// it realizes at `yaw`.
struct SanitizedAction
{
  kinematics::ControlInput control;
  ActionVector executed;
};
SanitizedAction sanitize_action(
  const ActionVector & a, double yaw, const kinematics::VehicleConfig & cfg);

/// The intersection POMDP. One instance is single-threaded; copies are
/// independent.
class Environment
{
public:
  explicit Environment(EnvConfig cfg = {});

  Observation reset(std::uint64_t seed, Density density);
  StepOutcome step(const ActionVector & action);

  const EnvConfig & config() const { return cfg_; }
  const IntersectionMap & map() const { return *map_; }
  const EnvState & state() const { return state_; }
  const Route & ego_route() const { return map_->route(state_.route_id); }

  /// Active non-ego participants, in track order.
  std::vector<ParticipantState> others() const;
  Observation observe() const;
  int objects_in_zone() const;
  Density density_class() const { return density_from_count(objects_in_zone()); }

  /// Seconds between zone entry and exit, when both happened.
  std::optional<double> travel_time() const;

private:
  void spawn_traffic(Density density);
  bool try_place(ScriptedParticipant p);
  struct SnapshotEntry
  {
    ParticipantState state;
    int track_id = 0;
    /// Scripted road users resolve mutual blocking by track age.
    bool yields_mutually = false;
  };
  void advance_participant(ScriptedParticipant & p, const std::vector<SnapshotEntry> & snap);
  void refresh_state(ScriptedParticipant & p) const;
  void make_ego_state(const kinematics::ControlInput & u);

  EnvConfig cfg_;
  std::shared_ptr<const IntersectionMap> map_;
  EnvState state_;
};

}  // namespace crossflow::env

#endif  // CROSSFLOW__ENV_HPP_
