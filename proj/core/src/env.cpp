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

#include "crossflow/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace crossflow::env
{

void RewardConfig::validate() const
{
  if (!(alpha_safety >= 0.0 && alpha_effi >= 0.0 && alpha_dev >= 0.0)) {
    throw Error("reward weights must be non-negative");
  }
  if (!(ttc_thre > 0.0)) {
    throw Error("ttc_thre must be positive");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw Error("gamma must lie in (0, 1]");
  }
  if (!(max_total() > 0.0)) {
    throw Error("at least one reward weight must be positive");
  }
}

void EnvConfig::validate() const
{
  reward.validate();
  if (!(dt > 0.0 && dt <= kinematics::kMaxStep)) {
    throw Error("dt must lie in (0, 0.1]");
  }
  if (timeout_steps < 1) {
    throw Error("timeout_steps must be at least 1");
  }
  if (!(vehicle.wheelbase > 0.0) || !(vehicle.v_cap > 0.0) || !(vehicle.yaw_rate_cap > 0.0) ||
    !(vehicle.delta_max > 0.0 && vehicle.delta_max < kPi / 2.0))
  {
    throw Error("vehicle limits must be positive (delta_max below pi/2)");
  }
  if (!(ego_start_distance > map.zone_half_size && ego_start_distance < map.arm_length)) {
    throw Error("ego_start_distance must lie between the zone edge and the arm end");
  }
  if (!(map.zone_half_size + exit_margin < map.arm_length)) {
    throw Error("exit point must lie on the exit arm");
  }
}

std::string_view to_string(Density d)
{
  switch (d) {
    case Density::Low:
      return "low";
    case Density::Middle:
      return "middle";
    case Density::High:
      return "high";
  }
  return "unknown";
}

Density parse_density(std::string_view name)
{
  if (name == "low") {
    return Density::Low;
  }
  if (name == "middle") {
    return Density::Middle;
  }
  if (name == "high") {
    return Density::High;
  }
  throw Error("unknown density '" + std::string(name) + "' (expected low|middle|high)");
}

Density density_from_count(int objects_in_zone)
{
  if (objects_in_zone < 3) {
    return Density::Low;
  }
  if (objects_in_zone <= 6) {
    return Density::Middle;
  }
  return Density::High;
}

std::string_view to_string(DoneReason r)
{
  switch (r) {
    case DoneReason::None:
      return "none";
    case DoneReason::ExitedIntersectionArea:
      return "exited";
    case DoneReason::Collision:
      return "collision";
    case DoneReason::Timeout:
      return "timeout";
    case DoneReason::OffRoute:
      return "off_route";
  }
  return "unknown";
}

double reward_safety(const Observation & obs, const RewardConfig & cfg)
{
  double total = 0.0;
  for (auto area :
       {world::SurroundArea::LeftFront, world::SurroundArea::MiddleFront,
        world::SurroundArea::RightFront})
  {
    if (!obs.present(area)) {
      total += 1.0;
      continue;
    }
    const auto & other = obs.slot(area);
    double ttc = 0.0;
    if (other.x != obs.ego.x || other.y != obs.ego.y) {
      ttc = world::compute_ttc(world::relative_kinematics(obs.ego, other), cfg.receding_ttc);
    }
    total += std::min(ttc, cfg.ttc_thre) / cfg.ttc_thre;
  }
  return total;
}

double reward_efficiency(double speed, double v_max)
{
  if (speed <= v_max) {
    return speed / v_max;
  }
  return -(speed - v_max) / v_max;
}

double reward_deviation(double lateral_offset, double lane_width)
{
  return 1.0 - 2.0 * std::abs(lateral_offset) / lane_width;
}

std::uint64_t scene_hash(const EnvState & s)
{
  Fnv1a h;
  auto put_state = [&h](const ParticipantState & p) {
    h.update(static_cast<std::uint64_t>(p.kind));
    h.update(p.x);
    h.update(p.y);
    h.update(p.heading);
    h.update(p.speed);
    h.update(p.v_lon);
    h.update(p.v_lat);
  };
  h.update(static_cast<std::uint64_t>(s.route_id));
  h.update(static_cast<std::uint64_t>(s.step));
  h.update(s.ego_pose.x_m);
  h.update(s.ego_pose.y_m);
  h.update(s.ego_pose.yaw);
  put_state(s.ego);
  for (const auto & p : s.participants) {
    h.update(static_cast<std::uint64_t>(p.track_id));
    h.update(static_cast<std::uint64_t>(p.behavior));
    h.update(static_cast<std::uint64_t>(p.path));
    h.update(p.path_position);
    h.update(p.speed);
    h.update(p.desired_speed);
    h.update(p.lateral_offset);
    h.update(static_cast<std::uint64_t>(p.direction));
    h.update(p.wait_remaining);
    h.update(static_cast<std::uint64_t>(p.active));
    put_state(p.state);
  }
  h.update(s.rng.state());
  return h.digest();
}

SanitizedAction sanitize_action(
  const ActionVector & action, double yaw, const kinematics::VehicleConfig & cfg)
{
  if (!std::isfinite(action.vx) || !std::isfinite(action.vy) ||
    !std::isfinite(action.yaw_rate))
  {
    throw Error("sanitize_action: non-finite action");
  }
  ActionVector a = action;
  const double norm = std::hypot(a.vx, a.vy);
  if (norm > cfg.v_cap) {
    a.vx *= cfg.v_cap / norm;
    a.vy *= cfg.v_cap / norm;
  }
  a.yaw_rate = std::clamp(a.yaw_rate, -cfg.yaw_rate_cap, cfg.yaw_rate_cap);

  SanitizedAction out;
  out.control = kinematics::action_to_control(a, yaw, cfg).control;
  auto & u = out.control;
  u.v_r = std::max(u.v_r, 0.0);
  // The midpoint moves at v_r * sqrt(1 + tan^2(delta) / 4).
  const double t = std::tan(u.delta);
  u.v_r = std::min(u.v_r, cfg.v_cap / std::sqrt(1.0 + 0.25 * t * t));
  out.executed = kinematics::control_to_action(u, yaw, cfg.wheelbase);
  return out;
}

Environment::Environment(EnvConfig cfg)
: cfg_(std::move(cfg)), map_(std::make_shared<const IntersectionMap>(cfg_.map))
{
  cfg_.validate();
}

Observation Environment::reset(std::uint64_t seed, Density density)
{
  state_ = EnvState{};
  state_.seed = seed;
  state_.requested_density = density;
  state_.rng = Rng(derive_seed(seed, 0x5eed));

  if (cfg_.ego_routes == EgoRoutes::Through) {
    const auto arm = static_cast<Arm>(state_.rng.below(4));
    state_.route_id = map_->through_route(arm).id;
  } else {
    state_.route_id = static_cast<int>(state_.rng.below(map_->routes().size()));
  }
  const auto & route = ego_route();
  const auto pose = route.centerline.pose_at(cfg_.map.arm_length - cfg_.ego_start_distance);
  state_.ego_pose = {pose.x, pose.y, normalize_angle(pose.heading)};
  state_.ego = world::make_state(
    ParticipantKind::Vehicle, pose.x, pose.y, pose.heading,
    cfg_.ego_initial_speed * std::cos(pose.heading),
    cfg_.ego_initial_speed * std::sin(pose.heading));

  if (cfg_.traffic.enabled) {
    spawn_traffic(density);
  }
  return observe();
}

void Environment::refresh_state(ScriptedParticipant & p) const
{
  if (p.behavior == Behavior::PedestrianCrossing) {
    const auto & cw = map_->crosswalks()[static_cast<std::size_t>(p.path)];
    const double len = std::hypot(cw.b.x - cw.a.x, cw.b.y - cw.a.y);
    const double t = p.path_position / len;
    const double x = cw.a.x + t * (cw.b.x - cw.a.x);
    const double y = cw.a.y + t * (cw.b.y - cw.a.y);
    double heading = std::atan2(cw.b.y - cw.a.y, cw.b.x - cw.a.x);
    if (p.direction < 0) {
      heading += kPi;
    }
    const double v = p.wait_remaining > 0.0 ? 0.0 : p.speed;
    p.state = world::make_state(p.kind, x, y, heading, v * std::cos(heading), v * std::sin(heading));
    return;
  }
  const auto & route = map_->route(p.path);
  const auto pose = route.centerline.pose_at(p.path_position, p.lateral_offset);
  p.state = world::make_state(
    p.kind, pose.x, pose.y, pose.heading, p.speed * std::cos(pose.heading),
    p.speed * std::sin(pose.heading));
}

bool Environment::try_place(ScriptedParticipant p)
{
  refresh_state(p);
  const double sep = cfg_.traffic.spawn_min_separation;
  if (std::hypot(p.state.x - state_.ego.x, p.state.y - state_.ego.y) < 3.0 * sep) {
    return false;
  }
  for (const auto & q : state_.participants) {
    if (std::hypot(p.state.x - q.state.x, p.state.y - q.state.y) < sep) {
      return false;
    }
  }
  p.track_id = state_.next_track_id++;
  state_.participants.push_back(p);
  return true;
}

void Environment::spawn_traffic(Density density)
{
  auto & rng = state_.rng;
  const auto & tc = cfg_.traffic;
  const double v_max = cfg_.map.speed_limit;
  const auto n_routes = map_->routes().size();

  int inside_target = 0;
  int outside_target = 0;
  switch (density) {
    case Density::Low:
      inside_target = static_cast<int>(rng.below(3));
      outside_target = 1 + static_cast<int>(rng.below(3));
      break;
    case Density::Middle:
      inside_target = 3 + static_cast<int>(rng.below(4));
      outside_target = 2 + static_cast<int>(rng.below(4));
      break;
    case Density::High:
      inside_target = 7 + static_cast<int>(rng.below(4));
      outside_target = 4 + static_cast<int>(rng.below(5));
      break;
  }

  auto road_user = [&](bool inside) {
    ScriptedParticipant p;
    const bool cyclist = rng.uniform() < 0.2;
    p.path = static_cast<int>(rng.below(n_routes));
    const auto & route = map_->route(p.path);
    if (inside) {
      p.path_position = rng.uniform(route.zone_entry_s, route.zone_exit_s);
    } else {
      p.path_position = rng.uniform(5.0, route.zone_entry_s - 2.0);
    }
    if (cyclist) {
      p.kind = ParticipantKind::Cyclist;
      p.behavior = Behavior::CyclistCruise;
      p.desired_speed = rng.uniform(tc.cyclist_speed_min, tc.cyclist_speed_max);
      p.lateral_offset = -tc.cyclist_lane_offset;
    } else {
      p.kind = ParticipantKind::Vehicle;
      p.behavior = Behavior::CruiseCarFollowing;
      p.desired_speed = v_max * rng.uniform(tc.vehicle_speed_min, tc.vehicle_speed_max);
    }
    p.speed = p.desired_speed * rng.uniform(0.5, 1.0);
    return p;
  };

  auto pedestrian = [&]() {
    ScriptedParticipant p;
    p.kind = ParticipantKind::Pedestrian;
    p.behavior = Behavior::PedestrianCrossing;
    p.path = static_cast<int>(rng.below(4));
    const auto & cw = map_->crosswalks()[static_cast<std::size_t>(p.path)];
    const double len = std::hypot(cw.b.x - cw.a.x, cw.b.y - cw.a.y);
    p.path_position = rng.uniform(0.0, len);
    p.direction = rng.uniform() < 0.5 ? 1 : -1;
    p.desired_speed = rng.uniform(tc.pedestrian_speed_min, tc.pedestrian_speed_max);
    p.speed = p.desired_speed;
    p.wait_remaining = rng.uniform(0.0, tc.pedestrian_wait_max);
    return p;
  };

  constexpr int kMaxAttempts = 2000;
  int placed = 0;
  for (int attempt = 0; placed < inside_target && attempt < kMaxAttempts; ++attempt) {
    auto p = rng.uniform() < 0.3 ? pedestrian() : road_user(true);
    if (try_place(p)) {
      ++placed;
    }
  }
  if (placed < inside_target) {
    throw Error("reset: could not place the requested number of participants");
  }
  placed = 0;
  for (int attempt = 0; placed < outside_target && attempt < kMaxAttempts; ++attempt) {
    if (try_place(road_user(false))) {
      ++placed;
    }
  }
}

void Environment::advance_participant(ScriptedParticipant & p, const std::vector<SnapshotEntry> & snap)
{
  const double dt = cfg_.dt;
  const auto & tc = cfg_.traffic;
  if (p.behavior == Behavior::PedestrianCrossing) {
    if (p.wait_remaining > 0.0) {
      p.wait_remaining = std::max(0.0, p.wait_remaining - dt);
      return;
    }
    const auto & cw = map_->crosswalks()[static_cast<std::size_t>(p.path)];
    const double len = std::hypot(cw.b.x - cw.a.x, cw.b.y - cw.a.y);
    p.path_position += p.direction * p.speed * dt;
    if (p.path_position >= len || p.path_position <= 0.0) {
      p.path_position = std::clamp(p.path_position, 0.0, len);
      p.direction = -p.direction;
      p.wait_remaining = state_.rng.uniform(1.0, tc.pedestrian_wait_max);
    }
    return;
  }

  // Car following on the nearest object inside a corridor ahead. When two
  // scripted road users block each other, the older track keeps going.
  const auto & me = p.state;
  const double c = std::cos(me.heading);
  const double s = std::sin(me.heading);
  double gap = std::numeric_limits<double>::infinity();
  for (const auto & entry : snap) {
    if (entry.track_id == p.track_id) {
      continue;
    }
    const auto & q = entry.state;
    const double dx = q.x - me.x;
    const double dy = q.y - me.y;
    const double lon = dx * c + dy * s;
    const double lat = -dx * s + dy * c;
    if (!(lon > 0.0 && std::abs(lat) < tc.follow_corridor && lon < gap)) {
      continue;
    }
    if (entry.yields_mutually && entry.track_id > p.track_id) {
      const double qc = std::cos(q.heading);
      const double qs = std::sin(q.heading);
      const double back_lon = -dx * qc - dy * qs;
      const double back_lat = dx * qs - dy * qc;
      if (back_lon > 0.0 && std::abs(back_lat) < tc.follow_corridor) {
        continue;
      }
    }
    gap = lon;
  }

  if (gap < tc.stop_gap) {
    p.speed = 0.0;
  } else if (gap < tc.reaction_gap) {
    p.speed = std::max(0.0, p.speed - tc.decel * dt);
  } else {
    p.speed = std::min(p.desired_speed, p.speed + tc.accel * dt);
  }
  p.path_position += p.speed * dt;
  if (p.path_position >= map_->route(p.path).centerline.length()) {
    p.active = false;
  }
}

void Environment::make_ego_state(const kinematics::ControlInput & u)
{
  const auto a = kinematics::control_to_action(u, state_.ego_pose.yaw, cfg_.vehicle.wheelbase);
  state_.ego = world::make_state(
    ParticipantKind::Vehicle, state_.ego_pose.x_m, state_.ego_pose.y_m, state_.ego_pose.yaw,
    a.vx, a.vy);
}

std::vector<ParticipantState> Environment::others() const
{
  std::vector<ParticipantState> out;
  out.reserve(state_.participants.size());
  for (const auto & p : state_.participants) {
    if (p.active) {
      out.push_back(p.state);
    }
  }
  return out;
}

Observation Environment::observe() const
{
  const auto objs = others();
  Observation obs = world::build_observation(state_.ego, objs, cfg_.footprint());
  obs.lane_offset = ego_route().centerline.project(state_.ego.x, state_.ego.y).offset;
  return obs;
}

int Environment::objects_in_zone() const
{
  int n = 0;
  for (const auto & p : state_.participants) {
    if (p.active && map_->zone().contains(p.state.x, p.state.y)) {
      ++n;
    }
  }
  return n;
}

std::optional<double> Environment::travel_time() const
{
  if (state_.zone_entry_time && state_.zone_exit_time) {
    return *state_.zone_exit_time - *state_.zone_entry_time;
  }
  return std::nullopt;
}

StepOutcome Environment::step(const ActionVector & action)
{
  if (state_.done) {
    throw Error("step: episode already finished; call reset first");
  }
  const auto san = sanitize_action(action, state_.ego_pose.yaw, cfg_.vehicle);

  std::vector<SnapshotEntry> snap;
  snap.reserve(state_.participants.size() + 1);
  for (const auto & p : state_.participants) {
    if (p.active) {
      snap.push_back({p.state, p.track_id, p.behavior != Behavior::PedestrianCrossing});
    }
  }
  snap.push_back({state_.ego, 0, false});
  for (auto & p : state_.participants) {
    if (p.active) {
      advance_participant(p, snap);
    }
  }

  const double d0 = map_->zone_signed_distance(state_.ego.x, state_.ego.y);
  state_.ego_pose =
    kinematics::integrate_step(state_.ego_pose, san.control, cfg_.dt, cfg_.vehicle.wheelbase);
  make_ego_state(san.control);
  for (auto & p : state_.participants) {
    if (p.active) {
      refresh_state(p);
    }
  }
  const double t0 = state_.step * cfg_.dt;
  ++state_.step;
  const double d1 = map_->zone_signed_distance(state_.ego.x, state_.ego.y);
  if (!state_.zone_entry_time && d0 > 0.0 && d1 <= 0.0) {
    state_.zone_entry_time = t0 + cfg_.dt * d0 / (d0 - d1);
  } else if (state_.zone_entry_time && !state_.zone_exit_time && d0 <= 0.0 && d1 > 0.0) {
    state_.zone_exit_time = t0 + cfg_.dt * (-d0) / (d1 - d0);
  }

  StepOutcome out;
  out.executed_action = san.executed;
  out.observation = observe();
  const auto & rc = cfg_.reward;
  out.reward_safety = reward_safety(out.observation, rc);
  out.reward_effi = reward_efficiency(state_.ego.speed, cfg_.map.speed_limit);
  out.reward_dev = reward_deviation(out.observation.lane_offset, cfg_.map.lane_width);
  out.reward_total = rc.alpha_safety * out.reward_safety + rc.alpha_effi * out.reward_effi +
    rc.alpha_dev * out.reward_dev;
  out.objects_in_zone = objects_in_zone();

  DoneReason reason = DoneReason::None;
  for (const auto & p : state_.participants) {
    if (!p.active) {
      continue;
    }
    const double r = p.kind == ParticipantKind::Pedestrian ? cfg_.collision_radius_pedestrian
                                                           : cfg_.collision_radius;
    if (std::hypot(p.state.x - state_.ego.x, p.state.y - state_.ego.y) < r) {
      reason = DoneReason::Collision;
      break;
    }
  }
  if (reason == DoneReason::None) {
    const Point e = arm_direction(ego_route().exit);
    const double along = state_.ego.x * e.x + state_.ego.y * e.y;
    if (along >= cfg_.map.zone_half_size + cfg_.exit_margin) {
      reason = DoneReason::ExitedIntersectionArea;
    } else if (std::abs(out.observation.lane_offset) > cfg_.off_route_distance) {
      reason = DoneReason::OffRoute;
    } else if (state_.step >= cfg_.timeout_steps) {
      reason = DoneReason::Timeout;
    }
  }
  if (reason != DoneReason::None) {
    state_.done = true;
    state_.done_reason = reason;
  }
  out.done = state_.done;
  out.done_reason = reason;
  return out;
}

}  // namespace crossflow::env
