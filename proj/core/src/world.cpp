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

#include "crossflow/world.hpp"

#include <cmath>
#include <string>

#include "crossflow/common.hpp"

namespace crossflow::world
{

std::string_view to_string(ParticipantKind kind)
{
  switch (kind) {
    case ParticipantKind::Pedestrian:
      return "pedestrian";
    case ParticipantKind::Vehicle:
      return "vehicle";
    case ParticipantKind::Cyclist:
      return "cyclist";
  }
  return "unknown";
}

ParticipantKind parse_kind(std::string_view name)
{
  if (name == "pedestrian") {
    return ParticipantKind::Pedestrian;
  }
  if (name == "vehicle") {
    return ParticipantKind::Vehicle;
  }
  if (name == "cyclist") {
    return ParticipantKind::Cyclist;
  }
  throw Error("unknown participant kind '" + std::string(name) + "'");
}

std::string_view to_string(SurroundArea area)
{
  switch (area) {
    case SurroundArea::LeftFront:
      return "LF";
    case SurroundArea::MiddleFront:
      return "MF";
    case SurroundArea::RightFront:
      return "RF";
    case SurroundArea::Back:
      return "Back";
  }
  return "unknown";
}

double ParticipantState::world_vx() const
{
  return v_lon * std::cos(heading) - v_lat * std::sin(heading);
}

double ParticipantState::world_vy() const
{
  return v_lon * std::sin(heading) + v_lat * std::cos(heading);
}

ParticipantState make_state(
  ParticipantKind kind, double x, double y, double heading, double vx, double vy)
{
  ParticipantState s;
  s.kind = kind;
  s.x = x;
  s.y = y;
  s.heading = normalize_angle(heading);
  const double c = std::cos(s.heading);
  const double sn = std::sin(s.heading);
  s.v_lon = vx * c + vy * sn;
  s.v_lat = -vx * sn + vy * c;
  s.speed = std::hypot(s.v_lon, s.v_lat);
  return s;
}

const ParticipantState & Observation::slot(SurroundArea area) const
{
  switch (area) {
    case SurroundArea::LeftFront:
      return lf;
    case SurroundArea::MiddleFront:
      return mf;
    case SurroundArea::RightFront:
      return rf;
    case SurroundArea::Back:
      break;
  }
  throw Error("observation has no Back slot");
}

bool Observation::present(SurroundArea area) const
{
  switch (area) {
    case SurroundArea::LeftFront:
      return lf_present;
    case SurroundArea::MiddleFront:
      return mf_present;
    case SurroundArea::RightFront:
      return rf_present;
    case SurroundArea::Back:
      break;
  }
  throw Error("observation has no Back slot");
}

ParticipantState absent_sentinel(const ParticipantState & ego)
{
  ParticipantState s = ego;
  s.x = ego.x + kSentinelRange * std::cos(ego.heading);
  s.y = ego.y + kSentinelRange * std::sin(ego.heading);
  return s;
}

SurroundArea classify_area(
  const ParticipantState & ego, const ParticipantState & other, const Footprint & fp)
{
  const double dx = other.x - ego.x;
  const double dy = other.y - ego.y;
  const double c = std::cos(ego.heading);
  const double s = std::sin(ego.heading);
  const double lon = dx * c + dy * s;
  const double lat = -dx * s + dy * c;
  if (!(lon >= fp.front_offset)) {
    return SurroundArea::Back;
  }
  if (lat > fp.half_width) {
    return SurroundArea::LeftFront;
  }
  if (lat < -fp.half_width) {
    return SurroundArea::RightFront;
  }
  return SurroundArea::MiddleFront;
}

NearestResult nearest_in_area(
  const ParticipantState & ego, std::span<const ParticipantState> others, SurroundArea area,
  const Footprint & fp)
{
  if (area == SurroundArea::Back) {
    throw Error("nearest_in_area: the Back area is not part of the observation");
  }
  NearestResult best;
  best.state = absent_sentinel(ego);
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < others.size(); ++i) {
    const auto & o = others[i];
    if (classify_area(ego, o, fp) != area) {
      continue;
    }
    const double dx = o.x - ego.x;
    const double dy = o.y - ego.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best.state = o;
      best.present = true;
      best.index = i;
    }
  }
  return best;
}

RelativeKinematics relative_kinematics(
  const ParticipantState & ego, const ParticipantState & other)
{
  const double px = other.x - ego.x;
  const double py = other.y - ego.y;
  const double distance = std::hypot(px, py);
  if (distance == 0.0) {
    throw Error("relative_kinematics: overlapping objects (zero center distance)");
  }
  const double vx = other.world_vx() - ego.world_vx();
  const double vy = other.world_vy() - ego.world_vy();
  const double closing = std::hypot(vx, vy);

  RelativeKinematics rel;
  rel.distance = distance;
  rel.closing_speed = closing;
  if (closing == 0.0) {
    // No relative motion: treated as a closing pair with zero rate, TTC = inf.
    rel.approach_angle = 0.0;
    return rel;
  }
  // Displacement other->ego is (-px, -py).
  const double dot = -px * vx - py * vy;
  const double cross = -px * vy + py * vx;
  rel.approach_angle = std::atan2(std::abs(cross), dot);
  return rel;
}

double compute_ttc(const RelativeKinematics & rel, double receding_ttc)
{
  if (rel.approach_angle >= kPi / 2.0) {
    return receding_ttc;
  }
  const double rate = rel.closing_speed * std::cos(rel.approach_angle);
  if (rate <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return rel.distance / rate;
}

Observation build_observation(
  const ParticipantState & ego, std::span<const ParticipantState> others, const Footprint & fp)
{
  if (ego.kind != ParticipantKind::Vehicle) {
    throw Error("build_observation: ego must be a vehicle");
  }
  Observation obs;
  obs.ego = ego;
  const auto lf = nearest_in_area(ego, others, SurroundArea::LeftFront, fp);
  const auto mf = nearest_in_area(ego, others, SurroundArea::MiddleFront, fp);
  const auto rf = nearest_in_area(ego, others, SurroundArea::RightFront, fp);
  obs.lf = lf.state;
  obs.lf_present = lf.present;
  obs.mf = mf.state;
  obs.mf_present = mf.present;
  obs.rf = rf.state;
  obs.rf_present = rf.present;
  return obs;
}

}  // namespace crossflow::world
