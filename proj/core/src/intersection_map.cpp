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

#include "crossflow/intersection_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crossflow/common.hpp"

namespace crossflow::env
{

namespace
{

constexpr int kTurnSegments = 16;

Arm arm_from_index(int i) { return static_cast<Arm>(((i % 4) + 4) % 4); }

// Inbound lane point at distance s from the center on `arm`.
Point inbound_point(Arm arm, double s, double w)
{
  const Point e = arm_direction(arm);
  return {s * e.x - 0.5 * w * e.y, s * e.y + 0.5 * w * e.x};
}

Point outbound_point(Arm arm, double s, double w)
{
  const Point e = arm_direction(arm);
  return {s * e.x + 0.5 * w * e.y, s * e.y - 0.5 * w * e.x};
}

// Intersection of the lines p + t d and q + u f (non-parallel).
Point line_intersection(Point p, Point d, Point q, Point f)
{
  const double denom = d.x * f.y - d.y * f.x;
  const double t = ((q.x - p.x) * f.y - (q.y - p.y) * f.x) / denom;
  return {p.x + t * d.x, p.y + t * d.y};
}

}  // namespace

std::string_view to_string(Arm arm)
{
  switch (arm) {
    case Arm::East:
      return "east";
    case Arm::North:
      return "north";
    case Arm::West:
      return "west";
    case Arm::South:
      return "south";
  }
  return "unknown";
}

std::string_view to_string(Turn turn)
{
  switch (turn) {
    case Turn::Through:
      return "through";
    case Turn::Left:
      return "left";
    case Turn::Right:
      return "right";
  }
  return "unknown";
}

Point arm_direction(Arm arm)
{
  switch (arm) {
    case Arm::East:
      return {1.0, 0.0};
    case Arm::North:
      return {0.0, 1.0};
    case Arm::West:
      return {-1.0, 0.0};
    case Arm::South:
      return {0.0, -1.0};
  }
  return {1.0, 0.0};
}

Polyline::Polyline(std::vector<Point> points) : points_(std::move(points))
{
  if (points_.size() < 2) {
    throw Error("Polyline needs at least two points");
  }
  cumulative_.reserve(points_.size());
  cumulative_.push_back(0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double seg =
      std::hypot(points_[i].x - points_[i - 1].x, points_[i].y - points_[i - 1].y);
    cumulative_.push_back(cumulative_.back() + seg);
  }
}

PathPose Polyline::pose_at(double s, double offset) const
{
  s = std::clamp(s, 0.0, length());
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  std::size_t i = static_cast<std::size_t>(std::distance(cumulative_.begin(), it));
  i = std::clamp<std::size_t>(i, 1, points_.size() - 1);
  const Point & a = points_[i - 1];
  const Point & b = points_[i];
  const double seg = cumulative_[i] - cumulative_[i - 1];
  const double t = seg > 0.0 ? (s - cumulative_[i - 1]) / seg : 0.0;
  const double heading = std::atan2(b.y - a.y, b.x - a.x);
  return {
    a.x + t * (b.x - a.x) - offset * std::sin(heading),
    a.y + t * (b.y - a.y) + offset * std::cos(heading), heading};
}

Projection Polyline::project(double x, double y) const
{
  Projection best;
  best.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const Point & a = points_[i - 1];
    const Point & b = points_[i];
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((x - a.x) * dx + (y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double cx = a.x + t * dx;
    const double cy = a.y + t * dy;
    const double d = std::hypot(x - cx, y - cy);
    if (d < best.distance) {
      best.distance = d;
      best.s = cumulative_[i - 1] + t * std::sqrt(len2);
      const double cross = dx * (y - a.y) - dy * (x - a.x);
      best.offset = cross >= 0.0 ? d : -d;
    }
  }
  return best;
}

IntersectionMap::IntersectionMap(const MapConfig & cfg) : cfg_(cfg)
{
  if (!(cfg_.lane_width > 0.0) || !(cfg_.speed_limit > 0.0)) {
    throw Error("map: lane_width and speed_limit must be positive");
  }
  const double w = cfg_.lane_width;
  if (!(cfg_.zone_half_size > w) || !(cfg_.arm_length > cfg_.zone_half_size)) {
    throw Error("map: need lane_width < zone_half_size < arm_length");
  }
  const double h = cfg_.zone_half_size;
  zone_ = {-h, -h, h, h};

  const double L = cfg_.arm_length;
  int id = 0;
  for (int i = 0; i < 4; ++i) {
    for (int k = 1; k <= 3; ++k) {
      const Arm entry = arm_from_index(i);
      const Arm exit = arm_from_index(i + k);
      Route r;
      r.id = id++;
      r.entry = entry;
      r.exit = exit;
      // Counter-clockwise offsets: +1 is a right turn, +2 through, +3 left.
      r.turn = k == 2 ? Turn::Through : (k == 1 ? Turn::Right : Turn::Left);

      std::vector<Point> pts;
      pts.push_back(inbound_point(entry, L, w));
      const Point p0 = inbound_point(entry, w, w);
      const Point p2 = outbound_point(exit, w, w);
      pts.push_back(p0);
      if (r.turn != Turn::Through) {
        const Point ein = arm_direction(entry);
        const Point eout = arm_direction(exit);
        const Point c = line_intersection(p0, {-ein.x, -ein.y}, p2, eout);
        for (int j = 1; j < kTurnSegments; ++j) {
          const double t = static_cast<double>(j) / kTurnSegments;
          const double u = 1.0 - t;
          pts.push_back(
            {u * u * p0.x + 2.0 * u * t * c.x + t * t * p2.x,
             u * u * p0.y + 2.0 * u * t * c.y + t * t * p2.y});
        }
      }
      pts.push_back(p2);
      pts.push_back(outbound_point(exit, L, w));
      r.centerline = Polyline(std::move(pts));
      r.zone_entry_s = L - h;
      r.zone_exit_s = r.centerline.length() - (L - h);
      routes_.push_back(std::move(r));
    }
  }

  const double half_span = w + cfg_.curb_overhang;
  for (int i = 0; i < 4; ++i) {
    const Arm arm = arm_from_index(i);
    const Point e = arm_direction(arm);
    const double s = cfg_.crosswalk_offset;
    // Perpendicular to the arm, spanning both lanes and the curbs.
    crosswalks_[static_cast<std::size_t>(i)] = {
      arm, {s * e.x + half_span * e.y, s * e.y - half_span * e.x},
      {s * e.x - half_span * e.y, s * e.y + half_span * e.x}};
  }
}

const Route & IntersectionMap::route(int id) const
{
  if (id < 0 || static_cast<std::size_t>(id) >= routes_.size()) {
    throw Error("map: route id out of range");
  }
  return routes_[static_cast<std::size_t>(id)];
}

const Route & IntersectionMap::route(Arm entry, Arm exit) const
{
  for (const auto & r : routes_) {
    if (r.entry == entry && r.exit == exit) {
      return r;
    }
  }
  throw Error("map: no route from an arm back onto itself");
}

const Route & IntersectionMap::through_route(Arm entry) const
{
  return route(entry, arm_from_index(static_cast<int>(entry) + 2));
}

double IntersectionMap::zone_signed_distance(double x, double y) const
{
  return std::max(std::abs(x), std::abs(y)) - cfg_.zone_half_size;
}

}  // namespace crossflow::env
