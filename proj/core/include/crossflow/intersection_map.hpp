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

#ifndef CROSSFLOW__INTERSECTION_MAP_HPP_
#define CROSSFLOW__INTERSECTION_MAP_HPP_

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "crossflow/kinematics.hpp"

namespace crossflow::env
{

using kinematics::Point;

/// Arms in counter-clockwise order starting from +x.
enum class Arm { East = 0, North = 1, West = 2, South = 3 };
enum class Turn { Through, Left, Right };

std::string_view to_string(Arm arm);
std::string_view to_string(Turn turn);

/// Outward unit vector of an arm.
Point arm_direction(Arm arm);

struct PathPose
{
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

struct Projection
{
  /// Arc length of the closest point.
  double s = 0.0;
  /// Signed lateral offset, left of the travel direction positive.
  double offset = 0.0;
  double distance = 0.0;
};

/// Piecewise-linear path parameterized by arc length.
class Polyline
{
public:
  Polyline() = default;
  explicit Polyline(std::vector<Point> points);

  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  const std::vector<Point> & points() const { return points_; }

  /// Pose at arc length s (clamped to [0, length]), shifted laterally by
  /// `offset` (left positive).
  PathPose pose_at(double s, double offset = 0.0) const;
  Projection project(double x, double y) const;

private:
  std::vector<Point> points_;
  std::vector<double> cumulative_;
};

struct Route
{
  int id = 0;
  Arm entry = Arm::East;
  Arm exit = Arm::West;
  Turn turn = Turn::Through;
  Polyline centerline;
  /// Arc lengths where the centerline enters and leaves the intersection zone.
  double zone_entry_s = 0.0;
  double zone_exit_s = 0.0;
};

struct Crosswalk
{
  Arm arm = Arm::East;
  Point a;
  Point b;
};

struct Rect
{
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  bool contains(double x, double y) const
  {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }
};

struct MapConfig
{
  double lane_width = 3.5;
  double speed_limit = 8.33;
  /// Half side of the square intersection area monitored by the RSU.
  double zone_half_size = 12.0;
  /// Length of each approach/exit arm measured from the center.
  double arm_length = 60.0;
  /// Distance of each crosswalk from the center, along its arm.
  double crosswalk_offset = 5.5;
  /// Sidewalk overhang of a crosswalk beyond the road edge.
  double curb_overhang = 1.5;
};

/// A four-way junction of two-lane roads, right-hand traffic, RSU at the origin.
/// Twelve routes: every (entry arm, exit arm) pair with entry != exit.
class IntersectionMap
{
public:
  explicit IntersectionMap(const MapConfig & cfg = {});

  const MapConfig & config() const { return cfg_; }
  double lane_width() const { return cfg_.lane_width; }
  double speed_limit() const { return cfg_.speed_limit; }
  const Rect & zone() const { return zone_; }
  const std::vector<Route> & routes() const { return routes_; }
  const Route & route(int id) const;
  const Route & route(Arm entry, Arm exit) const;
  const Route & through_route(Arm entry) const;
  const std::array<Crosswalk, 4> & crosswalks() const { return crosswalks_; }

  /// Chebyshev distance of (x, y) outside the zone boundary (negative inside).
  double zone_signed_distance(double x, double y) const;

private:
  MapConfig cfg_;
  Rect zone_;
  std::vector<Route> routes_;
  std::array<Crosswalk, 4> crosswalks_;
};

}  // namespace crossflow::env

#endif  // CROSSFLOW__INTERSECTION_MAP_HPP_
