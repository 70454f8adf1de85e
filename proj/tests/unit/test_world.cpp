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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "crossflow/common.hpp"
#include "crossflow/world.hpp"
#include "oracles.hpp"

namespace crossflow::world
{
namespace
{

ParticipantState vehicle(double x, double y, double heading = 0.0, double vx = 0.0,
  double vy = 0.0)
{
  return make_state(ParticipantKind::Vehicle, x, y, heading, vx, vy);
}

ParticipantState random_state(Rng & rng)
{
  const double heading = rng.uniform(-kPi, kPi);
  const double v = rng.uniform(0.0, 15.0);
  const double slip = rng.uniform(-0.3, 0.3);
  return make_state(ParticipantKind::Vehicle, rng.uniform(-50, 50), rng.uniform(-50, 50),
    heading, v * std::cos(heading + slip), v * std::sin(heading + slip));
}

TEST(ParticipantState, MakeStateIsConsistent)
{
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const auto s = random_state(rng);
    EXPECT_NEAR(s.speed * s.speed, s.v_lon * s.v_lon + s.v_lat * s.v_lat,
      1e-9 * std::max(1.0, s.speed * s.speed));
    EXPECT_GT(s.heading, -kPi);
    EXPECT_LE(s.heading, kPi);
  }
  const auto s = make_state(ParticipantKind::Cyclist, 0, 0, 3 * kPi, 1.0, 0.0);
  EXPECT_DOUBLE_EQ(s.heading, kPi);
  EXPECT_NEAR(s.v_lon, -1.0, 1e-15);
}

TEST(Kind, NamesRoundTrip)
{
  for (auto k : {ParticipantKind::Pedestrian, ParticipantKind::Vehicle, ParticipantKind::Cyclist}) {
    EXPECT_EQ(parse_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_kind("truck"), Error);
}

TEST(ClassifyArea, PointExamples)
{
  const auto ego = vehicle(0, 0);
  EXPECT_EQ(classify_area(ego, vehicle(10, 0)), SurroundArea::MiddleFront);
  EXPECT_EQ(classify_area(ego, vehicle(-5, 0)), SurroundArea::Back);
  EXPECT_EQ(classify_area(ego, vehicle(8, 3)), SurroundArea::LeftFront);
  EXPECT_EQ(classify_area(ego, vehicle(8, -3)), SurroundArea::RightFront);
  // On the bumper line counts as front; on the side edge counts as middle.
  EXPECT_EQ(classify_area(ego, vehicle(1.25, 0.9)), SurroundArea::MiddleFront);
  EXPECT_EQ(classify_area(ego, vehicle(1.2, 0)), SurroundArea::Back);
}

TEST(ClassifyArea, FollowsEgoHeading)
{
  const auto ego = vehicle(3, 4, kPi / 2);
  EXPECT_EQ(classify_area(ego, vehicle(3, 14)), SurroundArea::MiddleFront);
  EXPECT_EQ(classify_area(ego, vehicle(0, 12)), SurroundArea::LeftFront);
  EXPECT_EQ(classify_area(ego, vehicle(6, 12)), SurroundArea::RightFront);
  EXPECT_EQ(classify_area(ego, vehicle(3, -4)), SurroundArea::Back);
}

TEST(ClassifyArea, PartitionsThePlane)
{
  Rng rng(2);
  const Footprint fp;
  for (int i = 0; i < 100000; ++i) {
    const auto ego = random_state(rng);
    const auto other = random_state(rng);
    const auto area = classify_area(ego, other, fp);
    const double dx = other.x - ego.x;
    const double dy = other.y - ego.y;
    const double lon = dx * std::cos(ego.heading) + dy * std::sin(ego.heading);
    const double lat = -dx * std::sin(ego.heading) + dy * std::cos(ego.heading);
    const int hits = (lon < fp.front_offset) + (lon >= fp.front_offset && lat > fp.half_width) +
                     (lon >= fp.front_offset && lat < -fp.half_width) +
                     (lon >= fp.front_offset && std::abs(lat) <= fp.half_width);
    ASSERT_EQ(hits, 1);
    SurroundArea expected = SurroundArea::Back;
    if (lon >= fp.front_offset) {
      expected = lat > fp.half_width    ? SurroundArea::LeftFront
                 : lat < -fp.half_width ? SurroundArea::RightFront
                                        : SurroundArea::MiddleFront;
    }
    ASSERT_EQ(area, expected);
  }
}

TEST(NearestInArea, PicksClosest)
{
  const auto ego = vehicle(0, 0);
  const std::vector<ParticipantState> others = {vehicle(12, 0), vehicle(7, 0)};
  const auto r = nearest_in_area(ego, others, SurroundArea::MiddleFront);
  EXPECT_TRUE(r.present);
  EXPECT_EQ(r.index, 1U);
  EXPECT_EQ(r.state, others[1]);
}

TEST(NearestInArea, EmptyGivesSentinel)
{
  const auto ego = vehicle(1, 2, 0.5, 3.0, 1.0);
  const auto r = nearest_in_area(ego, {}, SurroundArea::LeftFront);
  EXPECT_FALSE(r.present);
  EXPECT_EQ(r.state, absent_sentinel(ego));
}

TEST(NearestInArea, TieGoesToLowerIndex)
{
  const auto ego = vehicle(0, 0);
  const std::vector<ParticipantState> others = {vehicle(9, 0.5), vehicle(9, -0.5)};
  ASSERT_EQ(std::hypot(9.0, 0.5), std::hypot(9.0, -0.5));
  EXPECT_EQ(nearest_in_area(ego, others, SurroundArea::MiddleFront).index, 0U);
}

TEST(NearestInArea, RejectsBack)
{
  EXPECT_THROW(nearest_in_area(vehicle(0, 0), {}, SurroundArea::Back), Error);
}

TEST(RelativeKinematics, HeadOn)
{
  const auto r = relative_kinematics(vehicle(0, 0, 0, 5, 0), vehicle(20, 0, kPi, -5, 0));
  EXPECT_DOUBLE_EQ(r.distance, 20.0);
  EXPECT_NEAR(r.closing_speed, 10.0, 1e-12);
  EXPECT_NEAR(r.approach_angle, 0.0, 1e-12);
}

TEST(RelativeKinematics, Receding)
{
  const auto r = relative_kinematics(vehicle(0, 0, 0, 5, 0), vehicle(20, 0, 0, 10, 0));
  EXPECT_NEAR(r.approach_angle, kPi, 1e-12);
}

TEST(RelativeKinematics, PerpendicularCrossing)
{
  const auto r = relative_kinematics(vehicle(0, 0), vehicle(0, 15, -kPi / 2, 0, -4));
  EXPECT_DOUBLE_EQ(r.distance, 15.0);
  EXPECT_NEAR(r.closing_speed, 4.0, 1e-12);
  EXPECT_NEAR(r.approach_angle, 0.0, 1e-12);
}

TEST(RelativeKinematics, OverlapIsAnError)
{
  EXPECT_THROW(relative_kinematics(vehicle(1, 1), vehicle(1, 1)), Error);
}

TEST(RelativeKinematics, AngleInRange)
{
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const auto r = relative_kinematics(random_state(rng), random_state(rng));
    ASSERT_GE(r.distance, 0.0);
    ASSERT_GE(r.approach_angle, 0.0);
    ASSERT_LE(r.approach_angle, kPi);
  }
}

TEST(Ttc, ClosedFormExamples)
{
  EXPECT_DOUBLE_EQ(compute_ttc({20, 10, 0}), 2.0);
  EXPECT_DOUBLE_EQ(compute_ttc({20, 10, 3 * kPi / 4}), 1.0);
  EXPECT_NEAR(compute_ttc({12, 8, kPi / 3}), 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(compute_ttc({12, 8, kPi / 2}), 1.0);
  EXPECT_DOUBLE_EQ(compute_ttc({12, 8, kPi / 2}, 2.5), 2.5);
  EXPECT_EQ(compute_ttc({12, 0, 0}), std::numeric_limits<double>::infinity());
}

TEST(Ttc, MatchesSimulation)
{
  Rng rng(4);
  int checked = 0;
  while (checked < 500) {
    const auto ego = random_state(rng);
    const auto other = random_state(rng);
    const auto rel = relative_kinematics(ego, other);
    if (rel.approach_angle >= kPi / 2) {
      continue;
    }
    const double ttc = compute_ttc(rel);
    if (ttc > 60.0) {
      continue;
    }
    EXPECT_NEAR(testing::ttc_by_simulation(ego, other, 1e-3, 70.0), ttc, 2e-3);
    ++checked;
  }
}

TEST(Ttc, InvariantUnderRigidMotion)
{
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const auto ego = random_state(rng);
    const auto other = random_state(rng);
    const double rot = rng.uniform(-kPi, kPi);
    const double tx = rng.uniform(-100, 100);
    const double ty = rng.uniform(-100, 100);
    auto move = [&](const ParticipantState & s) {
      ParticipantState m = s;
      m.x = std::cos(rot) * s.x - std::sin(rot) * s.y + tx;
      m.y = std::sin(rot) * s.x + std::cos(rot) * s.y + ty;
      m.heading = normalize_angle(s.heading + rot);
      return m;
    };
    const double a = compute_ttc(relative_kinematics(ego, other));
    const double b = compute_ttc(relative_kinematics(move(ego), move(other)));
    if (std::isinf(a)) {
      EXPECT_TRUE(std::isinf(b));
    } else {
      EXPECT_NEAR(a, b, 1e-9 * std::max(1.0, a));
    }
  }
}

TEST(Sentinel, SaturatesTtc)
{
  const auto ego = vehicle(3, -2, 0.7, 4.0, 1.0);
  const auto s = absent_sentinel(ego);
  EXPECT_EQ(s.kind, ego.kind);
  EXPECT_NEAR(std::hypot(s.x - ego.x, s.y - ego.y), kSentinelRange, 1e-12);
  EXPECT_EQ(compute_ttc(relative_kinematics(ego, s)), std::numeric_limits<double>::infinity());
  EXPECT_EQ(classify_area(ego, s), SurroundArea::MiddleFront);
}

TEST(BuildObservation, EmptyScene)
{
  const auto ego = vehicle(0, 0, 0.3, 2, 1);
  const auto obs = build_observation(ego, {});
  EXPECT_FALSE(obs.lf_present || obs.mf_present || obs.rf_present);
  EXPECT_EQ(obs.lf, absent_sentinel(ego));
  EXPECT_EQ(obs.mf, absent_sentinel(ego));
  EXPECT_EQ(obs.rf, absent_sentinel(ego));
}

TEST(BuildObservation, SingleLeftObject)
{
  const auto ego = vehicle(0, 0);
  const std::vector<ParticipantState> others = {vehicle(8, 3)};
  const auto obs = build_observation(ego, others);
  EXPECT_TRUE(obs.lf_present);
  EXPECT_FALSE(obs.mf_present);
  EXPECT_FALSE(obs.rf_present);
  EXPECT_EQ(obs.lf, others[0]);
}

TEST(BuildObservation, MatchesBruteForceAndIgnoresOrder)
{
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto ego = vehicle(0, 0, rng.uniform(-kPi, kPi), 3, 0);
    std::vector<ParticipantState> others;
    for (int i = 0; i < 8; ++i) {
      others.push_back(vehicle(rng.uniform(-30, 30), rng.uniform(-30, 30)));
    }
    const auto obs = build_observation(ego, others);
    for (auto area : {SurroundArea::LeftFront, SurroundArea::MiddleFront,
           SurroundArea::RightFront})
    {
      double best = std::numeric_limits<double>::infinity();
      const ParticipantState * pick = nullptr;
      for (const auto & o : others) {
        const double d = std::hypot(o.x - ego.x, o.y - ego.y);
        if (classify_area(ego, o) == area && d < best) {
          best = d;
          pick = &o;
        }
      }
      ASSERT_EQ(obs.present(area), pick != nullptr);
      if (pick) {
        EXPECT_EQ(obs.slot(area), *pick);
      }
    }
    std::vector<ParticipantState> shuffled = others;
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
      std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
    }
    EXPECT_EQ(build_observation(ego, shuffled), obs);
  }
}

TEST(BuildObservation, RequiresVehicleEgo)
{
  auto ego = vehicle(0, 0);
  ego.kind = ParticipantKind::Pedestrian;
  EXPECT_THROW(build_observation(ego, {}), Error);
}

}  // namespace
}  // namespace crossflow::world
