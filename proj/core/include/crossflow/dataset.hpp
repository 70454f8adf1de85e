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

#ifndef CROSSFLOW__DATASET_HPP_
#define CROSSFLOW__DATASET_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crossflow/common.hpp"
#include "crossflow/env.hpp"

namespace crossflow::dataset
{

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// RSU log

struct RsuLogRecord
{
  std::int64_t t = 0;
  std::int64_t track_id = 0;
  world::ParticipantKind kind = world::ParticipantKind::Vehicle;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
  double v_lon = 0.0;
  double v_lat = 0.0;

  bool operator==(const RsuLogRecord &) const = default;
};

inline constexpr const char * kLogHeader = "t,track_id,kind,x,y,heading,speed,v_lon,v_lat";

/// CSV with the header above, '.' decimals, shortest round-trip numbers, LF endings.
void write_log_csv(std::ostream & os, std::span<const RsuLogRecord> records);
std::vector<RsuLogRecord> read_log_csv(std::istream & is);

// ---------------------------------------------------------------------------
// Observation encoding, format version 1
//
//   0..1   ego x, y (RSU frame)
//   2..3   cos(heading), sin(heading)
//   4..6   speed, v_lon, v_lat
//   7..9   ego kind one-hot (pedestrian, vehicle, cyclist)
//   10     signed lateral offset from the route centerline
//   11+5k  area k in (LF, MF, RF): relative position (lon, lat) and relative
//          velocity (lon, lat) in the ego body frame, then a presence flag
//
// Indicator slots (kind one-hot, presence flags) are never standardized.

inline constexpr std::uint32_t kEncodingVersion = 1;
inline constexpr int kEgoSlots = 11;
inline constexpr int kAreaSlots = 5;
inline constexpr int kObsDim = kEgoSlots + 3 * kAreaSlots;
inline constexpr int kActionDim = 3;

bool is_indicator_slot(int index);

using Features = std::array<double, kObsDim>;

/// Raw (unstandardized) feature vector.
Features raw_features(const world::Observation & obs);

struct RelativeSlot
{
  double lon = 0.0;
  double lat = 0.0;
  double v_lon = 0.0;
  double v_lat = 0.0;
  bool present = false;
};

/// Reads back the per-area relative quantities from raw features.
std::array<RelativeSlot, 3> decode_relative(std::span<const double> raw);

/// Rebuilds an Observation from raw features. Objects are reconstructed from
/// their relative position and velocity; their own heading is taken along
/// their world velocity. Sufficient to recompute every reward term.
world::Observation decode_observation(std::span<const double> raw);

struct NormalizationStats
{
  Vector mean;
  Vector std;

  static NormalizationStats identity(int dim);
  int dim() const { return static_cast<int>(mean.size()); }
};

/// Standardizes raw features with frozen stats. Throws Error on a size mismatch.
Vector encode_observation(const world::Observation & obs, const NormalizationStats & stats);
Vector normalize_features(std::span<const double> raw, const NormalizationStats & stats);

// ---------------------------------------------------------------------------
// Transitions

struct Transition
{
  Features obs{};
  kinematics::ActionVector action;
  double reward = 0.0;
  Features next_obs{};
  /// Terminal for bootstrapping: the value after this transition is zero.
  bool done = false;
};

std::array<double, kActionDim> action_array(const kinematics::ActionVector & a);

inline constexpr const char * kDatasetMagic = "CFDS1";

/// Columnar binary file:
///   "CFDS1" | u32 encoding version | u32 obs_dim | u32 action_dim | u64 count
///   | obs[count*obs_dim] | action[count*action_dim] | reward[count]
///   | next_obs[count*obs_dim] | done[count] (0.0 / 1.0)
/// All integers and doubles little-endian; rows stored one transition at a time.
void write_dataset(std::ostream & os, std::span<const Transition> transitions);
std::vector<Transition> read_dataset(std::istream & is);
void save_dataset(const std::string & path, std::span<const Transition> transitions);
std::vector<Transition> load_dataset(const std::string & path);

// ---------------------------------------------------------------------------
// Replay buffer

/// Column-major training batch: one sample per column.
struct Batch
{
  Matrix obs;
  Matrix action;
  Vector reward;
  Matrix next_obs;
  Vector done;
  std::vector<std::size_t> indices;

  Eigen::Index size() const { return obs.cols(); }
};

/// Frozen, read-only transition store. Normalization statistics are computed
/// over every stored observation at construction.
class ReplayBuffer
{
public:
  ReplayBuffer() = default;
  explicit ReplayBuffer(std::span<const Transition> transitions);

  std::size_t size() const { return static_cast<std::size_t>(reward_.size()); }
  bool empty() const { return size() == 0; }
  const NormalizationStats & stats() const { return stats_; }

  /// Normalized columns.
  const Matrix & observations() const { return obs_; }
  const Matrix & next_observations() const { return next_obs_; }
  const Matrix & actions() const { return action_; }
  const Vector & rewards() const { return reward_; }
  const Vector & dones() const { return done_; }

  Batch gather(std::span<const std::size_t> indices) const;

private:
  NormalizationStats stats_;
  Matrix obs_;
  Matrix next_obs_;
  Matrix action_;
  Vector reward_;
  Vector done_;
};

NormalizationStats compute_stats(std::span<const Transition> transitions);

/// Uniform with replacement. Throws Error on an empty buffer.
Batch sample_batch(const ReplayBuffer & buffer, std::size_t batch_size, Rng & rng);

// ---------------------------------------------------------------------------
// Generation

enum class DensityMix { Low, Middle, High, Mix };
DensityMix parse_density_mix(std::string_view name);
std::string_view to_string(DensityMix mix);

/// Scripted imperfect driver: pure pursuit on a laterally biased centerline,
/// per-episode desired speed, and gap keeping on the observed front objects.
struct HumanDriver
{
  double desired_speed = 8.33;
  double lateral_bias = 0.0;
  double stop_distance = 6.0;
  double comfort_decel = 3.0;
  double accel = 2.5;
  double decel = 6.0;
  /// Crossing objects with TTC below this make the driver ease off.
  double crossing_ttc = 2.0;

  kinematics::ActionVector act(
    const world::Observation & obs, const env::Route & route, const env::EnvConfig & cfg) const;
};

struct GenerateConfig
{
  std::uint64_t seed = 0;
  int episodes = 500;
  DensityMix density = DensityMix::Mix;
  env::EnvConfig env;
  double speed_factor_min = 0.7;
  double speed_factor_max = 1.1;
  double lateral_bias_max = 0.3;
  /// Per-step jitter added to the driver's commands: yaw rate [rad/s] and
  /// speed along the heading [m/s], both zero-mean Gaussian.
  double yaw_rate_jitter = 0.15;
  double speed_jitter = 0.5;
  /// When false the driver runs at v_max on the centerline with no jitter.
  bool behavior_noise = true;
  /// Leaving the monitored area ends the log window, not the drive, so by
  /// default only collisions are terminal; exits and timeouts are truncations.
  bool terminal_on_exit = false;
};

struct GeneratedData
{
  std::vector<RsuLogRecord> log;
  std::vector<Transition> transitions;
  int episodes = 0;
};

GeneratedData generate_dataset(const GenerateConfig & cfg);

}  // namespace crossflow::dataset

#endif  // CROSSFLOW__DATASET_HPP_
