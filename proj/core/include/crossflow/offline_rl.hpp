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

#ifndef CROSSFLOW__OFFLINE_RL_HPP_
#define CROSSFLOW__OFFLINE_RL_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crossflow/dataset.hpp"
#include "crossflow/env.hpp"
#include "crossflow/nn.hpp"

namespace crossflow::offline_rl
{

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Algorithm { BC, TD3, TD3BC };

/// "bc", "td3", "td3+bc".
std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

struct TrainConfig
{
  int max_steps = 20000;
  int eval_every = 400;
  int batch_size = 256;
  /// Target-policy smoothing, as fractions of each action bound.
  double policy_noise = 0.2;
  double noise_clip = 0.5;
  int policy_delay = 2;
  double tau = 0.005;
  double alpha_td3bc = 2.5;
  double gamma = 0.99;
  std::vector<int> hidden = {256, 256};
  nn::AdamConfig actor_adam;
  nn::AdamConfig critic_adam;
  int eval_episodes = 10;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

  int curve_length() const { return max_steps / eval_every; }
  void validate() const;
};

/// `count` run seeds derived from one master seed.
std::vector<std::uint64_t> derive_run_seeds(std::uint64_t master, int count);

/// Per-dimension action bounds (vx, vy, yaw_rate).
Vector action_bounds(const kinematics::VehicleConfig & vehicle);

/// Actor, twin critics, their targets and optimizers. The actor maps
/// standardized observations to physical actions. Critics read the
/// standardized observation stacked over the bound-scaled action.
struct Agent
{
  Vector bounds;
  nn::Mlp actor;
  nn::Mlp actor_target;
  nn::AdamState actor_opt;
  std::array<nn::Mlp, 2> critic;
  std::array<nn::Mlp, 2> critic_target;
  std::array<nn::AdamState, 2> critic_opt;
};

Agent make_agent(
  const TrainConfig & cfg, const kinematics::VehicleConfig & vehicle, Rng & rng);

Matrix critic_input(const Matrix & obs, const Matrix & action, const Vector & bounds);

/// One Adam step on the mean squared error in bound-scaled action units.
/// Returns the loss before the step.
double bc_update(nn::Mlp & actor, nn::AdamState & opt, const dataset::Batch & batch);

/// r + gamma * (1 - done) * min(Q1', Q2') at the smoothed target action.
Vector td3_target(const Agent & agent, const dataset::Batch & batch, const TrainConfig & cfg,
  Rng & rng);

struct CriticLosses
{
  double q1 = 0.0;
  double q2 = 0.0;
};

/// One Adam step per critic on the squared TD error; returns pre-step losses.
CriticLosses td3_critic_update(
  Agent & agent, const dataset::Batch & batch, const TrainConfig & cfg, Rng & rng);

/// Deterministic policy gradient through critic 1, then Polyak updates of all
/// targets. Returns the pre-step loss -mean Q1.
double td3_actor_update(Agent & agent, const dataset::Batch & batch, const TrainConfig & cfg);

/// Minimizes -lambda * mean Q1 + mean squared error to the data, with
/// lambda = alpha / max(mean |Q1|, 1e-8) held constant, then Polyak updates of
/// all targets. Returns the pre-step loss.
double td3bc_actor_update(Agent & agent, const dataset::Batch & batch, const TrainConfig & cfg);

// ---------------------------------------------------------------------------
// Rollouts

using Policy =
  std::function<kinematics::ActionVector(const world::Observation &, const env::Environment &)>;

Policy checkpoint_policy(const nn::Checkpoint & ckpt);
/// Uniform actions inside the bounds; the policy owns its generator.
Policy random_policy(const kinematics::VehicleConfig & vehicle, std::uint64_t seed);

struct EpisodeResult
{
  int steps = 0;
  double sum_total = 0.0;
  double sum_safety = 0.0;
  double sum_effi = 0.0;
  double sum_dev = 0.0;
  env::DoneReason outcome = env::DoneReason::None;
  std::optional<double> travel_time;
  std::uint64_t scene_hash = 0;
  int initial_objects_in_zone = 0;
};

EpisodeResult run_episode(
  env::Environment & environment, const Policy & policy, std::uint64_t seed,
  env::Density density);

/// Per-step total reward divided by its largest attainable value.
double normalized_reward(double reward_total, const env::RewardConfig & cfg);

/// Mean over episodes of the per-step normalized reward. Episode i runs at
/// density i mod 3 with a seed derived from `seed`.
double evaluate_policy(
  const Policy & policy, const env::EnvConfig & env_cfg, int episodes, std::uint64_t seed);
double evaluate_policy(
  const nn::Checkpoint & actor, const env::EnvConfig & env_cfg, int episodes,
  std::uint64_t seed);

// ---------------------------------------------------------------------------
// Training protocol

struct CurvePoint
{
  int step = 0;
  double normalized_reward = 0.0;
};

struct TrainRun
{
  Algorithm algorithm = Algorithm::BC;
  std::uint64_t seed = 0;
  std::vector<CurvePoint> curve;
  nn::Checkpoint actor;
};

/// Optional per-evaluation callback (step, normalized reward).
using ProgressFn = std::function<void(int, double)>;

/// Deterministic per seed. Evaluation scenes are fixed for the whole run.
TrainRun train(
  Algorithm algorithm, const dataset::ReplayBuffer & buffer, const TrainConfig & cfg,
  const env::EnvConfig & env_cfg, std::uint64_t seed, const ProgressFn & progress = {});

struct AggregatePoint
{
  int step = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Mean and 95% normal-approximation interval (1.96 * sample std / sqrt(n)).
/// has_ci is false with fewer than two runs; bounds then equal the mean.
struct AggregateCurve
{
  std::vector<AggregatePoint> points;
  int runs = 0;
  bool has_ci = false;
};

AggregateCurve aggregate_runs(std::span<const TrainRun> runs);

void write_curve_csv(std::ostream & os, const std::vector<CurvePoint> & curve);
std::vector<CurvePoint> read_curve_csv(std::istream & is);
void write_aggregate_csv(std::ostream & os, const AggregateCurve & agg);
AggregateCurve read_aggregate_csv(std::istream & is);

}  // namespace crossflow::offline_rl

#endif  // CROSSFLOW__OFFLINE_RL_HPP_
