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

#ifndef CROSSFLOW__EVAL_HPP_
#define CROSSFLOW__EVAL_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crossflow/env.hpp"
#include "crossflow/nn.hpp"
#include "crossflow/offline_rl.hpp"

namespace crossflow::eval
{

/// Scripted conservative driver: centerline at v_max, stops and waits while
/// any approaching front object is within ttc_thre or the MF object is
/// closer than mf_stop_distance. Never steers around obstacles.
struct ConservativeBaseline
{
  double mf_stop_distance = 10.0;
  double accel = 2.5;
  double decel = 5.0;

  /// Target speed before rate limiting: v_max when clear, else 0.
  double commanded_speed(const world::Observation & obs, const env::EnvConfig & cfg) const;
  kinematics::ActionVector act(
    const world::Observation & obs, const env::Route & route, const env::EnvConfig & cfg) const;
};

enum class AgentKind { TrainedPolicy, ConservativeBaseline };

struct AgentUnderTest
{
  std::string name;
  AgentKind kind = AgentKind::ConservativeBaseline;
  nn::Checkpoint checkpoint;

  /// Throws Error when the checkpoint does not match the observation/action dims.
  static AgentUnderTest trained(std::string name, nn::Checkpoint ckpt);
  static AgentUnderTest baseline(std::string name = "baseline");

  offline_rl::Policy policy(const env::EnvConfig & cfg) const;
};

struct EpisodeMetrics
{
  std::string agent;
  env::Density density = env::Density::Low;
  int repeat = 0;
  std::uint64_t seed = 0;
  std::uint64_t scene_hash = 0;
  env::DoneReason outcome = env::DoneReason::None;
  int steps = 0;
  /// Entry-to-exit seconds inside the intersection area; set only for
  /// episodes that exited.
  std::optional<double> travel_time;
  /// Per-step mean of r_safety / 3, in (0, 1].
  double safety = 0.0;
  /// Per-step mean of r_effi, at most 1.
  double efficiency = 0.0;
  int initial_objects_in_zone = 0;
};

/// Scene seed of one (density, repeat) cell; shared by every agent.
std::uint64_t cell_seed(std::uint64_t master, env::Density density, int repeat);

/// Runs agents x densities x repeats episodes, ordered agent-major, then
/// density, then repeat. `threads` only changes wall time.
std::vector<EpisodeMetrics> run_matrix(
  std::span<const AgentUnderTest> agents, std::span<const env::Density> densities, int repeats,
  std::uint64_t seed, const env::EnvConfig & env_cfg, int threads = 1);

struct Distribution
{
  int count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  /// 95% normal-approximation interval of the mean; equals the mean for n < 2.
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Linear-interpolation quartiles. Throws Error on empty input.
Distribution describe(std::span<const double> values);

struct CellSummary
{
  std::string agent;
  env::Density density = env::Density::Low;
  int episodes = 0;
  int completed = 0;
  int collisions = 0;
  int timeouts = 0;
  int off_route = 0;
  /// Completed episodes only; empty when none completed.
  std::optional<Distribution> travel_time;
  Distribution safety;
  Distribution efficiency;
  /// 100 * (mean - baseline mean) / baseline mean over completed episodes.
  std::optional<double> travel_change_pct;
};

double percent_change(double value, double reference);

/// One summary per (agent, density) cell in first-seen order. Throws Error
/// when a cell of the agent x density grid is empty.
std::vector<CellSummary> summarize(
  std::span<const EpisodeMetrics> metrics, std::string_view baseline_agent = "baseline");

void write_metrics_csv(std::ostream & os, std::span<const EpisodeMetrics> metrics);
std::vector<EpisodeMetrics> read_metrics_csv(std::istream & is);
void write_summary_csv(std::ostream & os, std::span<const CellSummary> cells);

}  // namespace crossflow::eval

#endif  // CROSSFLOW__EVAL_HPP_
