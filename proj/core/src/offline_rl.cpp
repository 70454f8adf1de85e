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

#include "crossflow/offline_rl.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <memory>
#include <ostream>
#include <string>

#include "crossflow/binary_io.hpp"

namespace crossflow::offline_rl
{

namespace
{

constexpr double kLambdaEps = 1e-8;

void require(bool ok, const std::string & msg)
{
  if (!ok) {
    throw Error("TrainConfig: " + msg);
  }
}

std::vector<int> layer_sizes(int in, const std::vector<int> & hidden, int out)
{
  std::vector<int> s;
  s.reserve(hidden.size() + 2);
  s.push_back(in);
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

/// (a - b) / bounds, column-wise.
Matrix scaled_diff(const Matrix & a, const Matrix & b, const Vector & bounds)
{
  return ((a - b).array().colwise() / bounds.array()).matrix();
}

void update_targets(Agent & agent, double tau)
{
  nn::polyak_update(agent.actor_target, agent.actor, tau);
  for (int k = 0; k < 2; ++k) {
    nn::polyak_update(agent.critic_target[k], agent.critic[k], tau);
  }
}

/// Actor forward pass plus the gradient of -lambda * mean Q1 with respect to
/// the physical action.
struct PolicyGradient
{
  nn::Tape actor_tape;
  Matrix pi;
  Vector q;
  Matrix d_action;
};

PolicyGradient policy_gradient(const Agent & agent, const Matrix & obs, double lambda_scale)
{
  PolicyGradient pg;
  pg.pi = nn::forward(agent.actor, obs, pg.actor_tape);
  nn::Tape critic_tape;
  const Matrix q = nn::forward(agent.critic[0], critic_input(obs, pg.pi, agent.bounds), critic_tape);
  pg.q = q.row(0).transpose();
  const auto b = static_cast<double>(obs.cols());
  const Matrix up = Matrix::Constant(1, obs.cols(), -lambda_scale / b);
  const auto g = nn::backward(agent.critic[0], critic_tape, up, nn::BackwardMode::InputOnly);
  pg.d_action =
    (g.input.bottomRows(agent.bounds.size()).array().colwise() / agent.bounds.array()).matrix();
  return pg;
}

}  // namespace

std::string_view to_string(Algorithm a)
{
  switch (a) {
    case Algorithm::BC:
      return "bc";
    case Algorithm::TD3:
      return "td3";
    case Algorithm::TD3BC:
      return "td3+bc";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name)
{
  if (name == "bc") {
    return Algorithm::BC;
  }
  if (name == "td3") {
    return Algorithm::TD3;
  }
  if (name == "td3+bc" || name == "td3bc") {
    return Algorithm::TD3BC;
  }
  throw Error("unknown algorithm '" + std::string(name) + "' (expected bc, td3 or td3+bc)");
}

void TrainConfig::validate() const
{
  require(max_steps >= 1, "max_steps must be at least 1");
  require(eval_every >= 1, "eval_every must be at least 1");
  require(max_steps % eval_every == 0, "eval_every must divide max_steps");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(policy_noise >= 0.0 && noise_clip >= 0.0, "policy noise and clip must be >= 0");
  require(policy_delay >= 1, "policy_delay must be at least 1");
  require(tau > 0.0 && tau <= 1.0, "tau must lie in (0, 1]");
  require(alpha_td3bc > 0.0, "alpha_td3bc must be positive");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  require(!hidden.empty(), "at least one hidden layer is required");
  for (int h : hidden) {
    require(h >= 1, "hidden sizes must be positive");
  }
  require(eval_episodes >= 1, "eval_episodes must be at least 1");
  require(!seeds.empty(), "at least one seed is required");
}

std::vector<std::uint64_t> derive_run_seeds(std::uint64_t master, int count)
{
  if (count < 1) {
    throw Error("derive_run_seeds: count must be at least 1");
  }
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(derive_seed(master, static_cast<std::uint64_t>(i), 0x5eed));
  }
  return out;
}

Vector action_bounds(const kinematics::VehicleConfig & vehicle)
{
  Vector b(dataset::kActionDim);
  b << vehicle.v_cap, vehicle.v_cap, vehicle.yaw_rate_cap;
  return b;
}

Agent make_agent(const TrainConfig & cfg, const kinematics::VehicleConfig & vehicle, Rng & rng)
{
  Agent a;
  a.bounds = action_bounds(vehicle);
  a.actor = nn::Mlp::initialized(
    layer_sizes(dataset::kObsDim, cfg.hidden, dataset::kActionDim),
    nn::OutputActivation::TanhScaled, a.bounds, rng);
  a.actor_target = a.actor;
  a.actor_opt = nn::AdamState::for_net(a.actor, cfg.actor_adam);
  for (int k = 0; k < 2; ++k) {
    a.critic[k] = nn::Mlp::initialized(
      layer_sizes(dataset::kObsDim + dataset::kActionDim, cfg.hidden, 1),
      nn::OutputActivation::Identity, {}, rng);
    a.critic_target[k] = a.critic[k];
    a.critic_opt[k] = nn::AdamState::for_net(a.critic[k], cfg.critic_adam);
  }
  return a;
}

Matrix critic_input(const Matrix & obs, const Matrix & action, const Vector & bounds)
{
  if (obs.cols() != action.cols() || action.rows() != bounds.size()) {
    throw Error("critic_input: shape mismatch");
  }
  Matrix x(obs.rows() + action.rows(), obs.cols());
  x.topRows(obs.rows()) = obs;
  x.bottomRows(action.rows()) = (action.array().colwise() / bounds.array()).matrix();
  return x;
}

double bc_update(nn::Mlp & actor, nn::AdamState & opt, const dataset::Batch & batch)
{
  if (batch.size() == 0) {
    throw Error("bc_update: empty batch");
  }
  nn::Tape tape;
  const Matrix out = nn::forward(actor, batch.obs, tape);
  const Vector & b = actor.bounds();
  const Matrix diff = scaled_diff(out, batch.action, b);
  const auto n = static_cast<double>(diff.size());
  const double loss = diff.squaredNorm() / n;
  const Matrix up = (2.0 / n) * (diff.array().colwise() / b.array()).matrix();
  nn::adam_update(actor, nn::backward(actor, tape, up), opt);
  return loss;
}

Vector td3_target(const Agent & agent, const dataset::Batch & batch, const TrainConfig & cfg,
  Rng & rng)
{
  Matrix a = nn::forward(agent.actor_target, batch.next_obs);
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double bound = agent.bounds(i);
      const double clip = cfg.noise_clip * bound;
      const double noise = std::clamp(cfg.policy_noise * bound * rng.normal(), -clip, clip);
      a(i, j) = std::clamp(a(i, j) + noise, -bound, bound);
    }
  }
  const Matrix x = critic_input(batch.next_obs, a, agent.bounds);
  const Matrix q1 = nn::forward(agent.critic_target[0], x);
  const Matrix q2 = nn::forward(agent.critic_target[1], x);
  const Vector q_min = q1.row(0).cwiseMin(q2.row(0)).transpose();
  return batch.reward.array() +
         cfg.gamma * (1.0 - batch.done.array()) * q_min.array();
}

CriticLosses td3_critic_update(
  Agent & agent, const dataset::Batch & batch, const TrainConfig & cfg, Rng & rng)
{
  if (batch.size() == 0) {
    throw Error("td3_critic_update: empty batch");
  }
  const Vector y = td3_target(agent, batch, cfg, rng);
  const Matrix x = critic_input(batch.obs, batch.action, agent.bounds);
  const auto n = static_cast<double>(batch.size());
  double losses[2] = {0.0, 0.0};
  for (int k = 0; k < 2; ++k) {
    nn::Tape tape;
    const Matrix q = nn::forward(agent.critic[k], x, tape);
    const Eigen::RowVectorXd diff = q.row(0) - y.transpose();
    losses[k] = diff.squaredNorm() / n;
    const Matrix up = (2.0 / n) * diff;
    nn::adam_update(agent.critic[k], nn::backward(agent.critic[k], tape, up), agent.critic_opt[k]);
  }
  return {losses[0], losses[1]};
}

double td3_actor_update(Agent & agent, const dataset::Batch & batch, const TrainConfig & cfg)
{
  if (batch.size() == 0) {
    throw Error("td3_actor_update: empty batch");
  }
  auto pg = policy_gradient(agent, batch.obs, 1.0);
  const double loss = -pg.q.mean();
  nn::adam_update(agent.actor, nn::backward(agent.actor, pg.actor_tape, pg.d_action),
    agent.actor_opt);
  update_targets(agent, cfg.tau);
  return loss;
}

double td3bc_actor_update(Agent & agent, const dataset::Batch & batch, const TrainConfig & cfg)
{
  if (batch.size() == 0) {
    throw Error("td3bc_actor_update: empty batch");
  }
  // lambda depends on Q only through its batch scale, so evaluate Q first.
  const Matrix pi = nn::forward(agent.actor, batch.obs);
  const Matrix q_probe =
    nn::forward(agent.critic[0], critic_input(batch.obs, pi, agent.bounds));
  // A floor rather than an offset keeps lambda * Q exactly scale-free.
  const double lambda = cfg.alpha_td3bc / std::max(q_probe.array().abs().mean(), kLambdaEps);

  auto pg = policy_gradient(agent, batch.obs, lambda);
  const Matrix diff = scaled_diff(pg.pi, batch.action, agent.bounds);
  const auto n = static_cast<double>(diff.size());
  const double loss = -lambda * pg.q.mean() + diff.squaredNorm() / n;
  const Matrix d_bc = (2.0 / n) * (diff.array().colwise() / agent.bounds.array()).matrix();
  nn::adam_update(agent.actor, nn::backward(agent.actor, pg.actor_tape, pg.d_action + d_bc),
    agent.actor_opt);
  update_targets(agent, cfg.tau);
  return loss;
}

Policy checkpoint_policy(const nn::Checkpoint & ckpt)
{
  if (ckpt.net.input_size() != dataset::kObsDim ||
      ckpt.net.output_size() != dataset::kActionDim)
  {
    throw Error(
      "checkpoint dimensions " + std::to_string(ckpt.net.input_size()) + "->" +
      std::to_string(ckpt.net.output_size()) + " do not match observation/action " +
      std::to_string(dataset::kObsDim) + "->" + std::to_string(dataset::kActionDim));
  }
  auto shared = std::make_shared<const nn::Checkpoint>(ckpt);
  const dataset::NormalizationStats stats = shared->has_normalizer()
    ? dataset::NormalizationStats{shared->input_mean, shared->input_std}
    : dataset::NormalizationStats::identity(dataset::kObsDim);
  return [shared, stats](const world::Observation & obs, const env::Environment &) {
    const Vector out = nn::forward(shared->net, dataset::encode_observation(obs, stats));
    return kinematics::ActionVector{out(0), out(1), out(2)};
  };
}

Policy random_policy(const kinematics::VehicleConfig & vehicle, std::uint64_t seed)
{
  auto rng = std::make_shared<Rng>(seed);
  const Vector b = action_bounds(vehicle);
  return [rng, b](const world::Observation &, const env::Environment &) {
    const double vx = rng->uniform(-b(0), b(0));
    const double vy = rng->uniform(-b(1), b(1));
    const double w = rng->uniform(-b(2), b(2));
    return kinematics::ActionVector{vx, vy, w};
  };
}

EpisodeResult run_episode(
  env::Environment & environment, const Policy & policy, std::uint64_t seed,
  env::Density density)
{
  EpisodeResult r;
  world::Observation obs = environment.reset(seed, density);
  r.scene_hash = env::scene_hash(environment.state());
  r.initial_objects_in_zone = environment.objects_in_zone();
  for (;;) {
    const auto out = environment.step(policy(obs, environment));
    ++r.steps;
    r.sum_total += out.reward_total;
    r.sum_safety += out.reward_safety;
    r.sum_effi += out.reward_effi;
    r.sum_dev += out.reward_dev;
    obs = out.observation;
    if (out.done) {
      r.outcome = out.done_reason;
      break;
    }
  }
  if (r.outcome == env::DoneReason::ExitedIntersectionArea) {
    r.travel_time = environment.travel_time();
  }
  return r;
}

double normalized_reward(double reward_total, const env::RewardConfig & cfg)
{
  return reward_total / cfg.max_total();
}

double evaluate_policy(
  const Policy & policy, const env::EnvConfig & env_cfg, int episodes, std::uint64_t seed)
{
  if (episodes < 1) {
    throw Error("evaluate_policy: episodes must be at least 1");
  }
  env::Environment environment(env_cfg);
  double acc = 0.0;
  for (int i = 0; i < episodes; ++i) {
    const auto density = static_cast<env::Density>(i % 3);
    const auto r = run_episode(
      environment, policy, derive_seed(seed, static_cast<std::uint64_t>(i), 0xe7a1), density);
    acc += normalized_reward(r.sum_total / r.steps, env_cfg.reward);
  }
  return acc / episodes;
}

double evaluate_policy(
  const nn::Checkpoint & actor, const env::EnvConfig & env_cfg, int episodes,
  std::uint64_t seed)
{
  return evaluate_policy(checkpoint_policy(actor), env_cfg, episodes, seed);
}

TrainRun train(
  Algorithm algorithm, const dataset::ReplayBuffer & buffer, const TrainConfig & cfg,
  const env::EnvConfig & env_cfg, std::uint64_t seed, const ProgressFn & progress)
{
  cfg.validate();
  if (buffer.empty()) {
    throw Error("train: empty replay buffer");
  }
  Rng init_rng(derive_seed(seed, 0x1417));
  Rng rng(derive_seed(seed, 0x7a1));
  const std::uint64_t eval_seed = derive_seed(seed, 0xe7a1);
  Agent agent = make_agent(cfg, env_cfg.vehicle, init_rng);

  TrainRun run;
  run.algorithm = algorithm;
  run.seed = seed;
  run.actor.input_mean = buffer.stats().mean;
  run.actor.input_std = buffer.stats().std;
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  for (int step = 1; step <= cfg.max_steps; ++step) {
    const auto batch = dataset::sample_batch(buffer, batch_size, rng);
    if (algorithm == Algorithm::BC) {
      bc_update(agent.actor, agent.actor_opt, batch);
    } else {
      td3_critic_update(agent, batch, cfg, rng);
      if (step % cfg.policy_delay == 0) {
        if (algorithm == Algorithm::TD3) {
          td3_actor_update(agent, batch, cfg);
        } else {
          td3bc_actor_update(agent, batch, cfg);
        }
      }
    }
    if (step % cfg.eval_every == 0) {
      run.actor.net = agent.actor;
      const double score = evaluate_policy(run.actor, env_cfg, cfg.eval_episodes, eval_seed);
      run.curve.push_back({step, score});
      if (progress) {
        progress(step, score);
      }
    }
  }
  run.actor.net = agent.actor;
  return run;
}

AggregateCurve aggregate_runs(std::span<const TrainRun> runs)
{
  if (runs.empty()) {
    throw Error("aggregate_runs: no runs");
  }
  const auto & ref = runs.front().curve;
  for (const auto & r : runs) {
    if (r.curve.size() != ref.size()) {
      throw Error("aggregate_runs: curves differ in length");
    }
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (r.curve[i].step != ref[i].step) {
        throw Error("aggregate_runs: curves differ in evaluation steps");
      }
    }
  }
  AggregateCurve agg;
  agg.runs = static_cast<int>(runs.size());
  agg.has_ci = runs.size() >= 2;
  const auto n = static_cast<double>(runs.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    double sum = 0.0;
    for (const auto & r : runs) {
      sum += r.curve[i].normalized_reward;
    }
    const double mean = sum / n;
    double half = 0.0;
    if (agg.has_ci) {
      double ss = 0.0;
      for (const auto & r : runs) {
        const double d = r.curve[i].normalized_reward - mean;
        ss += d * d;
      }
      half = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    agg.points.push_back({ref[i].step, mean, mean - half, mean + half});
  }
  return agg;
}

void write_curve_csv(std::ostream & os, const std::vector<CurvePoint> & curve)
{
  os << "step,normalized_reward\n";
  for (const auto & p : curve) {
    os << p.step << ',' << io::format_double(p.normalized_reward) << '\n';
  }
  if (!os) {
    throw Error("write_curve_csv: write failed");
  }
}

std::vector<CurvePoint> read_curve_csv(std::istream & is)
{
  std::string line;
  if (!std::getline(is, line) || line != "step,normalized_reward") {
    throw Error("curve CSV: unexpected header");
  }
  std::vector<CurvePoint> out;
  while (std::getline(is, line)) {
    if (line.empty()) {
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error("curve CSV: malformed line '" + line + "'");
    }
    const std::string_view sv(line);
    out.push_back({static_cast<int>(io::parse_int(sv.substr(0, comma))),
      io::parse_double(sv.substr(comma + 1))});
  }
  return out;
}

void write_aggregate_csv(std::ostream & os, const AggregateCurve & agg)
{
  os << "step,mean,ci_low,ci_high,runs\n";
  for (const auto & p : agg.points) {
    os << p.step << ',' << io::format_double(p.mean) << ',';
    if (agg.has_ci) {
      os << io::format_double(p.ci_low) << ',' << io::format_double(p.ci_high);
    } else {
      os << ',';
    }
    os << ',' << agg.runs << '\n';
  }
  if (!os) {
    throw Error("write_aggregate_csv: write failed");
  }
}

AggregateCurve read_aggregate_csv(std::istream & is)
{
  std::string line;
  if (!std::getline(is, line) || line != "step,mean,ci_low,ci_high,runs") {
    throw Error("aggregate CSV: unexpected header");
  }
  AggregateCurve agg;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) {
      continue;
    }
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) {
        break;
      }
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 5) {
      throw Error("aggregate CSV: expected 5 fields in '" + line + "'");
    }
    AggregatePoint p;
    p.step = static_cast<int>(io::parse_int(f[0]));
    p.mean = io::parse_double(f[1]);
    const bool has_ci = !f[2].empty();
    p.ci_low = has_ci ? io::parse_double(f[2]) : p.mean;
    p.ci_high = has_ci ? io::parse_double(f[3]) : p.mean;
    const int runs = static_cast<int>(io::parse_int(f[4]));
    if (first) {
      agg.has_ci = has_ci;
      agg.runs = runs;
      first = false;
    } else if (has_ci != agg.has_ci || runs != agg.runs) {
      throw Error("aggregate CSV: inconsistent rows");
    }
    agg.points.push_back(p);
  }
  return agg;
}

}  // namespace crossflow::offline_rl
