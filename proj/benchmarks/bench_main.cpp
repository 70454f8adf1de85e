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

#include <benchmark/benchmark.h>

#include "crossflow/dataset.hpp"
#include "crossflow/env.hpp"
#include "crossflow/offline_rl.hpp"

namespace
{

using namespace crossflow;

void BM_Ttc(benchmark::State & state)
{
  Rng rng(1);
  std::vector<world::RelativeKinematics> pairs;
  const auto ego = world::make_state(world::ParticipantKind::Vehicle, 0, 0, 0, 6, 0);
  for (int i = 0; i < 1024; ++i) {
    const auto o = world::make_state(world::ParticipantKind::Vehicle, rng.uniform(2, 40),
      rng.uniform(-20, 20), 0, rng.uniform(-8, 8), rng.uniform(-8, 8));
    pairs.push_back(world::relative_kinematics(ego, o));
  }
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(world::compute_ttc(pairs[k++ & 1023]));
  }
}
BENCHMARK(BM_Ttc);

void BM_EnvStep(benchmark::State & state)
{
  const env::EnvConfig cfg;
  env::Environment e(cfg);
  const dataset::HumanDriver driver;
  std::uint64_t seed = 0;
  auto obs = e.reset(seed, env::Density::High);
  for (auto _ : state) {
    const auto res = e.step(driver.act(obs, e.ego_route(), cfg));
    obs = res.observation;
    if (res.done) {
      state.PauseTiming();
      obs = e.reset(++seed, env::Density::High);
      state.ResumeTiming();
    }
  }
}
BENCHMARK(BM_EnvStep);

/// Forward and backward of the default 256-256 actor on one batch.
void BM_MlpForwardBackward(benchmark::State & state)
{
  Rng rng(2);
  const offline_rl::TrainConfig cfg;
  const auto net = nn::Mlp::initialized({dataset::kObsDim, 256, 256, dataset::kActionDim},
    nn::OutputActivation::TanhScaled, offline_rl::action_bounds({}), rng);
  const nn::Matrix x = nn::Matrix::Random(dataset::kObsDim, cfg.batch_size);
  const nn::Matrix up = nn::Matrix::Ones(dataset::kActionDim, cfg.batch_size);
  for (auto _ : state) {
    nn::Tape tape;
    benchmark::DoNotOptimize(nn::forward(net, x, tape));
    benchmark::DoNotOptimize(nn::backward(net, tape, up));
  }
}
BENCHMARK(BM_MlpForwardBackward)->Unit(benchmark::kMillisecond);

dataset::ReplayBuffer small_buffer()
{
  dataset::GenerateConfig gen;
  gen.episodes = 20;
  return dataset::ReplayBuffer(generate_dataset(gen).transitions);
}

void BM_Td3BcStep(benchmark::State & state)
{
  const auto buffer = small_buffer();
  const offline_rl::TrainConfig cfg;
  Rng rng(3);
  auto agent = offline_rl::make_agent(cfg, {}, rng);
  int step = 0;
  for (auto _ : state) {
    const auto batch = dataset::sample_batch(buffer, static_cast<std::size_t>(cfg.batch_size), rng);
    offline_rl::td3_critic_update(agent, batch, cfg, rng);
    if (++step % cfg.policy_delay == 0) {
      offline_rl::td3bc_actor_update(agent, batch, cfg);
    }
  }
}
BENCHMARK(BM_Td3BcStep)->Unit(benchmark::kMillisecond);

void BM_BcStep(benchmark::State & state)
{
  const auto buffer = small_buffer();
  const offline_rl::TrainConfig cfg;
  Rng rng(4);
  auto agent = offline_rl::make_agent(cfg, {}, rng);
  for (auto _ : state) {
    const auto batch = dataset::sample_batch(buffer, static_cast<std::size_t>(cfg.batch_size), rng);
    offline_rl::bc_update(agent.actor, agent.actor_opt, batch);
  }
}
BENCHMARK(BM_BcStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
