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

// Acceptance suite. Prints one line per criterion:
//   C<n> PASS|FAIL <name>: <measurements>
// and exits 0 only when every selected criterion passes. Criteria 8 to 10
// share one end-to-end pipeline run through the CLI under --work-dir.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cli.hpp"
#include "crossflow/binary_io.hpp"
#include "crossflow/dataset.hpp"
#include "crossflow/env.hpp"
#include "crossflow/eval.hpp"
#include "crossflow/kinematics.hpp"
#include "crossflow/nn.hpp"
#include "crossflow/offline_rl.hpp"
#include "crossflow/world.hpp"
#include "oracles.hpp"
#include "toy_mdp.hpp"

namespace
{

namespace fs = std::filesystem;
using namespace crossflow;
using Clock = std::chrono::steady_clock;

struct Verdict
{
  bool pass = true;
  std::ostringstream detail;

  /// Records one sub-check; every failing sub-check is named in the detail.
  void check(bool ok, const std::string & what)
  {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v)
{
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

std::string slurp(const fs::path & p)
{
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// 1. TTC oracle

void ttc_oracle(Verdict & v)
{
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  int pairs = 0;
  while (pairs < 10000) {
    const auto ego = world::make_state(world::ParticipantKind::Vehicle, rng.uniform(-20, 20),
      rng.uniform(-20, 20), rng.uniform(-kPi, kPi), rng.uniform(-10, 10), rng.uniform(-10, 10));
    const auto other = world::make_state(world::ParticipantKind::Vehicle, rng.uniform(-20, 20),
      rng.uniform(-20, 20), rng.uniform(-kPi, kPi), rng.uniform(-10, 10), rng.uniform(-10, 10));
    if (std::hypot(other.x - ego.x, other.y - ego.y) < 0.5) {
      continue;
    }
    const auto rel = world::relative_kinematics(ego, other);
    const double ttc = world::compute_ttc(rel);
    // Approaching pairs with a horizon the simulation can reach.
    if (!(rel.approach_angle < kPi / 2.0) || !(ttc < 60.0)) {
      continue;
    }
    const double sim = testing::ttc_by_simulation(ego, other, 1e-3, 61.0);
    worst = std::max(worst, std::abs(sim - ttc));
    ++pairs;
  }
  const double elapsed = seconds_since(t0);
  v.detail << "pairs=" << pairs << " max|dt|=" << fmt(worst) << "s runtime=" << fmt(elapsed)
           << "s";
  v.check(worst <= 2e-3, "|dt| <= 2e-3 s");
  v.check(elapsed < 10.0, "runtime < 10 s");
}

// ---------------------------------------------------------------------------
// 2. Kinematics

void kinematics_suite(Verdict & v)
{
  using namespace kinematics;
  const VehicleConfig cfg;
  const double l = cfg.wheelbase;
  Rng rng(202);

  double round_trip = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const ControlInput u{sign * rng.uniform(2 * cfg.v_eps, cfg.v_cap),
      rng.uniform(-0.999 * cfg.delta_max, 0.999 * cfg.delta_max)};
    const double yaw = rng.uniform(-kPi, kPi);
    const auto back = action_to_control(control_to_action(u, yaw, l), yaw, cfg);
    round_trip = std::max({round_trip, std::abs(back.control.v_r - u.v_r),
      std::abs(back.control.delta - u.delta), back.degenerate ? 1.0 : 0.0});
  }

  const double delta = 0.3;
  const double radius = l / std::tan(delta);
  BicycleState s{1, -2, 0.4};
  const auto r0 = s.rear_axle(l);
  const double cx = r0.x - radius * std::sin(s.yaw);
  const double cy = r0.y + radius * std::cos(s.yaw);
  double circle = 0.0;
  for (int i = 0; i < 600; ++i) {
    s = integrate_step(s, {5, delta}, 0.1, l);
    const auto r = s.rear_axle(l);
    circle = std::max(circle, std::abs(std::hypot(r.x - cx, r.y - cy) - radius) / radius);
  }

  const double vel = 10.0;
  const double steer = 0.5;
  const double horizon = 2.0;
  const auto exact = testing::exact_arc(0, 0, 0, vel, steer, l, horizon);
  std::vector<double> lx;
  std::vector<double> ly;
  for (double dt : {0.1, 0.05, 0.025, 0.0125}) {
    auto b = BicycleState::from_rear_axle(0, 0, 0, l);
    const int n = static_cast<int>(std::lround(horizon / dt));
    for (int i = 0; i < n; ++i) {
      b = integrate_step(b, {vel, steer}, dt, l);
    }
    const auto r = b.rear_axle(l);
    lx.push_back(std::log(dt));
    ly.push_back(std::log(std::hypot(r.x - exact.x_r, r.y - exact.y_r)));
  }
  const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4.0;
  const double my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4.0;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;

  double residual = 0.0;
  BicycleState c{0, 0, 0};
  for (int i = 0; i < 10000; ++i) {
    const ControlInput u{rng.uniform(-cfg.v_cap, cfg.v_cap),
      rng.uniform(-cfg.delta_max, cfg.delta_max)};
    c = integrate_step(c, u, 0.1, l);
    const auto rate = rear_axle_rate(c.yaw, u, l);
    residual =
      std::max(residual, std::abs(rate.x_dot * std::sin(c.yaw) - rate.y_dot * std::cos(c.yaw)));
  }

  v.detail << "round_trip=" << fmt(round_trip) << " circle_rel=" << fmt(circle)
           << " rk4_slope=" << fmt(slope) << " constraint=" << fmt(residual);
  v.check(round_trip <= 1e-9, "action/control round trip <= 1e-9");
  v.check(circle <= 1e-6, "circle invariance <= 1e-6");
  v.check(slope >= 3.8 && slope <= 4.2, "RK4 slope in [3.8, 4.2]");
  v.check(residual <= 1e-12, "constraint residual <= 1e-12");
}

// ---------------------------------------------------------------------------
// 3. Rewards

world::Observation lone_ego()
{
  world::Observation obs;
  obs.ego = world::make_state(world::ParticipantKind::Vehicle, 0, 0, 0, 5, 0);
  obs.lf = obs.mf = obs.rf = world::absent_sentinel(obs.ego);
  return obs;
}

void reward_formulas(Verdict & v)
{
  const env::RewardConfig rc;
  const double vmax = env::EnvConfig{}.map.speed_limit;
  const double w = env::EnvConfig{}.map.lane_width;

  auto two_seconds = lone_ego();
  two_seconds.mf = world::make_state(world::ParticipantKind::Vehicle, 10, 0, kPi, 0, 0);
  two_seconds.mf_present = true;
  auto receding = lone_ego();
  receding.mf = world::make_state(world::ParticipantKind::Vehicle, 10, 0, 0, 9, 0);
  receding.mf_present = true;
  const bool safety_points = env::reward_safety(lone_ego(), rc) == 3.0 &&
                             env::reward_safety(two_seconds, rc) == 2.5 &&
                             env::reward_safety(receding, rc) - 2.0 == 0.25;
  const bool effi_points = env::reward_efficiency(vmax, vmax) == 1.0 &&
                           env::reward_efficiency(0.0, vmax) == 0.0 &&
                           env::reward_efficiency(10.0, 8.0) == -0.25;
  const bool dev_points = env::reward_deviation(0.0, w) == 1.0 &&
                          env::reward_deviation(w / 2.0, w) == 0.0 &&
                          env::reward_deviation(w, w) == -1.0;

  // Continuity at v_max: one-sided limits must agree.
  double jump = 0.0;
  for (double eps : {1e-3, 1e-6, 1e-9}) {
    jump = std::abs(env::reward_efficiency(vmax + eps, vmax) -
                    env::reward_efficiency(vmax - eps, vmax));
  }

  double dev_nonlinear = 0.0;
  Rng rng(303);
  for (int i = 0; i < 10000; ++i) {
    const double a = rng.uniform(0.0, 2.0 * w);
    const double b = rng.uniform(0.0, 2.0 * w);
    const double t = rng.uniform();
    const double mixed = env::reward_deviation(t * a + (1 - t) * b, w);
    const double interp = t * env::reward_deviation(a, w) + (1 - t) * env::reward_deviation(b, w);
    dev_nonlinear = std::max(dev_nonlinear, std::abs(mixed - interp));
  }

  double lo = 3.0;
  double hi = 0.0;
  for (int i = 0; i < 20000; ++i) {
    auto obs = lone_ego();
    obs.ego = world::make_state(world::ParticipantKind::Vehicle, 0, 0, rng.uniform(-kPi, kPi),
      rng.uniform(-10, 10), rng.uniform(-10, 10));
    for (auto * slot : {&obs.lf, &obs.mf, &obs.rf}) {
      *slot = world::make_state(world::ParticipantKind::Vehicle, rng.uniform(-30, 30),
        rng.uniform(-30, 30), 0, rng.uniform(-10, 10), rng.uniform(-10, 10));
    }
    obs.lf_present = rng.uniform() < 0.7;
    obs.mf_present = rng.uniform() < 0.7;
    obs.rf_present = rng.uniform() < 0.7;
    const double r = env::reward_safety(obs, rc);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }

  v.detail << "effi_jump_at_vmax=" << fmt(jump) << " dev_nonlinearity=" << fmt(dev_nonlinear)
           << " safety_range=[" << fmt(lo) << ", " << fmt(hi) << "]";
  v.check(jump < 1e-6, "r_effi continuous at v_max");
  v.check(dev_nonlinear < 1e-12, "r_dev linear");
  v.check(lo > 0.0 && hi <= 3.0, "r_safety in (0, 3]");
  v.check(safety_points, "r_safety point values 3 / 2.5 / 0.25");
  v.check(effi_points, "r_effi point values 1 / 0 / -0.25");
  v.check(dev_points, "r_dev point values 1 / 0 / -1");
}

// ---------------------------------------------------------------------------
// 4. Gradient check

void gradient_check(Verdict & v)
{
  const auto t0 = Clock::now();
  Rng rng(404);
  auto normal_matrix = [&](Eigen::Index r, Eigen::Index c, double scale) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = scale * rng.normal();
    }
    return m;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> sizes{static_cast<int>(2 + rng.below(7))};
    const int hidden_layers = 1 + static_cast<int>(rng.below(2));
    for (int k = 0; k < hidden_layers; ++k) {
      sizes.push_back(static_cast<int>(3 + rng.below(14)));
    }
    sizes.push_back(static_cast<int>(1 + rng.below(4)));
    const bool tanh = trial % 2 == 1;
    Eigen::VectorXd bounds;
    if (tanh) {
      bounds = Eigen::VectorXd::Constant(sizes.back(), 2.0);
    }
    nn::Mlp net(sizes,
      tanh ? nn::OutputActivation::TanhScaled : nn::OutputActivation::Identity, bounds);
    for (auto & layer : net.layers()) {
      layer.weight = normal_matrix(layer.weight.rows(), layer.weight.cols(),
        1.0 / std::sqrt(static_cast<double>(layer.weight.cols())));
      layer.bias = normal_matrix(layer.bias.size(), 1, 0.1);
    }
    const auto x = normal_matrix(sizes.front(), 3, 1.0);
    const auto up = normal_matrix(sizes.back(), 3, 1.0);
    worst = std::max(worst, testing::finite_difference_check(net, x, up, 1e-6).max_rel_error);
  }
  const double elapsed = seconds_since(t0);
  v.detail << "nets=100 max_rel_error=" << fmt(worst) << " runtime=" << fmt(elapsed) << "s";
  v.check(worst < 1e-4, "max relative error < 1e-4");
  v.check(elapsed < 30.0, "runtime < 30 s");
}

// ---------------------------------------------------------------------------
// 5. Lambda invariance

double max_param_gap(const nn::Mlp & a, const nn::Mlp & b)
{
  double gap = 0.0;
  for (std::size_t k = 0; k < a.layers().size(); ++k) {
    gap = std::max(gap, (a.layers()[k].weight - b.layers()[k].weight).cwiseAbs().maxCoeff());
    gap = std::max(gap, (a.layers()[k].bias - b.layers()[k].bias).cwiseAbs().maxCoeff());
  }
  return gap;
}

nn::Mlp param_delta(const nn::Mlp & after, const nn::Mlp & before)
{
  nn::Mlp d = after;
  for (std::size_t k = 0; k < d.layers().size(); ++k) {
    d.layers()[k].weight -= before.layers()[k].weight;
    d.layers()[k].bias -= before.layers()[k].bias;
  }
  return d;
}

void lambda_invariance(Verdict & v)
{
  dataset::GenerateConfig gen;
  gen.episodes = 20;
  const dataset::ReplayBuffer buffer(dataset::generate_dataset(gen).transitions);
  const offline_rl::TrainConfig cfg;
  double worst = 0.0;
  double moved = 1.0;
  for (int warmup : {0, 3}) {
    for (double k : {0.1, 10.0}) {
      Rng init(505);
      Rng draw(506);
      auto base = offline_rl::make_agent(cfg, {}, init);
      for (int i = 0; i < warmup; ++i) {
        offline_rl::td3bc_actor_update(base, dataset::sample_batch(buffer, 256, draw), cfg);
      }
      const auto batch = dataset::sample_batch(buffer, 256, draw);
      auto scaled = base;
      for (auto & c : scaled.critic) {
        c.layers().back().weight *= k;
        c.layers().back().bias *= k;
      }
      const auto before = base.actor;
      offline_rl::td3bc_actor_update(base, batch, cfg);
      offline_rl::td3bc_actor_update(scaled, batch, cfg);
      const auto d_base = param_delta(base.actor, before);
      const auto d_scaled = param_delta(scaled.actor, before);
      worst = std::max(worst, max_param_gap(d_base, d_scaled));
      moved = std::min(moved, max_param_gap(base.actor, before));
    }
  }
  v.detail << "k={0.1,10} max|delta gap|=" << fmt(worst) << " min step=" << fmt(moved);
  v.check(worst <= 1e-9, "parameter delta invariant to 1e-9");
  v.check(moved > 0.0, "the update moves the actor");
}

// ---------------------------------------------------------------------------
// 6. Toy MDP

void toy_mdp(Verdict & v)
{
  const testing::ToyMdp mdp;
  double err = 0.0;
  const int used = testing::toy_critic_convergence(mdp, 50000, 1e-2, 606, &err);
  v.detail << "updates=" << used << " max|Q-Q*|=" << fmt(err) << " Q*=(" << fmt(mdp.q_star(0))
           << ", " << fmt(mdp.q_star(1)) << ")";
  v.check(used > 0 && used <= 50000, "both critics within 1e-2 after <= 5e4 updates");
}

// ---------------------------------------------------------------------------
// 7. BC teacher-student

/// Held-out observations standardized with the training statistics.
dataset::Batch held_out_batch(
  const std::vector<dataset::Transition> & t, const dataset::NormalizationStats & stats)
{
  dataset::Batch b;
  const auto n = static_cast<Eigen::Index>(t.size());
  b.obs.resize(dataset::kObsDim, n);
  b.action.resize(dataset::kActionDim, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto & tr = t[static_cast<std::size_t>(j)];
    b.obs.col(j) = dataset::normalize_features(tr.obs, stats);
    b.action.col(j) << tr.action.vx, tr.action.vy, tr.action.yaw_rate;
  }
  return b;
}

void bc_teacher_student(Verdict & v)
{
  dataset::GenerateConfig gen;
  gen.behavior_noise = false;
  gen.episodes = 500;
  gen.seed = 707;
  const dataset::ReplayBuffer train_buf(dataset::generate_dataset(gen).transitions);
  gen.episodes = 100;
  gen.seed = 708;
  const auto held = held_out_batch(dataset::generate_dataset(gen).transitions, train_buf.stats());

  const offline_rl::TrainConfig cfg;
  Rng init(709);
  Rng draw(710);
  auto agent = offline_rl::make_agent(cfg, {}, init);
  int reached = -1;
  double scaled_mse = 0.0;
  double raw_mse = 0.0;
  for (int step = 1; step <= 20000; ++step) {
    offline_rl::bc_update(agent.actor, agent.actor_opt,
      dataset::sample_batch(train_buf, static_cast<std::size_t>(cfg.batch_size), draw));
    if (step % 1000 == 0) {
      const Eigen::MatrixXd err = nn::forward(agent.actor, held.obs) - held.action;
      raw_mse = err.array().square().mean();
      scaled_mse = (err.array().colwise() / agent.bounds.array()).square().mean();
      if (scaled_mse < 1e-3 && reached < 0) {
        reached = step;
      }
    }
  }
  v.detail << "train_transitions=" << train_buf.size() << " held_out=" << held.obs.cols()
           << " first_step_below=" << reached << " final_mse_scaled=" << fmt(scaled_mse)
           << " final_mse_physical=" << fmt(raw_mse);
  v.check(reached > 0, "held-out MSE (bound-scaled) < 1e-3 within 20000 steps");
}

// ---------------------------------------------------------------------------
// 8-10. End-to-end pipeline through the CLI

struct Pipeline
{
  bool ok = false;
  std::string error;
  fs::path dataset;
  fs::path td3bc;
  fs::path td3bc_repeat;
  fs::path bc;
  fs::path eval;
  double minutes = 0.0;
};

fs::path invoke(const std::vector<std::string> & args, std::ostream & log)
{
  std::ostringstream out;
  log << "$ crossflow";
  for (const auto & a : args) {
    log << " " << a;
  }
  log << "\n";
  const int code = cli::run(args, out, log);
  log << out.str() << std::flush;
  if (code != 0) {
    throw Error("crossflow " + args.front() + " exited with " + std::to_string(code));
  }
  const std::string key = "output: ";
  const auto text = out.str();
  const auto pos = text.rfind(key);
  return text.substr(pos + key.size(), text.find('\n', pos) - pos - key.size());
}

Pipeline run_pipeline(const fs::path & work)
{
  Pipeline p;
  const auto t0 = Clock::now();
  fs::create_directories(work);
  std::ofstream log(work / "pipeline.log");
  try {
    const auto gen = invoke({"gen-data", "--out", (work / "data").string()}, log);
    p.dataset = gen / "dataset.cfds";
    p.td3bc = invoke({"train", "--dataset", p.dataset.string(), "--algo", "td3+bc", "--out",
      (work / "td3bc").string()}, log);
    p.td3bc_repeat = invoke({"train", "--dataset", p.dataset.string(), "--algo", "td3+bc",
      "--out", (work / "td3bc_repeat").string()}, log);
    p.bc = invoke({"train", "--dataset", p.dataset.string(), "--algo", "bc", "--out",
      (work / "bc").string()}, log);
    p.eval = invoke({"eval", "--td3bc-checkpoint", (p.td3bc / "actor_0.cfnn").string(),
      "--bc-checkpoint", (p.bc / "actor_0.cfnn").string(), "--out", (work / "eval").string()},
      log);
    p.ok = true;
  } catch (const std::exception & e) {
    p.error = e.what();
  }
  p.minutes = seconds_since(t0) / 60.0;
  return p;
}

std::vector<std::vector<offline_rl::CurvePoint>> read_curves(const fs::path & dir)
{
  std::vector<std::vector<offline_rl::CurvePoint>> curves;
  for (int i = 0;; ++i) {
    const auto path = dir / ("curve_" + std::to_string(i) + ".csv");
    if (!fs::exists(path)) {
      return curves;
    }
    std::ifstream is(path, std::ios::binary);
    curves.push_back(offline_rl::read_curve_csv(is));
  }
}

offline_rl::AggregateCurve read_aggregate(const fs::path & dir)
{
  std::ifstream is(dir / "aggregate.csv", std::ios::binary);
  return offline_rl::read_aggregate_csv(is);
}

void protocol_shape(Verdict & v, const Pipeline & p)
{
  if (!p.ok) {
    v.check(false, "pipeline: " + p.error);
    return;
  }
  const auto curves = read_curves(p.td3bc);
  bool shape = curves.size() == 10;
  for (const auto & c : curves) {
    shape = shape && c.size() == 50;
    for (std::size_t i = 0; shape && i < c.size(); ++i) {
      shape = c[i].step == static_cast<int>(400 * (i + 1));
    }
  }
  const auto agg = read_aggregate(p.td3bc);
  double ci_gap = 0.0;
  bool agg_ok = agg.has_ci && agg.runs == 10 && agg.points.size() == 50;
  for (std::size_t i = 0; agg_ok && i < agg.points.size(); ++i) {
    double mean = 0.0;
    for (const auto & c : curves) {
      mean += c[i].normalized_reward / 10.0;
    }
    double ss = 0.0;
    for (const auto & c : curves) {
      ss += (c[i].normalized_reward - mean) * (c[i].normalized_reward - mean);
    }
    const double half = 1.96 * std::sqrt(ss / 9.0) / std::sqrt(10.0);
    const auto & pt = agg.points[i];
    ci_gap = std::max({ci_gap, std::abs(pt.mean - mean), std::abs(pt.ci_high - mean - half),
      std::abs(mean - pt.ci_low - half)});
  }
  bool identical = true;
  int files = 0;
  for (const auto & e : fs::directory_iterator(p.td3bc)) {
    const auto name = e.path().filename().string();
    if (name.rfind("curve_", 0) == 0 || name.rfind("actor_", 0) == 0) {
      identical = identical && slurp(e.path()) == slurp(p.td3bc_repeat / name);
      ++files;
    }
  }
  v.detail << "runs=" << curves.size() << " points=" << (curves.empty() ? 0 : curves[0].size())
           << " ci_error=" << fmt(ci_gap) << " bit_identical_files=" << (identical ? files : 0)
           << "/" << files;
  v.check(shape, "10 runs x 50 points at steps 400..20000");
  v.check(agg_ok && ci_gap < 1e-12, "aggregate mean and 95% CI");
  v.check(identical && files == 20, "runs bit-reproducible per seed");
}

void end_to_end(Verdict & v, const Pipeline & p)
{
  if (!p.ok) {
    v.check(false, "pipeline: " + p.error);
    return;
  }
  const env::EnvConfig env_cfg;
  const offline_rl::TrainConfig tc;
  const auto seeds = offline_rl::derive_run_seeds(0, 10);
  // Random policy on the same evaluation scenes the trained runs were scored on.
  double random = 0.0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    random += offline_rl::evaluate_policy(offline_rl::random_policy(env_cfg.vehicle, seeds[i]),
                env_cfg, tc.eval_episodes, derive_seed(seeds[i], 0xe7a1)) /
              static_cast<double>(seeds.size());
  }
  const double td3bc = read_aggregate(p.td3bc).points.back().mean;
  const double bc = read_aggregate(p.bc).points.back().mean;

  std::ifstream ms(p.eval / "metrics.csv", std::ios::binary);
  const auto cells = eval::summarize(eval::read_metrics_csv(ms), "baseline");
  std::optional<double> tt_agent;
  std::optional<double> tt_base;
  int completed_agent = 0;
  for (const auto & c : cells) {
    if (c.density != env::Density::High) {
      continue;
    }
    if (c.agent == "td3+bc" && c.travel_time) {
      tt_agent = c.travel_time->mean;
      completed_agent = c.completed;
    }
    if (c.agent == "baseline" && c.travel_time) {
      tt_base = c.travel_time->mean;
    }
  }
  v.detail << "random=" << fmt(random) << " td3+bc=" << fmt(td3bc) << " bc=" << fmt(bc)
           << " high_travel_time td3+bc=" << (tt_agent ? fmt(*tt_agent) : "n/a") << "s ("
           << completed_agent << " completed) baseline=" << (tt_base ? fmt(*tt_base) : "n/a")
           << "s pipeline=" << fmt(p.minutes) << "min";
  v.check(td3bc >= random + 0.2, "td3+bc >= random + 0.2");
  v.check(bc >= random + 0.2, "bc >= random + 0.2");
  v.check(tt_agent && tt_base && *tt_agent < *tt_base, "td3+bc high-density travel time < baseline");
}

void density_protocol(Verdict & v, const Pipeline & p)
{
  if (!p.ok) {
    v.check(false, "pipeline: " + p.error);
    return;
  }
  std::ifstream ms(p.eval / "metrics.csv", std::ios::binary);
  const auto m = eval::read_metrics_csv(ms);
  std::map<std::pair<int, int>, std::set<std::uint64_t>> hashes;
  std::map<std::pair<int, int>, int> agents_per_cell;
  bool buckets = true;
  bool order = m.size() == 45;
  const char * names[] = {"td3+bc", "bc", "baseline"};
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto key = std::pair{static_cast<int>(m[i].density), m[i].repeat};
    hashes[key].insert(m[i].scene_hash);
    ++agents_per_cell[key];
    buckets = buckets && env::density_from_count(m[i].initial_objects_in_zone) == m[i].density;
    order = order && m[i].agent == names[i / 15] &&
            static_cast<std::size_t>(m[i].density) == (i / 5) % 3 &&
            static_cast<std::size_t>(m[i].repeat) == i % 5;
  }
  bool paired = hashes.size() == 15;
  for (const auto & [key, set] : hashes) {
    paired = paired && set.size() == 1 && agents_per_cell[key] == 3;
  }
  v.detail << "episodes=" << m.size() << " cells=" << hashes.size()
           << " paired=" << (paired ? "yes" : "no");
  v.check(m.size() == 45 && order, "3 agents x 3 densities x 5 repeats");
  v.check(paired, "scene hashes equal across agents");
  v.check(buckets, "initial scenes fall in their density bucket");
}

// ---------------------------------------------------------------------------
// 11. Round-trips

void format_round_trips(Verdict & v, const fs::path & work)
{
  dataset::GenerateConfig gen;
  gen.episodes = 30;
  gen.seed = 1111;
  const auto data = dataset::generate_dataset(gen);

  std::ostringstream log_a;
  dataset::write_log_csv(log_a, data.log);
  std::istringstream log_in(log_a.str());
  const auto log_back = dataset::read_log_csv(log_in);
  std::ostringstream log_b;
  dataset::write_log_csv(log_b, log_back);
  const bool csv_ok = log_back == data.log && log_a.str() == log_b.str();

  fs::create_directories(work);
  const auto cfds = work / "roundtrip.cfds";
  dataset::save_dataset(cfds.string(), data.transitions);
  const auto back = dataset::load_dataset(cfds.string());
  std::ostringstream again;
  dataset::write_dataset(again, back);
  bool cfds_ok = back.size() == data.transitions.size() && again.str() == slurp(cfds);
  for (std::size_t i = 0; cfds_ok && i < back.size(); ++i) {
    const auto & a = back[i];
    const auto & b = data.transitions[i];
    cfds_ok = a.obs == b.obs && a.next_obs == b.next_obs && a.action == b.action &&
              a.reward == b.reward && a.done == b.done;
  }

  Rng rng(1112);
  nn::Checkpoint ck;
  ck.net = nn::Mlp::initialized({dataset::kObsDim, 32, 32, dataset::kActionDim},
    nn::OutputActivation::TanhScaled, offline_rl::action_bounds({}), rng);
  ck.input_mean = dataset::ReplayBuffer(data.transitions).stats().mean;
  ck.input_std = dataset::ReplayBuffer(data.transitions).stats().std;
  const auto cfnn = work / "roundtrip.cfnn";
  nn::save_checkpoint(cfnn.string(), ck);
  const auto ck_back = nn::load_checkpoint(cfnn.string());
  std::ostringstream ck_again;
  nn::write_checkpoint(ck_again, ck_back);
  bool cfnn_ok = ck_again.str() == slurp(cfnn) && ck_back.net.same_architecture(ck.net) &&
                 ck_back.input_mean == ck.input_mean && ck_back.input_std == ck.input_std;
  for (std::size_t k = 0; cfnn_ok && k < ck.net.layers().size(); ++k) {
    cfnn_ok = ck.net.layers()[k].weight == ck_back.net.layers()[k].weight &&
              ck.net.layers()[k].bias == ck_back.net.layers()[k].bias;
  }
  v.detail << "log_records=" << data.log.size() << " transitions=" << back.size()
           << " checkpoint_bytes=" << ck_again.str().size();
  v.check(csv_ok, "CSV log bit-exact");
  v.check(cfds_ok, "CFDS1 bit-exact");
  v.check(cfnn_ok, "CFNN1 bit-exact");
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"crossflow acceptance suite"};
  std::string work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--work-dir", work, "Scratch directory for pipeline outputs")
    ->capture_default_str();
  app.add_option("--only", only, "Run only these criteria (1-11)")
    ->delimiter(',')
    ->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);

  auto selected = [&](int n) {
    return only.empty() || std::find(only.begin(), only.end(), n) != only.end();
  };
  int failures = 0;
  auto report = [&](int n, const char * name, const std::function<void(Verdict &)> & body) {
    if (!selected(n)) {
      return;
    }
    Verdict v;
    try {
      body(v);
    } catch (const std::exception & e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    failures += v.pass ? 0 : 1;
    std::cout << "C" << n << " " << (v.pass ? "PASS" : "FAIL") << " " << name << ": "
              << v.detail.str() << std::endl;
  };

  const fs::path work_dir(work);
  report(1, "TTC oracle", ttc_oracle);
  report(2, "kinematics suite", kinematics_suite);
  report(3, "reward formulas", reward_formulas);
  report(4, "gradient check", gradient_check);
  report(5, "TD3+BC lambda invariance", lambda_invariance);
  report(6, "toy-MDP critic convergence", toy_mdp);
  report(7, "BC teacher-student", bc_teacher_student);
  if (selected(8) || selected(9) || selected(10)) {
    const auto pipeline = run_pipeline(work_dir / "pipeline");
    report(8, "protocol shape", [&](Verdict & v) { protocol_shape(v, pipeline); });
    report(9, "end-to-end qualitative result", [&](Verdict & v) { end_to_end(v, pipeline); });
    report(10, "density protocol", [&](Verdict & v) { density_protocol(v, pipeline); });
  }
  report(11, "format round-trips", [&](Verdict & v) { format_round_trips(v, work_dir); });
  return failures == 0 ? 0 : 1;
}
