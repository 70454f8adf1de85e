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

#include "crossflow/config.hpp"

#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

#include "crossflow/binary_io.hpp"

namespace crossflow::config
{

namespace
{

std::string_view trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Binding custom(
  std::string key, std::string help, std::function<void(std::string_view)> set,
  std::function<std::string()> get)
{
  return {std::move(key), std::move(help), std::move(set), std::move(get)};
}

}  // namespace

KeyValues KeyValues::parse(std::istream & is, const std::string & origin)
{
  KeyValues kv;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::string_view body(line);
    if (const auto hash = body.find('#'); hash != std::string_view::npos) {
      body = body.substr(0, hash);
    }
    body = trim(body);
    if (body.empty()) {
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw Error(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(body.substr(0, eq));
    const auto value = trim(body.substr(eq + 1));
    if (key.empty()) {
      throw Error(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    kv.set(std::string(key), std::string(value));
  }
  return kv;
}

KeyValues KeyValues::load(const std::string & path)
{
  std::ifstream is(path);
  if (!is) {
    throw Error("cannot open config file " + path);
  }
  return parse(is, path);
}

Binding bind(std::string key, double & field, std::string help)
{
  return custom(
    std::move(key), std::move(help), [&field](std::string_view v) { field = io::parse_double(v); },
    [&field] { return io::format_double(field); });
}

Binding bind(std::string key, int & field, std::string help)
{
  return custom(
    std::move(key), std::move(help),
    [&field](std::string_view v) {
      const auto x = io::parse_int(v);
      if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
        throw Error("integer out of range");
      }
      field = static_cast<int>(x);
    },
    [&field] { return std::to_string(field); });
}

Binding bind(std::string key, std::uint64_t & field, std::string help)
{
  return custom(
    std::move(key), std::move(help),
    [&field](std::string_view v) {
      const auto x = io::parse_int(v);
      if (x < 0) {
        throw Error("expected a non-negative integer");
      }
      field = static_cast<std::uint64_t>(x);
    },
    [&field] { return std::to_string(field); });
}

Binding bind(std::string key, bool & field, std::string help)
{
  return custom(
    std::move(key), std::move(help),
    [&field](std::string_view v) {
      if (v == "true" || v == "1") {
        field = true;
      } else if (v == "false" || v == "0") {
        field = false;
      } else {
        throw Error("expected true or false");
      }
    },
    [&field] { return std::string(field ? "true" : "false"); });
}

std::vector<int> parse_int_list(std::string_view text)
{
  std::vector<int> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = text.find(',', start);
    const auto token = trim(text.substr(start, comma == std::string_view::npos ? text.npos
                                                                                 : comma - start));
    const auto v = io::parse_int(token);
    if (v < 1 || v > 1 << 20) {
      throw Error("list entries must be positive integers");
    }
    out.push_back(static_cast<int>(v));
    if (comma == std::string_view::npos) {
      return out;
    }
    start = comma + 1;
  }
}

std::vector<Binding> env_bindings(env::EnvConfig & c)
{
  std::vector<Binding> b;
  b.push_back(bind("map.lane_width", c.map.lane_width, "lane width [m]"));
  b.push_back(bind("map.speed_limit", c.map.speed_limit, "v_max [m/s]"));
  b.push_back(bind("map.zone_half_size", c.map.zone_half_size, "intersection area half size [m]"));
  b.push_back(bind("map.arm_length", c.map.arm_length, "arm length from the center [m]"));
  b.push_back(bind("map.crosswalk_offset", c.map.crosswalk_offset, "crosswalk distance [m]"));
  b.push_back(bind("map.curb_overhang", c.map.curb_overhang, "crosswalk overhang [m]"));
  b.push_back(bind("vehicle.wheelbase", c.vehicle.wheelbase, "wheelbase l [m]"));
  b.push_back(bind("vehicle.delta_max", c.vehicle.delta_max, "steering limit [rad]"));
  b.push_back(bind("vehicle.v_cap", c.vehicle.v_cap, "action speed cap [m/s]"));
  b.push_back(bind("vehicle.yaw_rate_cap", c.vehicle.yaw_rate_cap, "yaw-rate cap [rad/s]"));
  b.push_back(bind("reward.alpha_safety", c.reward.alpha_safety, "safety weight"));
  b.push_back(bind("reward.alpha_effi", c.reward.alpha_effi, "efficiency weight"));
  b.push_back(bind("reward.alpha_dev", c.reward.alpha_dev, "deviation weight"));
  b.push_back(bind("reward.ttc_thre", c.reward.ttc_thre, "TTC saturation threshold [s]"));
  b.push_back(bind("reward.receding_ttc", c.reward.receding_ttc, "TTC of receding objects [s]"));
  b.push_back(bind("env.dt", c.dt, "control period [s]"));
  b.push_back(bind("env.timeout_steps", c.timeout_steps, "episode step limit"));
  b.push_back(bind("env.exit_margin", c.exit_margin, "exit distance past the area edge [m]"));
  b.push_back(bind("env.collision_radius", c.collision_radius, "collision radius [m]"));
  b.push_back(bind(
    "env.collision_radius_pedestrian", c.collision_radius_pedestrian,
    "collision radius against pedestrians [m]"));
  b.push_back(bind("env.off_route_distance", c.off_route_distance, "off-route limit [m]"));
  b.push_back(bind("env.ego_start_distance", c.ego_start_distance, "ego start before area [m]"));
  b.push_back(bind("env.ego_initial_speed", c.ego_initial_speed, "ego initial speed [m/s]"));
  b.push_back(custom(
    "env.ego_routes", "through | all",
    [&c](std::string_view v) {
      if (v == "through") {
        c.ego_routes = env::EgoRoutes::Through;
      } else if (v == "all") {
        c.ego_routes = env::EgoRoutes::All;
      } else {
        throw Error("expected through or all");
      }
    },
    [&c] { return std::string(c.ego_routes == env::EgoRoutes::All ? "all" : "through"); }));
  b.push_back(bind("traffic.reaction_gap", c.traffic.reaction_gap, "car-following gap [m]"));
  b.push_back(bind("traffic.stop_gap", c.traffic.stop_gap, "car-following stop gap [m]"));
  b.push_back(bind("traffic.accel", c.traffic.accel, "scripted acceleration [m/s^2]"));
  b.push_back(bind("traffic.decel", c.traffic.decel, "scripted deceleration [m/s^2]"));
  b.push_back(bind("traffic.enabled", c.traffic.enabled, "spawn scripted traffic"));
  return b;
}

std::vector<Binding> train_bindings(offline_rl::TrainConfig & t, env::EnvConfig & e)
{
  std::vector<Binding> b;
  b.push_back(bind("train.max_steps", t.max_steps, "gradient steps per run"));
  b.push_back(bind("train.eval_every", t.eval_every, "steps between evaluations"));
  b.push_back(bind("train.batch_size", t.batch_size, "minibatch size"));
  b.push_back(bind("train.policy_noise", t.policy_noise, "target noise, fraction of bound"));
  b.push_back(bind("train.noise_clip", t.noise_clip, "target noise clip, fraction of bound"));
  b.push_back(bind("train.policy_delay", t.policy_delay, "critic updates per actor update"));
  b.push_back(bind("train.tau", t.tau, "Polyak rate"));
  b.push_back(bind("train.alpha_td3bc", t.alpha_td3bc, "TD3+BC alpha"));
  b.push_back(bind("train.actor_lr", t.actor_adam.learning_rate, "actor learning rate"));
  b.push_back(bind("train.critic_lr", t.critic_adam.learning_rate, "critic learning rate"));
  b.push_back(bind("train.eval_episodes", t.eval_episodes, "episodes per evaluation"));
  b.push_back(custom(
    "train.hidden", "hidden layer widths",
    [&t](std::string_view v) { t.hidden = parse_int_list(v); },
    [&t] {
      std::string s;
      for (std::size_t i = 0; i < t.hidden.size(); ++i) {
        s += (i ? "," : "") + std::to_string(t.hidden[i]);
      }
      return s;
    }));
  b.push_back(custom(
    "gamma", "discount factor",
    [&t, &e](std::string_view v) {
      t.gamma = io::parse_double(v);
      e.reward.gamma = t.gamma;
    },
    [&t] { return io::format_double(t.gamma); }));
  return b;
}

std::vector<Binding> generate_bindings(dataset::GenerateConfig & c)
{
  std::vector<Binding> b;
  b.push_back(bind("data.episodes", c.episodes, "episodes to generate"));
  b.push_back(bind("data.speed_factor_min", c.speed_factor_min, "driver speed, fraction of v_max"));
  b.push_back(bind("data.speed_factor_max", c.speed_factor_max, "driver speed, fraction of v_max"));
  b.push_back(bind("data.lateral_bias_max", c.lateral_bias_max, "driver lateral bias [m]"));
  b.push_back(bind("data.yaw_rate_jitter", c.yaw_rate_jitter, "per-step yaw-rate noise std [rad/s]"));
  b.push_back(bind("data.speed_jitter", c.speed_jitter, "per-step speed noise std [m/s]"));
  b.push_back(bind("data.behavior_noise", c.behavior_noise, "per-episode driver variation"));
  b.push_back(
    bind("data.terminal_on_exit", c.terminal_on_exit, "exits end bootstrapping like collisions"));
  b.push_back(custom(
    "data.density", "low | middle | high | mix",
    [&c](std::string_view v) { c.density = dataset::parse_density_mix(v); },
    [&c] { return std::string(dataset::to_string(c.density)); }));
  return b;
}

void apply(const KeyValues & kv, const std::vector<Binding> & bindings)
{
  for (const auto & [key, value] : kv.values()) {
    const Binding * match = nullptr;
    for (const auto & b : bindings) {
      if (b.key == key) {
        match = &b;
        break;
      }
    }
    if (match == nullptr) {
      throw Error("unknown config key '" + key + "'");
    }
    try {
      match->set(value);
    } catch (const Error & e) {
      throw Error("config key '" + key + "': " + e.what());
    }
  }
}

std::string dump(const std::vector<Binding> & bindings)
{
  std::ostringstream os;
  for (const auto & b : bindings) {
    os << b.key << " = " << b.get() << '\n';
  }
  return os.str();
}

}  // namespace crossflow::config
