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

#include "crossflow/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "crossflow/binary_io.hpp"
#include "crossflow/driving.hpp"

namespace crossflow::dataset
{

namespace
{

constexpr world::SurroundArea kAreas[3] = {
  world::SurroundArea::LeftFront, world::SurroundArea::MiddleFront,
  world::SurroundArea::RightFront};

std::vector<std::string_view> split_commas(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

void write_log_csv(std::ostream & os, std::span<const RsuLogRecord> records)
{
  os << kLogHeader << '\n';
  std::string line;
  for (const auto & r : records) {
    line.clear();
    line += std::to_string(r.t);
    line += ',';
    line += std::to_string(r.track_id);
    line += ',';
    line += world::to_string(r.kind);
    for (double v : {r.x, r.y, r.heading, r.speed, r.v_lon, r.v_lat}) {
      line += ',';
      line += io::format_double(v);
    }
    line += '\n';
    os << line;
  }
  if (!os) {
    throw Error("write_log_csv: write failed");
  }
}

std::vector<RsuLogRecord> read_log_csv(std::istream & is)
{
  std::string line;
  if (!std::getline(is, line) || line != kLogHeader) {
    throw Error("RSU log: missing or unexpected header");
  }
  std::vector<RsuLogRecord> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto f = split_commas(line);
    if (f.size() != 9) {
      throw Error("RSU log line " + std::to_string(line_no) + ": expected 9 fields");
    }
    try {
      RsuLogRecord r;
      r.t = io::parse_int(f[0]);
      r.track_id = io::parse_int(f[1]);
      r.kind = world::parse_kind(f[2]);
      r.x = io::parse_double(f[3]);
      r.y = io::parse_double(f[4]);
      r.heading = io::parse_double(f[5]);
      r.speed = io::parse_double(f[6]);
      r.v_lon = io::parse_double(f[7]);
      r.v_lat = io::parse_double(f[8]);
      out.push_back(r);
    } catch (const Error & e) {
      throw Error("RSU log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

bool is_indicator_slot(int index)
{
  if (index >= 7 && index <= 9) {
    return true;
  }
  return index >= kEgoSlots && (index - kEgoSlots) % kAreaSlots == kAreaSlots - 1;
}

Features raw_features(const world::Observation & obs)
{
  Features f{};
  const auto & e = obs.ego;
  const double c = std::cos(e.heading);
  const double s = std::sin(e.heading);
  f[0] = e.x;
  f[1] = e.y;
  f[2] = c;
  f[3] = s;
  f[4] = e.speed;
  f[5] = e.v_lon;
  f[6] = e.v_lat;
  f[7 + static_cast<int>(e.kind)] = 1.0;
  f[10] = obs.lane_offset;
  const double evx = e.world_vx();
  const double evy = e.world_vy();
  for (int k = 0; k < 3; ++k) {
    const int base = kEgoSlots + kAreaSlots * k;
    if (!obs.present(kAreas[k])) {
      f[base] = world::kSentinelRange;
      continue;
    }
    const auto & o = obs.slot(kAreas[k]);
    const double dx = o.x - e.x;
    const double dy = o.y - e.y;
    const double dvx = o.world_vx() - evx;
    const double dvy = o.world_vy() - evy;
    f[base + 0] = dx * c + dy * s;
    f[base + 1] = -dx * s + dy * c;
    f[base + 2] = dvx * c + dvy * s;
    f[base + 3] = -dvx * s + dvy * c;
    f[base + 4] = 1.0;
  }
  return f;
}

std::array<RelativeSlot, 3> decode_relative(std::span<const double> raw)
{
  if (raw.size() != kObsDim) {
    throw Error("decode_relative: wrong feature width");
  }
  std::array<RelativeSlot, 3> out{};
  for (int k = 0; k < 3; ++k) {
    const std::size_t base = static_cast<std::size_t>(kEgoSlots + kAreaSlots * k);
    out[static_cast<std::size_t>(k)] = {
      raw[base], raw[base + 1], raw[base + 2], raw[base + 3], raw[base + 4] > 0.5};
  }
  return out;
}

world::Observation decode_observation(std::span<const double> raw)
{
  if (raw.size() != kObsDim) {
    throw Error("decode_observation: wrong feature width");
  }
  world::Observation obs;
  auto & e = obs.ego;
  e.x = raw[0];
  e.y = raw[1];
  e.heading = std::atan2(raw[3], raw[2]);
  e.speed = raw[4];
  e.v_lon = raw[5];
  e.v_lat = raw[6];
  const auto kind_it = std::max_element(raw.begin() + 7, raw.begin() + 10);
  e.kind = static_cast<world::ParticipantKind>(std::distance(raw.begin() + 7, kind_it));
  obs.lane_offset = raw[10];

  const double c = raw[2];
  const double s = raw[3];
  const double evx = e.world_vx();
  const double evy = e.world_vy();
  const auto rel = decode_relative(raw);
  world::ParticipantState * slots[3] = {&obs.lf, &obs.mf, &obs.rf};
  bool * flags[3] = {&obs.lf_present, &obs.mf_present, &obs.rf_present};
  for (std::size_t k = 0; k < 3; ++k) {
    if (!rel[k].present) {
      *slots[k] = world::absent_sentinel(e);
      *flags[k] = false;
      continue;
    }
    const double x = e.x + rel[k].lon * c - rel[k].lat * s;
    const double y = e.y + rel[k].lon * s + rel[k].lat * c;
    const double vx = evx + rel[k].v_lon * c - rel[k].v_lat * s;
    const double vy = evy + rel[k].v_lon * s + rel[k].v_lat * c;
    const double heading = (vx == 0.0 && vy == 0.0) ? e.heading : std::atan2(vy, vx);
    *slots[k] = world::make_state(world::ParticipantKind::Vehicle, x, y, heading, vx, vy);
    *flags[k] = true;
  }
  return obs;
}

NormalizationStats NormalizationStats::identity(int dim)
{
  return {Vector::Zero(dim), Vector::Ones(dim)};
}

Vector normalize_features(std::span<const double> raw, const NormalizationStats & stats)
{
  if (static_cast<int>(raw.size()) != stats.dim() || stats.std.size() != stats.mean.size()) {
    throw Error(
      "encode_observation: stats have dimension " + std::to_string(stats.dim()) +
      ", features have " + std::to_string(raw.size()));
  }
  Vector v(stats.dim());
  for (int i = 0; i < stats.dim(); ++i) {
    v(i) = (raw[static_cast<std::size_t>(i)] - stats.mean(i)) / stats.std(i);
  }
  return v;
}

Vector encode_observation(const world::Observation & obs, const NormalizationStats & stats)
{
  const Features f = raw_features(obs);
  return normalize_features(f, stats);
}

std::array<double, kActionDim> action_array(const kinematics::ActionVector & a)
{
  return {a.vx, a.vy, a.yaw_rate};
}

void write_dataset(std::ostream & os, std::span<const Transition> transitions)
{
  const std::size_t n = transitions.size();
  io::write_magic(os, kDatasetMagic);
  io::write_u32(os, kEncodingVersion);
  io::write_u32(os, kObsDim);
  io::write_u32(os, kActionDim);
  io::write_u64(os, n);
  for (const auto & t : transitions) {
    io::write_f64s(os, t.obs);
  }
  for (const auto & t : transitions) {
    io::write_f64s(os, action_array(t.action));
  }
  for (const auto & t : transitions) {
    io::write_f64(os, t.reward);
  }
  for (const auto & t : transitions) {
    io::write_f64s(os, t.next_obs);
  }
  for (const auto & t : transitions) {
    io::write_f64(os, t.done ? 1.0 : 0.0);
  }
  if (!os) {
    throw Error("write_dataset: write failed");
  }
}

std::vector<Transition> read_dataset(std::istream & is)
{
  io::expect_magic(is, kDatasetMagic, "dataset");
  const auto version = io::read_u32(is);
  if (version != kEncodingVersion) {
    throw Error("dataset: unsupported encoding version " + std::to_string(version));
  }
  const auto obs_dim = io::read_u32(is);
  const auto act_dim = io::read_u32(is);
  if (obs_dim != kObsDim || act_dim != kActionDim) {
    throw Error(
      "dataset: dimension mismatch (obs " + std::to_string(obs_dim) + ", action " +
      std::to_string(act_dim) + ")");
  }
  const auto n = io::read_u64(is);
  constexpr std::uint64_t kMaxTransitions = 1ULL << 32;
  if (n > kMaxTransitions) {
    throw Error("dataset: implausible transition count");
  }
  std::vector<Transition> out(static_cast<std::size_t>(n));
  for (auto & t : out) {
    io::read_f64s(is, t.obs);
  }
  for (auto & t : out) {
    std::array<double, kActionDim> a{};
    io::read_f64s(is, a);
    t.action = {a[0], a[1], a[2]};
  }
  for (auto & t : out) {
    t.reward = io::read_f64(is);
  }
  for (auto & t : out) {
    io::read_f64s(is, t.next_obs);
  }
  for (auto & t : out) {
    const double d = io::read_f64(is);
    if (d != 0.0 && d != 1.0) {
      throw Error("dataset: done column must hold 0 or 1");
    }
    t.done = d == 1.0;
  }
  io::expect_eof(is, "dataset");
  return out;
}

void save_dataset(const std::string & path, std::span<const Transition> transitions)
{
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    throw Error("cannot write dataset " + path);
  }
  write_dataset(os, transitions);
}

std::vector<Transition> load_dataset(const std::string & path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw Error("cannot open dataset " + path);
  }
  try {
    return read_dataset(is);
  } catch (const Error & e) {
    throw Error(path + ": " + e.what());
  }
}

NormalizationStats compute_stats(std::span<const Transition> transitions)
{
  NormalizationStats st = NormalizationStats::identity(kObsDim);
  if (transitions.empty()) {
    return st;
  }
  const double n = static_cast<double>(transitions.size());
  for (int i = 0; i < kObsDim; ++i) {
    if (is_indicator_slot(i)) {
      continue;
    }
    const auto idx = static_cast<std::size_t>(i);
    double sum = 0.0;
    for (const auto & t : transitions) {
      sum += t.obs[idx];
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto & t : transitions) {
      const double d = t.obs[idx] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / n);
    st.mean(i) = mean;
    // Constant columns are centered only.
    st.std(i) = sd > 1e-12 ? sd : 1.0;
  }
  return st;
}

ReplayBuffer::ReplayBuffer(std::span<const Transition> transitions)
: stats_(compute_stats(transitions))
{
  const auto n = static_cast<Eigen::Index>(transitions.size());
  obs_.resize(kObsDim, n);
  next_obs_.resize(kObsDim, n);
  action_.resize(kActionDim, n);
  reward_.resize(n);
  done_.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto & t = transitions[static_cast<std::size_t>(j)];
    obs_.col(j) = normalize_features(t.obs, stats_);
    next_obs_.col(j) = normalize_features(t.next_obs, stats_);
    action_.col(j) << t.action.vx, t.action.vy, t.action.yaw_rate;
    reward_(j) = t.reward;
    done_(j) = t.done ? 1.0 : 0.0;
  }
}

Batch ReplayBuffer::gather(std::span<const std::size_t> indices) const
{
  const auto b = static_cast<Eigen::Index>(indices.size());
  Batch batch;
  batch.obs.resize(kObsDim, b);
  batch.next_obs.resize(kObsDim, b);
  batch.action.resize(kActionDim, b);
  batch.reward.resize(b);
  batch.done.resize(b);
  batch.indices.assign(indices.begin(), indices.end());
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto i = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(j)]);
    if (i < 0 || i >= reward_.size()) {
      throw Error("ReplayBuffer::gather: index out of range");
    }
    batch.obs.col(j) = obs_.col(i);
    batch.next_obs.col(j) = next_obs_.col(i);
    batch.action.col(j) = action_.col(i);
    batch.reward(j) = reward_(i);
    batch.done(j) = done_(i);
  }
  return batch;
}

Batch sample_batch(const ReplayBuffer & buffer, std::size_t batch_size, Rng & rng)
{
  if (buffer.empty()) {
    throw Error("sample_batch: empty replay buffer");
  }
  std::vector<std::size_t> idx(batch_size);
  for (auto & i : idx) {
    i = static_cast<std::size_t>(rng.below(buffer.size()));
  }
  return buffer.gather(idx);
}

DensityMix parse_density_mix(std::string_view name)
{
  if (name == "mix") {
    return DensityMix::Mix;
  }
  switch (env::parse_density(name)) {
    case env::Density::Low:
      return DensityMix::Low;
    case env::Density::Middle:
      return DensityMix::Middle;
    case env::Density::High:
      return DensityMix::High;
  }
  return DensityMix::Mix;
}

std::string_view to_string(DensityMix mix)
{
  switch (mix) {
    case DensityMix::Low:
      return "low";
    case DensityMix::Middle:
      return "middle";
    case DensityMix::High:
      return "high";
    case DensityMix::Mix:
      return "mix";
  }
  return "unknown";
}

kinematics::ActionVector HumanDriver::act(
  const world::Observation & obs, const env::Route & route, const env::EnvConfig & cfg) const
{
  const auto & e = obs.ego;
  double target = desired_speed;
  const double c = std::cos(e.heading);
  const double s = std::sin(e.heading);
  if (obs.mf_present) {
    const auto & m = obs.mf;
    const double d = std::hypot(m.x - e.x, m.y - e.y);
    const double room = d - stop_distance;
    const double lead = std::max(0.0, m.world_vx() * c + m.world_vy() * s);
    target = std::min(target, room > 0.0 ? lead + std::sqrt(2.0 * comfort_decel * room) : 0.0);
  }
  for (auto area : {world::SurroundArea::LeftFront, world::SurroundArea::RightFront}) {
    if (!obs.present(area)) {
      continue;
    }
    const auto & o = obs.slot(area);
    const double lat = -(o.x - e.x) * s + (o.y - e.y) * c;
    if (std::abs(lat) > 6.0 || (o.x == e.x && o.y == e.y)) {
      continue;
    }
    const auto rel = world::relative_kinematics(e, o);
    if (rel.approach_angle < kPi / 2.0 && world::compute_ttc(rel) < crossing_ttc) {
      target = std::min(target, 0.3 * desired_speed);
    }
  }
  const double v = env::rate_limited_speed(e.speed, target, accel, decel, cfg.dt);
  return env::follow_route(e, route, v, lateral_bias, cfg.vehicle);
}

GeneratedData generate_dataset(const GenerateConfig & cfg)
{
  if (cfg.episodes < 1) {
    throw Error("generate_dataset: episodes must be at least 1");
  }
  if (!(cfg.yaw_rate_jitter >= 0.0) || !(cfg.speed_jitter >= 0.0)) {
    throw Error("generate_dataset: jitter must be non-negative");
  }
  GeneratedData out;
  out.episodes = cfg.episodes;
  env::Environment environment(cfg.env);
  Rng rng(derive_seed(cfg.seed, 0xda7a));
  const double v_max = cfg.env.map.speed_limit;
  constexpr std::int64_t kTrackStride = 10000;

  std::int64_t t = 0;
  auto log_scene = [&](std::int64_t id_base) {
    const auto & st = environment.state();
    const auto & e = st.ego;
    out.log.push_back({t, id_base, e.kind, e.x, e.y, e.heading, e.speed, e.v_lon, e.v_lat});
    for (const auto & p : st.participants) {
      if (!p.active) {
        continue;
      }
      const auto & q = p.state;
      out.log.push_back(
        {t, id_base + p.track_id, q.kind, q.x, q.y, q.heading, q.speed, q.v_lon, q.v_lat});
    }
  };

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    env::Density density = env::Density::Low;
    switch (cfg.density) {
      case DensityMix::Low:
        density = env::Density::Low;
        break;
      case DensityMix::Middle:
        density = env::Density::Middle;
        break;
      case DensityMix::High:
        density = env::Density::High;
        break;
      case DensityMix::Mix:
        density = static_cast<env::Density>(rng.below(3));
        break;
    }
    HumanDriver driver;
    if (cfg.behavior_noise) {
      driver.desired_speed = v_max * rng.uniform(cfg.speed_factor_min, cfg.speed_factor_max);
      driver.lateral_bias = rng.uniform(-cfg.lateral_bias_max, cfg.lateral_bias_max);
    } else {
      driver.desired_speed = v_max;
      driver.lateral_bias = 0.0;
    }
    const auto ep_u = static_cast<std::uint64_t>(ep);
    const std::int64_t id_base = kTrackStride * static_cast<std::int64_t>(ep);
    world::Observation obs = environment.reset(derive_seed(cfg.seed, ep_u, 1), density);
    Rng jitter(derive_seed(cfg.seed, ep_u, 2));
    log_scene(id_base);
    for (;;) {
      auto a = driver.act(obs, environment.ego_route(), cfg.env);
      if (cfg.behavior_noise) {
        const double h = obs.ego.heading;
        const double dv = cfg.speed_jitter * jitter.normal();
        a.vx += dv * std::cos(h);
        a.vy += dv * std::sin(h);
        a.yaw_rate += cfg.yaw_rate_jitter * jitter.normal();
      }
      const auto res = environment.step(a);
      Transition tr;
      tr.obs = raw_features(obs);
      tr.action = res.executed_action;
      tr.reward = res.reward_total;
      tr.next_obs = raw_features(res.observation);
      tr.done = res.done && (res.done_reason == env::DoneReason::Collision ||
                             (cfg.terminal_on_exit &&
                               res.done_reason == env::DoneReason::ExitedIntersectionArea));
      out.transitions.push_back(tr);
      ++t;
      log_scene(id_base);
      obs = res.observation;
      if (res.done) {
        break;
      }
    }
    ++t;
  }
  return out;
}

}  // namespace crossflow::dataset
