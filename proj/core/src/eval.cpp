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

#include "crossflow/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <utility>

#include "crossflow/binary_io.hpp"
#include "crossflow/dataset.hpp"
#include "crossflow/driving.hpp"

namespace crossflow::eval
{

namespace
{

env::DoneReason parse_done_reason(std::string_view s)
{
  for (auto r : {env::DoneReason::None, env::DoneReason::ExitedIntersectionArea,
         env::DoneReason::Collision, env::DoneReason::Timeout, env::DoneReason::OffRoute})
  {
    if (env::to_string(r) == s) {
      return r;
    }
  }
  throw Error("unknown outcome '" + std::string(s) + "'");
}

std::uint64_t parse_hex(std::string_view s)
{
  std::uint64_t v = 0;
  const auto * end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v, 16);
  if (res.ec != std::errc() || res.ptr != end || s.empty()) {
    throw Error("invalid hex value '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t parse_u64(std::string_view s)
{
  std::uint64_t v = 0;
  const auto * end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || s.empty()) {
    throw Error("invalid unsigned value '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line)
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

double quantile(const std::vector<double> & sorted, double p)
{
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

constexpr const char * kMetricsHeader =
  "agent,density,repeat,seed,scene_hash,outcome,steps,travel_time,safety,efficiency,"
  "initial_objects_in_zone";

void write_distribution(std::ostream & os, const std::optional<Distribution> & d)
{
  if (!d) {
    os << ",,,,,,,,";
    return;
  }
  for (double v : {d->min, d->q1, d->median, d->mean, d->q3, d->max, d->ci_low, d->ci_high}) {
    os << ',' << io::format_double(v);
  }
}

}  // namespace

double ConservativeBaseline::commanded_speed(
  const world::Observation & obs, const env::EnvConfig & cfg) const
{
  const auto & e = obs.ego;
  if (obs.mf_present) {
    const double d = std::hypot(obs.mf.x - e.x, obs.mf.y - e.y);
    if (d < mf_stop_distance) {
      return 0.0;
    }
  }
  for (auto area : {world::SurroundArea::LeftFront, world::SurroundArea::MiddleFront,
         world::SurroundArea::RightFront})
  {
    if (!obs.present(area)) {
      continue;
    }
    const auto & o = obs.slot(area);
    if (o.x == e.x && o.y == e.y) {
      return 0.0;
    }
    const auto rel = world::relative_kinematics(e, o);
    if (rel.approach_angle < kPi / 2.0 &&
        world::compute_ttc(rel, cfg.reward.receding_ttc) < cfg.reward.ttc_thre)
    {
      return 0.0;
    }
  }
  return cfg.map.speed_limit;
}

kinematics::ActionVector ConservativeBaseline::act(
  const world::Observation & obs, const env::Route & route, const env::EnvConfig & cfg) const
{
  const double target = commanded_speed(obs, cfg);
  const double v = env::rate_limited_speed(obs.ego.speed, target, accel, decel, cfg.dt);
  return env::follow_route(obs.ego, route, v, 0.0, cfg.vehicle);
}

AgentUnderTest AgentUnderTest::trained(std::string name, nn::Checkpoint ckpt)
{
  // Fails fast on a dimension mismatch.
  (void)offline_rl::checkpoint_policy(ckpt);
  AgentUnderTest a;
  a.name = std::move(name);
  a.kind = AgentKind::TrainedPolicy;
  a.checkpoint = std::move(ckpt);
  return a;
}

AgentUnderTest AgentUnderTest::baseline(std::string name)
{
  AgentUnderTest a;
  a.name = std::move(name);
  a.kind = AgentKind::ConservativeBaseline;
  return a;
}

offline_rl::Policy AgentUnderTest::policy(const env::EnvConfig & cfg) const
{
  if (kind == AgentKind::TrainedPolicy) {
    return offline_rl::checkpoint_policy(checkpoint);
  }
  return [cfg](const world::Observation & obs, const env::Environment & environment) {
    return ConservativeBaseline{}.act(obs, environment.ego_route(), cfg);
  };
}

std::uint64_t cell_seed(std::uint64_t master, env::Density density, int repeat)
{
  return derive_seed(
    master, static_cast<std::uint64_t>(density), static_cast<std::uint64_t>(repeat));
}

std::vector<EpisodeMetrics> run_matrix(
  std::span<const AgentUnderTest> agents, std::span<const env::Density> densities, int repeats,
  std::uint64_t seed, const env::EnvConfig & env_cfg, int threads)
{
  if (repeats < 1) {
    throw Error("run_matrix: repeats must be at least 1");
  }
  if (agents.empty() || densities.empty()) {
    throw Error("run_matrix: need at least one agent and one density");
  }
  env_cfg.validate();
  std::vector<offline_rl::Policy> policies;
  for (const auto & a : agents) {
    policies.push_back(a.policy(env_cfg));
  }

  const std::size_t per_agent = densities.size() * static_cast<std::size_t>(repeats);
  const std::size_t total = agents.size() * per_agent;
  std::vector<EpisodeMetrics> out(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&]() {
    env::Environment environment(env_cfg);
    for (;;) {
      const std::size_t job = next.fetch_add(1);
      if (job >= total) {
        return;
      }
      try {
        const std::size_t ai = job / per_agent;
        const std::size_t di = (job % per_agent) / static_cast<std::size_t>(repeats);
        const int rep = static_cast<int>(job % static_cast<std::size_t>(repeats));
        EpisodeMetrics m;
        m.agent = agents[ai].name;
        m.density = densities[di];
        m.repeat = rep;
        m.seed = cell_seed(seed, m.density, rep);
        const auto r = offline_rl::run_episode(environment, policies[ai], m.seed, m.density);
        m.scene_hash = r.scene_hash;
        m.outcome = r.outcome;
        m.steps = r.steps;
        m.travel_time = r.travel_time;
        m.safety = r.sum_safety / (3.0 * r.steps);
        m.efficiency = r.sum_effi / r.steps;
        m.initial_objects_in_zone = r.initial_objects_in_zone;
        out[job] = std::move(m);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
        next.store(total);
        return;
      }
    }
  };

  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(total)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) {
      pool.emplace_back(worker);
    }
    for (auto & t : pool) {
      t.join();
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
  return out;
}

Distribution describe(std::span<const double> values)
{
  if (values.empty()) {
    throw Error("describe: empty sample");
  }
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  Distribution d;
  d.count = static_cast<int>(s.size());
  d.min = s.front();
  d.max = s.back();
  d.q1 = quantile(s, 0.25);
  d.median = quantile(s, 0.5);
  d.q3 = quantile(s, 0.75);
  double sum = 0.0;
  for (double v : values) {
    sum += v;
  }
  const auto n = static_cast<double>(values.size());
  d.mean = sum / n;
  double half = 0.0;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) {
      ss += (v - d.mean) * (v - d.mean);
    }
    half = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  d.ci_low = d.mean - half;
  d.ci_high = d.mean + half;
  return d;
}

double percent_change(double value, double reference)
{
  if (reference == 0.0) {
    throw Error("percent_change: zero reference");
  }
  return 100.0 * (value - reference) / reference;
}

std::vector<CellSummary> summarize(
  std::span<const EpisodeMetrics> metrics, std::string_view baseline_agent)
{
  std::vector<std::string> agents;
  std::vector<env::Density> densities;
  std::map<std::pair<std::string, env::Density>, std::vector<const EpisodeMetrics *>> cells;
  for (const auto & m : metrics) {
    if (std::find(agents.begin(), agents.end(), m.agent) == agents.end()) {
      agents.push_back(m.agent);
    }
    if (std::find(densities.begin(), densities.end(), m.density) == densities.end()) {
      densities.push_back(m.density);
    }
    cells[{m.agent, m.density}].push_back(&m);
  }
  std::vector<CellSummary> out;
  std::map<env::Density, double> baseline_travel;
  for (const auto & agent : agents) {
    for (auto density : densities) {
      const auto it = cells.find({agent, density});
      if (it == cells.end()) {
        throw Error(
          "summarize: empty cell (" + agent + ", " + std::string(env::to_string(density)) + ")");
      }
      CellSummary c;
      c.agent = agent;
      c.density = density;
      std::vector<double> travel;
      std::vector<double> safety;
      std::vector<double> effi;
      for (const auto * m : it->second) {
        ++c.episodes;
        switch (m->outcome) {
          case env::DoneReason::ExitedIntersectionArea:
            ++c.completed;
            break;
          case env::DoneReason::Collision:
            ++c.collisions;
            break;
          case env::DoneReason::Timeout:
            ++c.timeouts;
            break;
          case env::DoneReason::OffRoute:
            ++c.off_route;
            break;
          case env::DoneReason::None:
            break;
        }
        if (m->outcome == env::DoneReason::ExitedIntersectionArea && m->travel_time) {
          travel.push_back(*m->travel_time);
        }
        safety.push_back(m->safety);
        effi.push_back(m->efficiency);
      }
      if (!travel.empty()) {
        c.travel_time = describe(travel);
      }
      c.safety = describe(safety);
      c.efficiency = describe(effi);
      if (agent == baseline_agent && c.travel_time) {
        baseline_travel[density] = c.travel_time->mean;
      }
      out.push_back(std::move(c));
    }
  }
  for (auto & c : out) {
    const auto b = baseline_travel.find(c.density);
    if (c.agent != baseline_agent && c.travel_time && b != baseline_travel.end()) {
      c.travel_change_pct = percent_change(c.travel_time->mean, b->second);
    }
  }
  return out;
}

void write_metrics_csv(std::ostream & os, std::span<const EpisodeMetrics> metrics)
{
  os << kMetricsHeader << '\n';
  for (const auto & m : metrics) {
    os << m.agent << ',' << env::to_string(m.density) << ',' << m.repeat << ',' << m.seed << ','
       << to_hex(m.scene_hash) << ',' << env::to_string(m.outcome) << ',' << m.steps << ',';
    if (m.travel_time) {
      os << io::format_double(*m.travel_time);
    }
    os << ',' << io::format_double(m.safety) << ',' << io::format_double(m.efficiency) << ','
       << m.initial_objects_in_zone << '\n';
  }
  if (!os) {
    throw Error("write_metrics_csv: write failed");
  }
}

std::vector<EpisodeMetrics> read_metrics_csv(std::istream & is)
{
  std::string line;
  if (!std::getline(is, line) || line != kMetricsHeader) {
    throw Error("metrics CSV: unexpected header");
  }
  std::vector<EpisodeMetrics> out;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto f = split(line);
    if (f.size() != 11) {
      throw Error("metrics CSV line " + std::to_string(line_no) + ": expected 11 fields");
    }
    try {
      EpisodeMetrics m;
      m.agent = std::string(f[0]);
      m.density = env::parse_density(f[1]);
      m.repeat = static_cast<int>(io::parse_int(f[2]));
      m.seed = parse_u64(f[3]);
      m.scene_hash = parse_hex(f[4]);
      m.outcome = parse_done_reason(f[5]);
      m.steps = static_cast<int>(io::parse_int(f[6]));
      if (!f[7].empty()) {
        m.travel_time = io::parse_double(f[7]);
      }
      m.safety = io::parse_double(f[8]);
      m.efficiency = io::parse_double(f[9]);
      m.initial_objects_in_zone = static_cast<int>(io::parse_int(f[10]));
      out.push_back(std::move(m));
    } catch (const Error & e) {
      throw Error("metrics CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_summary_csv(std::ostream & os, std::span<const CellSummary> cells)
{
  os << "agent,density,episodes,completed,collisions,timeouts,off_route";
  for (const char * metric : {"travel_time", "safety", "efficiency"}) {
    for (const char * stat : {"min", "q1", "median", "mean", "q3", "max", "ci_low", "ci_high"}) {
      os << ',' << metric << '_' << stat;
    }
  }
  os << ",travel_time_change_pct_vs_baseline\n";
  for (const auto & c : cells) {
    os << c.agent << ',' << env::to_string(c.density) << ',' << c.episodes << ',' << c.completed
       << ',' << c.collisions << ',' << c.timeouts << ',' << c.off_route;
    write_distribution(os, c.travel_time);
    write_distribution(os, c.safety);
    write_distribution(os, c.efficiency);
    os << ',';
    if (c.travel_change_pct) {
      os << io::format_double(*c.travel_change_pct);
    }
    os << '\n';
  }
  if (!os) {
    throw Error("write_summary_csv: write failed");
  }
}

}  // namespace crossflow::eval
