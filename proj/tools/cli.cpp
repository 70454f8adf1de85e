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

#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "crossflow/binary_io.hpp"
#include "crossflow/config.hpp"
#include "crossflow/dataset.hpp"
#include "crossflow/eval.hpp"
#include "crossflow/nn.hpp"
#include "crossflow/offline_rl.hpp"
#include "crossflow/svg.hpp"

namespace crossflow::cli
{

namespace
{

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char * kVersion = "0.1.0";

int default_threads()
{
  return static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
}

/// Every tunable of the pipeline; one config file serves all subcommands.
struct Settings
{
  dataset::GenerateConfig gen;
  offline_rl::TrainConfig train;
  int repeats = 5;

  env::EnvConfig & env() { return gen.env; }

  std::vector<config::Binding> bindings()
  {
    auto b = config::env_bindings(gen.env);
    for (auto & x : config::train_bindings(train, gen.env)) {
      b.push_back(std::move(x));
    }
    for (auto & x : config::generate_bindings(gen)) {
      b.push_back(std::move(x));
    }
    b.push_back(config::bind("eval.repeats", repeats, "episodes per (agent, density) cell"));
    return b;
  }
};

struct Common
{
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out = "runs";
  int threads = default_threads();
};

void add_common(CLI::App & cmd, Common & c)
{
  cmd.add_option("--config", c.config_path, "Flat key = value config file; flags override it")
    ->check(CLI::ExistingFile);
  cmd.add_option("--seed", c.seed, "Master seed");
  cmd.add_option("--out", c.out, "Parent directory of the run-stamped output directory");
  cmd.add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
}

void load_config(const Common & c, Settings & s)
{
  if (!c.config_path.empty()) {
    config::apply(config::KeyValues::load(c.config_path), s.bindings());
  }
}

/// Stages outputs in a sibling temporary directory and publishes them with a
/// rename, so a failed command leaves nothing behind.
class Staging
{
public:
  Staging(const fs::path & parent, const std::string & name)
  : final_(parent / name), tmp_(parent / ("." + name + ".partial"))
  {
    fs::create_directories(parent);
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
  }
  Staging(const Staging &) = delete;
  Staging & operator=(const Staging &) = delete;
  ~Staging()
  {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(tmp_, ec);
    }
  }

  fs::path path(const std::string & rel) const { return tmp_ / rel; }
  const fs::path & final_path() const { return final_; }

  fs::path commit()
  {
    fs::remove_all(final_);
    fs::rename(tmp_, final_);
    committed_ = true;
    return final_;
  }

private:
  fs::path final_;
  fs::path tmp_;
  bool committed_ = false;
};

std::string stamp(const std::string & command, const json & identity)
{
  Fnv1a h;
  h.update(command);
  h.update(identity.dump());
  return command + "-" + to_hex(h.digest()).substr(0, 12);
}

void write_text(const fs::path & path, const std::string & text)
{
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << text;
  if (!os) {
    throw Error("cannot write " + path.string());
  }
}

json config_json(Settings & s)
{
  json j = json::object();
  for (const auto & b : s.bindings()) {
    j[b.key] = b.get();
  }
  return j;
}

json input_entry(const std::string & path)
{
  return {{"path", path}, {"fnv1a64", to_hex(io::hash_file(path))}};
}

/// Hashes every regular file under the staging directory.
json output_entries(const Staging & st)
{
  const fs::path root = st.path("");
  std::vector<std::string> files;
  for (const auto & e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json") {
      files.push_back(fs::relative(e.path(), root).generic_string());
    }
  }
  std::sort(files.begin(), files.end());
  json arr = json::array();
  for (const auto & f : files) {
    arr.push_back({{"file", f}, {"fnv1a64", to_hex(io::hash_file((root / f).string()))}});
  }
  return arr;
}

void write_manifest(const Staging & st, json manifest)
{
  manifest["outputs"] = output_entries(st);
  write_text(st.path("manifest.json"), manifest.dump(2) + "\n");
}

json manifest_head(const std::string & command, const Common & c, Settings & s)
{
  return {{"tool", "crossflow"}, {"version", kVersion}, {"command", command},
    {"seed", c.seed}, {"config", config_json(s)}};
}

// ---------------------------------------------------------------------------
// plots

svg::Box to_box(const eval::Distribution & d)
{
  return {d.min, d.q1, d.median, d.mean, d.q3, d.max};
}

void render_eval_plots(const fs::path & dir, const std::vector<eval::CellSummary> & cells)
{
  fs::create_directories(dir);
  std::vector<std::string> agents;
  std::vector<env::Density> densities;
  for (const auto & c : cells) {
    if (std::find(agents.begin(), agents.end(), c.agent) == agents.end()) {
      agents.push_back(c.agent);
    }
    if (std::find(densities.begin(), densities.end(), c.density) == densities.end()) {
      densities.push_back(c.density);
    }
  }
  auto find = [&](const std::string & a, env::Density d) -> const eval::CellSummary & {
    for (const auto & c : cells) {
      if (c.agent == a && c.density == d) {
        return c;
      }
    }
    throw Error("missing summary cell");
  };
  struct Metric
  {
    const char * file;
    const char * title;
    const char * unit;
    std::function<std::optional<eval::Distribution>(const eval::CellSummary &)> get;
  };
  const Metric metrics[] = {
    {"travel_time_box.svg", "Travel time inside the intersection area", "seconds",
     [](const eval::CellSummary & c) { return c.travel_time; }},
    {"safety_box.svg", "Normalized safety reward", "r_safety / 3",
     [](const eval::CellSummary & c) { return std::optional(c.safety); }},
    {"efficiency_box.svg", "Normalized efficiency reward", "r_effi",
     [](const eval::CellSummary & c) { return std::optional(c.efficiency); }},
  };
  for (const auto & m : metrics) {
    std::vector<svg::Group<svg::Box>> groups;
    for (auto d : densities) {
      svg::Group<svg::Box> g{std::string(env::to_string(d)), {}};
      for (const auto & a : agents) {
        const auto dist = m.get(find(a, d));
        g.values.push_back(dist ? std::optional(to_box(*dist)) : std::nullopt);
      }
      groups.push_back(std::move(g));
    }
    write_text(dir / m.file, svg::box_plot({m.title, m.unit, agents}, groups));
  }
  std::vector<svg::Group<double>> bars;
  for (auto d : densities) {
    svg::Group<double> g{std::string(env::to_string(d)), {}};
    for (const auto & a : agents) {
      const auto & c = find(a, d);
      g.values.push_back(c.travel_time ? std::optional(c.travel_time->mean) : std::nullopt);
    }
    bars.push_back(std::move(g));
  }
  write_text(dir / "travel_time_mean_bar.svg",
    svg::bar_chart({"Mean travel time (completed episodes)", "seconds", agents}, bars));
}

svg::LineSeries curve_series(const std::string & label, const offline_rl::AggregateCurve & agg)
{
  svg::LineSeries s;
  s.label = label;
  for (const auto & p : agg.points) {
    s.x.push_back(p.step);
    s.y.push_back(p.mean);
    if (agg.has_ci) {
      s.lo.push_back(p.ci_low);
      s.hi.push_back(p.ci_high);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// gen-data

struct GenArgs
{
  Common common;
  int episodes = dataset::GenerateConfig{}.episodes;
  std::string density = "mix";
};

int cmd_gen_data(CLI::App & cmd, GenArgs & a, std::ostream & out)
{
  Settings s;
  load_config(a.common, s);
  if (cmd.count("--episodes")) {
    s.gen.episodes = a.episodes;
  }
  if (cmd.count("--density")) {
    s.gen.density = dataset::parse_density_mix(a.density);
  }
  s.gen.seed = a.common.seed;
  if (s.gen.episodes < 1) {
    throw Error("episodes must be at least 1");
  }
  s.env().validate();

  json head = manifest_head("gen-data", a.common, s);
  Staging st(a.common.out, stamp("gen-data", head));
  const auto data = dataset::generate_dataset(s.gen);
  {
    std::ofstream os(st.path("log.csv"), std::ios::binary);
    dataset::write_log_csv(os, data.log);
  }
  dataset::save_dataset(st.path("dataset.cfds").string(), data.transitions);

  const auto back = dataset::load_dataset(st.path("dataset.cfds").string());
  std::ifstream log_in(st.path("log.csv"), std::ios::binary);
  const auto log_back = dataset::read_log_csv(log_in);
  if (back.size() != data.transitions.size() || log_back.size() != data.log.size()) {
    throw Error("gen-data: written files failed read-back validation");
  }
  head["episodes"] = data.episodes;
  head["transitions"] = data.transitions.size();
  head["log_records"] = data.log.size();
  write_manifest(st, head);
  const auto dir = st.commit();
  out << "transitions: " << data.transitions.size() << "\n";
  out << "output: " << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs
{
  Common common;
  std::string dataset_path;
  std::string algo = "td3+bc";
  int seeds = 10;
  int max_steps = offline_rl::TrainConfig{}.max_steps;
  int eval_every = offline_rl::TrainConfig{}.eval_every;
};

int cmd_train(CLI::App & cmd, TrainArgs & a, std::ostream & out, std::ostream & err)
{
  Settings s;
  load_config(a.common, s);
  const auto algorithm = offline_rl::parse_algorithm(a.algo);
  if (cmd.count("--max-steps")) {
    s.train.max_steps = a.max_steps;
  }
  if (cmd.count("--eval-every")) {
    s.train.eval_every = a.eval_every;
  }
  s.train.seeds = offline_rl::derive_run_seeds(a.common.seed, a.seeds);
  s.train.validate();
  s.env().validate();

  const auto transitions = dataset::load_dataset(a.dataset_path);
  if (transitions.empty()) {
    throw Error(a.dataset_path + ": dataset holds no transitions");
  }
  const dataset::ReplayBuffer buffer(transitions);

  json head = manifest_head("train", a.common, s);
  head["algorithm"] = std::string(offline_rl::to_string(algorithm));
  head["inputs"] = json::array({input_entry(a.dataset_path)});
  json seeds = json::array();
  for (auto sd : s.train.seeds) {
    seeds.push_back(sd);
  }
  head["run_seeds"] = seeds;
  Staging st(a.common.out, stamp("train", head));

  const std::size_t n = s.train.seeds.size();
  std::vector<offline_rl::TrainRun> runs(n);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  std::exception_ptr failure;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) {
        return;
      }
      try {
        runs[i] = offline_rl::train(algorithm, buffer, s.train, s.env(), s.train.seeds[i],
          [&, i](int step, double score) {
            std::lock_guard lock(log_mutex);
            err << "[" << offline_rl::to_string(algorithm) << " run " << i << "] step " << step
                << " normalized_reward " << io::format_double(score) << "\n";
          });
      } catch (...) {
        std::lock_guard lock(log_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
        next.store(n);
        return;
      }
    }
  };
  const int t = std::min<int>(a.common.threads, static_cast<int>(n));
  if (t <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < t; ++k) {
      pool.emplace_back(worker);
    }
    for (auto & th : pool) {
      th.join();
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }

  json run_list = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const std::string curve = "curve_" + std::to_string(i) + ".csv";
    const std::string actor = "actor_" + std::to_string(i) + ".cfnn";
    {
      std::ofstream os(st.path(curve), std::ios::binary);
      offline_rl::write_curve_csv(os, runs[i].curve);
    }
    nn::save_checkpoint(st.path(actor).string(), runs[i].actor);
    std::ifstream is(st.path(curve), std::ios::binary);
    const auto back = offline_rl::read_curve_csv(is);
    const auto ck = nn::load_checkpoint(st.path(actor).string());
    if (back.size() != runs[i].curve.size() ||
        static_cast<int>(back.size()) != s.train.curve_length() ||
        !ck.net.same_architecture(runs[i].actor.net))
    {
      throw Error("train: written run files failed read-back validation");
    }
    run_list.push_back({{"index", i}, {"seed", runs[i].seed}, {"curve", curve},
      {"actor", actor},
      {"final_normalized_reward", runs[i].curve.back().normalized_reward}});
  }
  const auto agg = offline_rl::aggregate_runs(runs);
  {
    std::ofstream os(st.path("aggregate.csv"), std::ios::binary);
    offline_rl::write_aggregate_csv(os, agg);
  }
  write_text(st.path("curve.svg"),
    svg::line_plot("Offline training (" + std::string(offline_rl::to_string(algorithm)) + ")",
      "gradient step", "normalized reward",
      {curve_series(std::string(offline_rl::to_string(algorithm)), agg)}));
  head["runs"] = run_list;
  write_manifest(st, head);
  const auto dir = st.commit();
  out << "final mean normalized reward: " << io::format_double(agg.points.back().mean) << "\n";
  out << "output: " << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs
{
  Common common;
  std::string td3bc_path;
  std::string bc_path;
  int repeats = 5;
  std::string density = "mix";
};

std::vector<env::Density> densities_for(const std::string & name)
{
  if (name == "mix") {
    return {env::Density::Low, env::Density::Middle, env::Density::High};
  }
  return {env::parse_density(name)};
}

void check_paired(const std::vector<eval::EpisodeMetrics> & metrics)
{
  std::map<std::pair<env::Density, int>, std::uint64_t> seen;
  for (const auto & m : metrics) {
    const auto [it, inserted] = seen.emplace(std::pair{m.density, m.repeat}, m.scene_hash);
    if (!inserted && it->second != m.scene_hash) {
      throw Error("eval: agents did not face identical scenes");
    }
  }
}

int cmd_eval(CLI::App & cmd, EvalArgs & a, std::ostream & out, std::ostream & err)
{
  Settings s;
  load_config(a.common, s);
  if (cmd.count("--repeats")) {
    s.repeats = a.repeats;
  }
  if (s.repeats < 1) {
    throw Error("repeats must be at least 1");
  }
  s.env().validate();
  const auto densities = densities_for(a.density);
  std::vector<eval::AgentUnderTest> agents;
  agents.push_back(eval::AgentUnderTest::trained("td3+bc", nn::load_checkpoint(a.td3bc_path)));
  agents.push_back(eval::AgentUnderTest::trained("bc", nn::load_checkpoint(a.bc_path)));
  agents.push_back(eval::AgentUnderTest::baseline("baseline"));

  json head = manifest_head("eval", a.common, s);
  head["density"] = a.density;
  head["inputs"] = json::array({input_entry(a.td3bc_path), input_entry(a.bc_path)});
  Staging st(a.common.out, stamp("eval", head));

  err << "running " << agents.size() * densities.size() * static_cast<std::size_t>(s.repeats)
      << " episodes\n";
  const auto metrics =
    eval::run_matrix(agents, densities, s.repeats, a.common.seed, s.env(), a.common.threads);
  check_paired(metrics);
  const auto cells = eval::summarize(metrics, "baseline");
  {
    std::ofstream os(st.path("metrics.csv"), std::ios::binary);
    eval::write_metrics_csv(os, metrics);
  }
  {
    std::ofstream os(st.path("summary.csv"), std::ios::binary);
    eval::write_summary_csv(os, cells);
  }
  render_eval_plots(st.path("plots"), cells);
  std::ifstream is(st.path("metrics.csv"), std::ios::binary);
  if (eval::read_metrics_csv(is).size() != metrics.size()) {
    throw Error("eval: metrics.csv failed read-back validation");
  }
  head["episodes"] = metrics.size();
  head["paired_scenes"] = true;
  write_manifest(st, head);
  const auto dir = st.commit();
  for (const auto & c : cells) {
    out << c.agent << " " << env::to_string(c.density) << ": completed " << c.completed << "/"
        << c.episodes;
    if (c.travel_time) {
      out << ", mean travel time " << io::format_double(c.travel_time->mean) << " s";
    }
    if (c.travel_change_pct) {
      out << " (" << io::format_double(*c.travel_change_pct) << "% vs baseline)";
    }
    out << "\n";
  }
  out << "output: " << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs
{
  Common common;
  std::string metrics_path;
  std::vector<std::string> curves;
};

int cmd_report(ReportArgs & a, std::ostream & out)
{
  std::ifstream is(a.metrics_path, std::ios::binary);
  if (!is) {
    throw Error("cannot open " + a.metrics_path);
  }
  const auto metrics = eval::read_metrics_csv(is);
  const auto cells = eval::summarize(metrics, "baseline");
  std::vector<svg::LineSeries> series;
  for (const auto & path : a.curves) {
    std::ifstream cs(path, std::ios::binary);
    if (!cs) {
      throw Error("cannot open " + path);
    }
    const fs::path p(path);
    const std::string label = p.parent_path().filename().string();
    series.push_back(curve_series(label.empty() ? p.stem().string() : label,
      offline_rl::read_aggregate_csv(cs)));
  }

  json head = {{"tool", "crossflow"}, {"version", kVersion}, {"command", "report"}};
  json inputs = json::array({input_entry(a.metrics_path)});
  for (const auto & c : a.curves) {
    inputs.push_back(input_entry(c));
  }
  head["inputs"] = inputs;
  Staging st(a.common.out, stamp("report", head));
  {
    std::ofstream os(st.path("summary.csv"), std::ios::binary);
    eval::write_summary_csv(os, cells);
  }
  render_eval_plots(st.path("plots"), cells);
  if (!series.empty()) {
    write_text(st.path("plots/training_curves.svg"),
      svg::line_plot("Offline training", "gradient step", "normalized reward", series));
  }
  write_manifest(st, head);
  out << "output: " << st.commit().string() << "\n";
  return 0;
}

}  // namespace

int run(int argc, const char * const * argv, std::ostream & out, std::ostream & err)
{
  CLI::App app{"crossflow: offline RL pipeline for an RSU-monitored unsignalized intersection"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  GenArgs gen;
  auto * gen_cmd = app.add_subcommand("gen-data", "Generate the RSU log and the offline dataset");
  add_common(*gen_cmd, gen.common);
  gen_cmd->add_option("--episodes", gen.episodes, "Episodes to simulate")
    ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--density", gen.density, "Traffic density")
    ->check(CLI::IsMember({"low", "middle", "high", "mix"}));

  TrainArgs train;
  auto * train_cmd = app.add_subcommand("train", "Train offline agents over several seeds");
  add_common(*train_cmd, train.common);
  train_cmd->add_option("--dataset", train.dataset_path, "CFDS1 dataset file")
    ->required()
    ->check(CLI::ExistingFile);
  train_cmd->add_option("--algo", train.algo, "Algorithm")
    ->check(CLI::IsMember({"bc", "td3", "td3+bc"}));
  train_cmd->add_option("--seeds", train.seeds, "Number of independent runs")
    ->check(CLI::PositiveNumber);
  train_cmd->add_option("--max-steps", train.max_steps, "Gradient steps per run")
    ->check(CLI::PositiveNumber);
  train_cmd->add_option("--eval-every", train.eval_every, "Steps between evaluations")
    ->check(CLI::PositiveNumber);

  EvalArgs ev;
  auto * eval_cmd =
    app.add_subcommand("eval", "Compare trained agents with the conservative baseline");
  add_common(*eval_cmd, ev.common);
  eval_cmd->add_option("--td3bc-checkpoint", ev.td3bc_path, "TD3+BC actor (CFNN1)")
    ->required()
    ->check(CLI::ExistingFile);
  eval_cmd->add_option("--bc-checkpoint", ev.bc_path, "BC actor (CFNN1)")
    ->required()
    ->check(CLI::ExistingFile);
  eval_cmd->add_option("--repeats", ev.repeats, "Episodes per (agent, density) cell")
    ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--density", ev.density, "Density bucket; mix runs all three")
    ->check(CLI::IsMember({"low", "middle", "high", "mix"}));

  ReportArgs rep;
  auto * report_cmd =
    app.add_subcommand("report", "Re-render summary and plots from existing CSV files");
  add_common(*report_cmd, rep.common);
  report_cmd->add_option("--metrics", rep.metrics_path, "metrics.csv from eval")
    ->required()
    ->check(CLI::ExistingFile);
  report_cmd->add_option("--curve", rep.curves, "aggregate.csv from train (repeatable)")
    ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  try {
    if (gen_cmd->parsed()) {
      return cmd_gen_data(*gen_cmd, gen, out);
    }
    if (train_cmd->parsed()) {
      return cmd_train(*train_cmd, train, out, err);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(*eval_cmd, ev, out, err);
    }
    return cmd_report(rep, out);
  } catch (const std::exception & e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err)
{
  std::vector<const char *> argv = {"crossflow"};
  for (const auto & a : args) {
    argv.push_back(a.c_str());
  }
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace crossflow::cli
