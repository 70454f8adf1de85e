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

#ifndef CROSSFLOW__CONFIG_HPP_
#define CROSSFLOW__CONFIG_HPP_

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "crossflow/dataset.hpp"
#include "crossflow/env.hpp"
#include "crossflow/offline_rl.hpp"

namespace crossflow::config
{

/// Flat `key = value` text. `#` starts a comment; blank lines are ignored;
/// a repeated key keeps its last value.
class KeyValues
{
public:
  static KeyValues parse(std::istream & is, const std::string & origin = "<config>");
  static KeyValues load(const std::string & path);

  void set(const std::string & key, const std::string & value) { values_[key] = value; }
  bool contains(const std::string & key) const { return values_.count(key) > 0; }
  const std::map<std::string, std::string> & values() const { return values_; }

private:
  std::map<std::string, std::string> values_;
};

/// A named, typed view of one configuration field.
struct Binding
{
  std::string key;
  std::string help;
  std::function<void(std::string_view)> set;
  std::function<std::string()> get;
};

Binding bind(std::string key, double & field, std::string help = {});
Binding bind(std::string key, int & field, std::string help = {});
Binding bind(std::string key, std::uint64_t & field, std::string help = {});
Binding bind(std::string key, bool & field, std::string help = {});

std::vector<Binding> env_bindings(env::EnvConfig & cfg);
/// Keys shared with the environment (gamma) are written to both configs.
std::vector<Binding> train_bindings(offline_rl::TrainConfig & train, env::EnvConfig & env);
std::vector<Binding> generate_bindings(dataset::GenerateConfig & cfg);

/// Applies every entry of `kv`. Throws Error naming the key on an unknown key
/// or an unparsable value.
void apply(const KeyValues & kv, const std::vector<Binding> & bindings);

/// Resolved `key = value` lines in binding order.
std::string dump(const std::vector<Binding> & bindings);

/// Comma-separated positive integers, e.g. "256,256".
std::vector<int> parse_int_list(std::string_view text);

}  // namespace crossflow::config

#endif  // CROSSFLOW__CONFIG_HPP_
