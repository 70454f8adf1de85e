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

#ifndef CROSSFLOW__CLI_HPP_
#define CROSSFLOW__CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace crossflow::cli
{

/// Exit codes: 0 success, 1 runtime or IO failure, 2 usage error.
int run(int argc, const char * const * argv, std::ostream & out, std::ostream & err);

/// `args` excludes the program name.
int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err);

}  // namespace crossflow::cli

#endif  // CROSSFLOW__CLI_HPP_
