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

#ifndef CROSSFLOW__SVG_HPP_
#define CROSSFLOW__SVG_HPP_

#include <optional>
#include <string>
#include <vector>

namespace crossflow::svg
{

struct Box
{
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// One category on the x axis with one optional value per series.
template <typename T>
struct Group
{
  std::string category;
  std::vector<std::optional<T>> values;
};

struct Chart
{
  std::string title;
  std::string y_label;
  std::vector<std::string> series;
};

/// Whisker-to-extremes box plot; the mean is drawn as a diamond.
std::string box_plot(const Chart & chart, const std::vector<Group<Box>> & groups);
std::string bar_chart(const Chart & chart, const std::vector<Group<double>> & groups);

struct LineSeries
{
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  /// Optional band; empty or the same length as y.
  std::vector<double> lo;
  std::vector<double> hi;
};

std::string line_plot(
  const std::string & title, const std::string & x_label, const std::string & y_label,
  const std::vector<LineSeries> & series);

/// Escapes &, <, >, " for text nodes and attributes.
std::string escape(const std::string & text);

}  // namespace crossflow::svg

#endif  // CROSSFLOW__SVG_HPP_
