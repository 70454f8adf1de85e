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

#include "crossflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "crossflow/binary_io.hpp"
#include "crossflow/common.hpp"

namespace crossflow::svg
{

namespace
{

constexpr double kWidth = 720.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;
constexpr const char * kPalette[] = {
  "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

std::string color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string num(double v)
{
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct Range
{
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v)
  {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }

  /// Pads a degenerate or empty range so the scale stays invertible.
  void finish(bool include_zero)
  {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (include_zero) {
      lo = std::min(lo, 0.0);
      hi = std::max(hi, 0.0);
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    hi += pad;
    if (!include_zero || lo < 0.0) {
      lo -= pad;
    }
  }
};

class Canvas
{
public:
  Canvas(const std::string & title, Range x, Range y)
  : x_(x), y_(y)
  {
    os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << escape(title) << "</text>\n";
  }

  double px(double x) const
  {
    return kLeft + (x - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight);
  }
  double py(double y) const
  {
    return kHeight - kBottom - (y - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom);
  }

  void axes(const std::string & x_label, const std::string & y_label, bool x_ticks)
  {
    const double x0 = kLeft;
    const double x1 = kWidth - kRight;
    const double y0 = kHeight - kBottom;
    const double y1 = kTop;
    os_ << "<g stroke=\"#333\" stroke-width=\"1\">"
        << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
        << "\"/><line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
        << "\"/></g>\n";
    for (int i = 0; i <= 5; ++i) {
      const double v = y_.lo + (y_.hi - y_.lo) * i / 5.0;
      const double y = py(v);
      os_ << "<line x1=\"" << x0 - 4 << "\" y1=\"" << y << "\" x2=\"" << x1 << "\" y2=\"" << y
          << "\" stroke=\"#ddd\"/>"
          << "<text x=\"" << x0 - 7 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\" "
          << "font-family=\"sans-serif\" font-size=\"11\">" << num(v) << "</text>\n";
      if (x_ticks) {
        const double xv = x_.lo + (x_.hi - x_.lo) * i / 5.0;
        os_ << "<text x=\"" << px(xv) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\" "
            << "font-family=\"sans-serif\" font-size=\"11\">" << num(xv) << "</text>\n";
      }
    }
    os_ << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << escape(x_label) << "</text>\n"
        << "<text transform=\"translate(16," << (y0 + y1) / 2
        << ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"12\">" << escape(y_label) << "</text>\n";
  }

  void legend(const std::vector<std::string> & labels)
  {
    const double x = kWidth - kRight + 15;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const double y = kTop + 10 + 20.0 * static_cast<double>(i);
      os_ << "<rect x=\"" << x << "\" y=\"" << y - 9 << "\" width=\"12\" height=\"12\" fill=\""
          << color(i) << "\"/><text x=\"" << x + 18 << "\" y=\"" << y + 2
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(labels[i])
          << "</text>\n";
    }
  }

  void category_label(double x, const std::string & text)
  {
    os_ << "<text x=\"" << x << "\" y=\"" << kHeight - kBottom + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << escape(text) << "</text>\n";
  }

  std::ostringstream & out() { return os_; }

  std::string finish()
  {
    os_ << "</svg>\n";
    return os_.str();
  }

private:
  Range x_;
  Range y_;
  std::ostringstream os_;
};

template <typename T>
void check_groups(const Chart & chart, const std::vector<Group<T>> & groups)
{
  for (const auto & g : groups) {
    if (g.values.size() != chart.series.size()) {
      throw Error("svg: group '" + g.category + "' does not match the series count");
    }
  }
}

}  // namespace

std::string escape(const std::string & text)
{
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string box_plot(const Chart & chart, const std::vector<Group<Box>> & groups)
{
  check_groups(chart, groups);
  Range y;
  for (const auto & g : groups) {
    for (const auto & b : g.values) {
      if (b) {
        y.add(b->min);
        y.add(b->max);
      }
    }
  }
  y.finish(false);
  const double n = static_cast<double>(std::max<std::size_t>(groups.size(), 1));
  Range x;
  x.lo = 0.0;
  x.hi = n;
  Canvas c(chart.title, x, y);
  c.axes("", chart.y_label, false);
  const double slots = static_cast<double>(std::max<std::size_t>(chart.series.size(), 1));
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const double g0 = c.px(static_cast<double>(gi) + 0.1);
    const double g1 = c.px(static_cast<double>(gi) + 0.9);
    const double slot = (g1 - g0) / slots;
    c.category_label((g0 + g1) / 2, groups[gi].category);
    for (std::size_t si = 0; si < groups[gi].values.size(); ++si) {
      const auto & b = groups[gi].values[si];
      if (!b) {
        continue;
      }
      const double cx = g0 + slot * (static_cast<double>(si) + 0.5);
      const double w = slot * 0.6;
      auto & os = c.out();
      os << "<g stroke=\"" << color(si) << "\" stroke-width=\"1.5\" fill=\"none\">"
         << "<line x1=\"" << cx << "\" y1=\"" << c.py(b->min) << "\" x2=\"" << cx << "\" y2=\""
         << c.py(b->q1) << "\"/>"
         << "<line x1=\"" << cx << "\" y1=\"" << c.py(b->q3) << "\" x2=\"" << cx << "\" y2=\""
         << c.py(b->max) << "\"/>"
         << "<line x1=\"" << cx - w / 4 << "\" y1=\"" << c.py(b->min) << "\" x2=\"" << cx + w / 4
         << "\" y2=\"" << c.py(b->min) << "\"/>"
         << "<line x1=\"" << cx - w / 4 << "\" y1=\"" << c.py(b->max) << "\" x2=\"" << cx + w / 4
         << "\" y2=\"" << c.py(b->max) << "\"/>"
         << "<rect class=\"box\" x=\"" << cx - w / 2 << "\" y=\"" << c.py(b->q3) << "\" width=\"" << w
         << "\" height=\"" << std::max(0.5, c.py(b->q1) - c.py(b->q3)) << "\" fill=\""
         << color(si) << "\" fill-opacity=\"0.25\"/>"
         << "<line x1=\"" << cx - w / 2 << "\" y1=\"" << c.py(b->median) << "\" x2=\""
         << cx + w / 2 << "\" y2=\"" << c.py(b->median) << "\" stroke-width=\"2.5\"/>"
         << "</g>\n";
      const double my = c.py(b->mean);
      os << "<path d=\"M" << cx << ' ' << my - 4 << " L" << cx + 4 << ' ' << my << " L" << cx
         << ' ' << my + 4 << " L" << cx - 4 << ' ' << my << " Z\" fill=\"" << color(si)
         << "\"/>\n";
    }
  }
  c.legend(chart.series);
  return c.finish();
}

std::string bar_chart(const Chart & chart, const std::vector<Group<double>> & groups)
{
  check_groups(chart, groups);
  Range y;
  for (const auto & g : groups) {
    for (const auto & v : g.values) {
      if (v) {
        y.add(*v);
      }
    }
  }
  y.finish(true);
  Range x;
  x.lo = 0.0;
  x.hi = static_cast<double>(std::max<std::size_t>(groups.size(), 1));
  Canvas c(chart.title, x, y);
  c.axes("", chart.y_label, false);
  const double slots = static_cast<double>(std::max<std::size_t>(chart.series.size(), 1));
  const double zero = c.py(0.0);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const double g0 = c.px(static_cast<double>(gi) + 0.1);
    const double g1 = c.px(static_cast<double>(gi) + 0.9);
    const double slot = (g1 - g0) / slots;
    c.category_label((g0 + g1) / 2, groups[gi].category);
    for (std::size_t si = 0; si < groups[gi].values.size(); ++si) {
      const auto & v = groups[gi].values[si];
      if (!v) {
        continue;
      }
      const double top = std::min(zero, c.py(*v));
      const double h = std::abs(zero - c.py(*v));
      c.out() << "<rect class=\"bar\" x=\"" << g0 + slot * (static_cast<double>(si) + 0.1) << "\" y=\"" << top
              << "\" width=\"" << slot * 0.8 << "\" height=\"" << h << "\" fill=\"" << color(si)
              << "\"><title>" << escape(chart.series[si]) << ": " << io::format_double(*v)
              << "</title></rect>\n";
    }
  }
  c.legend(chart.series);
  return c.finish();
}

std::string line_plot(
  const std::string & title, const std::string & x_label, const std::string & y_label,
  const std::vector<LineSeries> & series)
{
  Range x;
  Range y;
  for (const auto & s : series) {
    if (s.x.size() != s.y.size()) {
      throw Error("svg: series '" + s.label + "' has mismatched x/y lengths");
    }
    const bool band = !s.lo.empty();
    if (band && (s.lo.size() != s.y.size() || s.hi.size() != s.y.size())) {
      throw Error("svg: series '" + s.label + "' has a mismatched band");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x.add(s.x[i]);
      y.add(s.y[i]);
      if (band) {
        y.add(s.lo[i]);
        y.add(s.hi[i]);
      }
    }
  }
  x.finish(false);
  y.finish(false);
  Canvas c(title, x, y);
  c.axes(x_label, y_label, true);
  std::vector<std::string> labels;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto & s = series[si];
    labels.push_back(s.label);
    auto & os = c.out();
    if (!s.lo.empty() && !s.x.empty()) {
      os << "<path class=\"band\" d=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        os << (i == 0 ? 'M' : 'L') << c.px(s.x[i]) << ' ' << c.py(s.hi[i]) << ' ';
      }
      for (std::size_t i = s.x.size(); i-- > 0;) {
        os << 'L' << c.px(s.x[i]) << ' ' << c.py(s.lo[i]) << ' ';
      }
      os << "Z\" fill=\"" << color(si) << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << color(si) << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      os << c.px(s.x[i]) << ',' << c.py(s.y[i]) << ' ';
    }
    os << "\"/>\n";
  }
  c.legend(labels);
  return c.finish();
}

}  // namespace crossflow::svg
