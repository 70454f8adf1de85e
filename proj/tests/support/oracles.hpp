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

#ifndef CROSSFLOW_TESTS__ORACLES_HPP_
#define CROSSFLOW_TESTS__ORACLES_HPP_

// Independent reference computations. None of these call the code under test
// beyond plain data accessors.

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "crossflow/nn.hpp"
#include "crossflow/world.hpp"

namespace crossflow::testing
{

/// First time the separation along the initial displacement axis reaches
/// zero under constant velocities, by explicit time stepping.
inline double ttc_by_simulation(
  const world::ParticipantState & ego, const world::ParticipantState & other, double dt,
  double t_max)
{
  const double c0 = std::cos(ego.heading);
  const double s0 = std::sin(ego.heading);
  const double c1 = std::cos(other.heading);
  const double s1 = std::sin(other.heading);
  const double evx = ego.v_lon * c0 - ego.v_lat * s0;
  const double evy = ego.v_lon * s0 + ego.v_lat * c0;
  const double ovx = other.v_lon * c1 - other.v_lat * s1;
  const double ovy = other.v_lon * s1 + other.v_lat * c1;
  const double dx0 = other.x - ego.x;
  const double dy0 = other.y - ego.y;
  const double d0 = std::hypot(dx0, dy0);
  const double ux = dx0 / d0;
  const double uy = dy0 / d0;
  const auto steps = static_cast<long long>(t_max / dt);
  for (long long k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double sep = (dx0 + (ovx - evx) * t) * ux + (dy0 + (ovy - evy) * t) * uy;
    if (sep <= 0.0) {
      return t;
    }
  }
  return std::numeric_limits<double>::infinity();
}

/// Rear-axle pose after time t at constant (v_r, delta), from the closed-form
/// circular arc (straight line when delta = 0).
struct ArcPose
{
  double x_r;
  double y_r;
  double yaw;
};

inline ArcPose exact_arc(
  double x_r, double y_r, double yaw, double v_r, double delta, double l, double t)
{
  if (delta == 0.0) {
    return {x_r + v_r * t * std::cos(yaw), y_r + v_r * t * std::sin(yaw), yaw};
  }
  const double w = v_r * std::tan(delta) / l;
  const double r = l / std::tan(delta);
  const double yaw_t = yaw + w * t;
  return {x_r + r * (std::sin(yaw_t) - std::sin(yaw)),
    y_r - r * (std::cos(yaw_t) - std::cos(yaw)), yaw_t};
}

/// Forward pass written with explicit loops, for cross-checking nn::forward.
inline std::vector<double> mlp_by_loops(const nn::Mlp & net, const std::vector<double> & x)
{
  std::vector<double> a = x;
  const auto & layers = net.layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto & W = layers[k].weight;
    const auto & b = layers[k].bias;
    std::vector<double> z(static_cast<std::size_t>(W.rows()), 0.0);
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
      double acc = b(i);
      for (Eigen::Index j = 0; j < W.cols(); ++j) {
        acc += W(i, j) * a[static_cast<std::size_t>(j)];
      }
      z[static_cast<std::size_t>(i)] = acc;
    }
    const bool last = k + 1 == layers.size();
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (!last) {
        z[i] = z[i] > 0.0 ? z[i] : 0.0;
      } else if (net.activation() == nn::OutputActivation::TanhScaled) {
        z[i] = net.bounds()(static_cast<Eigen::Index>(i)) * std::tanh(z[i]);
      }
    }
    a = std::move(z);
  }
  return a;
}

/// Central finite-difference gradient of sum(upstream .* f(params)) with
/// respect to every weight, bias and input entry; compared against backward().
struct FdResult
{
  double max_rel_error = 0.0;
};

inline double scalar_objective(const nn::Mlp & net, const Eigen::MatrixXd & x,
  const Eigen::MatrixXd & upstream)
{
  return (nn::forward(net, x).array() * upstream.array()).sum();
}

inline double relative_error(double a, double b)
{
  return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)});
}

inline FdResult finite_difference_check(
  nn::Mlp net, const Eigen::MatrixXd & x, const Eigen::MatrixXd & upstream, double h)
{
  nn::Tape tape;
  nn::forward(net, x, tape);
  const auto g = nn::backward(net, tape, upstream);
  FdResult r;
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    auto & W = net.layers()[k].weight;
    for (Eigen::Index i = 0; i < W.size(); ++i) {
      const double keep = W.data()[i];
      W.data()[i] = keep + h;
      const double fp = scalar_objective(net, x, upstream);
      W.data()[i] = keep - h;
      const double fm = scalar_objective(net, x, upstream);
      W.data()[i] = keep;
      r.max_rel_error = std::max(
        r.max_rel_error, relative_error((fp - fm) / (2 * h), g.layers[k].weight.data()[i]));
    }
    auto & b = net.layers()[k].bias;
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      const double keep = b(i);
      b(i) = keep + h;
      const double fp = scalar_objective(net, x, upstream);
      b(i) = keep - h;
      const double fm = scalar_objective(net, x, upstream);
      b(i) = keep;
      r.max_rel_error =
        std::max(r.max_rel_error, relative_error((fp - fm) / (2 * h), g.layers[k].bias(i)));
    }
  }
  Eigen::MatrixXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = xp.data()[i];
    xp.data()[i] = keep + h;
    const double fp = scalar_objective(net, xp, upstream);
    xp.data()[i] = keep - h;
    const double fm = scalar_objective(net, xp, upstream);
    xp.data()[i] = keep;
    r.max_rel_error =
      std::max(r.max_rel_error, relative_error((fp - fm) / (2 * h), g.input.data()[i]));
  }
  return r;
}

}  // namespace crossflow::testing

#endif  // CROSSFLOW_TESTS__ORACLES_HPP_
