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

#include "crossflow/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "crossflow/binary_io.hpp"

namespace crossflow::nn
{

namespace
{

void apply_output(const Mlp & net, const Matrix & z, Matrix & y)
{
  if (net.activation() == OutputActivation::Identity) {
    y = z;
    return;
  }
  const Vector & b = net.bounds();
  y.resize(z.rows(), z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      double t = std::tanh(z(i, j));
      // tanh saturates to exactly +-1 in double; keep outputs strictly inside.
      constexpr double kEdge = 1.0 - 0x1.0p-52;
      t = std::clamp(t, -kEdge, kEdge);
      y(i, j) = b(i) * t;
    }
  }
}

void check_input(const Mlp & net, Eigen::Index rows)
{
  if (net.sizes().empty()) {
    throw Error("forward: empty network");
  }
  if (rows != net.input_size()) {
    throw Error(
      "forward: input has " + std::to_string(rows) + " rows, network expects " +
      std::to_string(net.input_size()));
  }
}

}  // namespace

Mlp::Mlp(std::vector<int> sizes, OutputActivation activation, Vector bounds)
: sizes_(std::move(sizes)), activation_(activation), bounds_(std::move(bounds))
{
  if (sizes_.size() < 2) {
    throw Error("Mlp needs at least an input and an output size");
  }
  for (int s : sizes_) {
    if (s <= 0) {
      throw Error("Mlp layer sizes must be positive");
    }
  }
  if (activation_ == OutputActivation::TanhScaled) {
    if (bounds_.size() != sizes_.back() || !(bounds_.array() > 0.0).all()) {
      throw Error("TanhScaled output needs one positive bound per output");
    }
  } else if (bounds_.size() != 0) {
    throw Error("Identity output takes no bounds");
  }
  for (std::size_t i = 1; i < sizes_.size(); ++i) {
    layers_.push_back({Matrix::Zero(sizes_[i], sizes_[i - 1]), Vector::Zero(sizes_[i])});
  }
}

Mlp Mlp::initialized(
  std::vector<int> sizes, OutputActivation activation, Vector bounds, Rng & rng)
{
  Mlp net(std::move(sizes), activation, std::move(bounds));
  const std::size_t n = net.layers_.size();
  for (std::size_t k = 0; k < n; ++k) {
    auto & layer = net.layers_[k];
    if (k + 1 < n) {
      const double limit = std::sqrt(6.0 / static_cast<double>(layer.weight.cols()));
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
        layer.weight.data()[i] = rng.uniform(-limit, limit);
      }
      layer.bias.setZero();
    } else {
      constexpr double kFinal = 3e-3;
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
        layer.weight.data()[i] = rng.uniform(-kFinal, kFinal);
      }
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
        layer.bias(i) = rng.uniform(-kFinal, kFinal);
      }
    }
  }
  return net;
}

std::size_t Mlp::parameter_count() const
{
  std::size_t n = 0;
  for (const auto & l : layers_) {
    n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  }
  return n;
}

bool Mlp::same_architecture(const Mlp & other) const
{
  return sizes_ == other.sizes_ && activation_ == other.activation_ && bounds_ == other.bounds_;
}

Matrix forward(const Mlp & net, const Matrix & x)
{
  check_input(net, x.rows());
  Matrix h = x;
  const auto & layers = net.layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Matrix z = layers[k].weight * h;
    z.colwise() += layers[k].bias;
    if (k + 1 < layers.size()) {
      h = z.cwiseMax(0.0);
    } else {
      apply_output(net, z, h);
    }
  }
  return h;
}

Vector forward(const Mlp & net, const Vector & x)
{
  Matrix m = x;
  return forward(net, m).col(0);
}

Matrix forward(const Mlp & net, const Matrix & x, Tape & tape)
{
  check_input(net, x.rows());
  const auto & layers = net.layers();
  tape.net = &net;
  tape.input = x;
  tape.pre.resize(layers.size());
  tape.post.resize(layers.size());
  const Matrix * h = &tape.input;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Matrix & z = tape.pre[k];
    z.noalias() = layers[k].weight * (*h);
    z.colwise() += layers[k].bias;
    if (k + 1 < layers.size()) {
      tape.post[k] = z.cwiseMax(0.0);
    } else {
      apply_output(net, z, tape.post[k]);
    }
    h = &tape.post[k];
  }
  return tape.post.back();
}

GradientBundle GradientBundle::zeros_like(const Mlp & net)
{
  GradientBundle g;
  for (const auto & l : net.layers()) {
    g.layers.push_back(
      {Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  }
  return g;
}

GradientBundle & GradientBundle::operator+=(const GradientBundle & other)
{
  if (other.layers.size() != layers.size()) {
    throw Error("GradientBundle: shape mismatch");
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    layers[k].weight += other.layers[k].weight;
    layers[k].bias += other.layers[k].bias;
  }
  if (input.size() == 0) {
    input = other.input;
  } else if (other.input.size() != 0) {
    input += other.input;
  }
  return *this;
}

GradientBundle & GradientBundle::operator*=(double k)
{
  for (auto & l : layers) {
    l.weight *= k;
    l.bias *= k;
  }
  input *= k;
  return *this;
}

double GradientBundle::max_abs() const
{
  double m = 0.0;
  for (const auto & l : layers) {
    if (l.weight.size() > 0) {
      m = std::max(m, l.weight.cwiseAbs().maxCoeff());
    }
    if (l.bias.size() > 0) {
      m = std::max(m, l.bias.cwiseAbs().maxCoeff());
    }
  }
  return m;
}

GradientBundle backward(
  const Mlp & net, const Tape & tape, const Matrix & upstream, BackwardMode mode)
{
  if (tape.empty()) {
    throw Error("backward: no recorded forward pass");
  }
  if (tape.net != &net || tape.pre.size() != net.layers().size()) {
    throw Error("backward: tape was recorded for a different network");
  }
  const auto & layers = net.layers();
  const std::size_t n = layers.size();
  if (upstream.rows() != net.output_size() || upstream.cols() != tape.input.cols()) {
    throw Error("backward: upstream shape does not match the network output");
  }

  GradientBundle g;
  if (mode == BackwardMode::Full) {
    g.layers.resize(n);
  }

  // delta = dL/dz for the current layer.
  Matrix delta;
  if (net.activation() == OutputActivation::TanhScaled) {
    const Matrix & z = tape.pre[n - 1];
    const Vector & b = net.bounds();
    delta.resize(z.rows(), z.cols());
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double t = std::tanh(z(i, j));
        delta(i, j) = upstream(i, j) * b(i) * (1.0 - t * t);
      }
    }
  } else {
    delta = upstream;
  }

  for (std::size_t kk = n; kk-- > 0;) {
    const Matrix & h_in = kk == 0 ? tape.input : tape.post[kk - 1];
    if (mode == BackwardMode::Full) {
      g.layers[kk].weight.noalias() = delta * h_in.transpose();
      g.layers[kk].bias = delta.rowwise().sum();
    }
    Matrix d_in;
    d_in.noalias() = layers[kk].weight.transpose() * delta;
    if (kk == 0) {
      g.input = std::move(d_in);
    } else {
      // ReLU subgradient at exactly 0 is 0.
      const Matrix & z_prev = tape.pre[kk - 1];
      delta = (z_prev.array() > 0.0).select(d_in, 0.0);
    }
  }
  return g;
}

AdamState AdamState::for_net(const Mlp & net, const AdamConfig & cfg)
{
  AdamState s;
  s.config = cfg;
  for (const auto & l : net.layers()) {
    s.first_moment.push_back(
      {Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    s.second_moment.push_back(
      {Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  }
  return s;
}

void adam_update(Mlp & params, const GradientBundle & grads, AdamState & state)
{
  auto & layers = params.layers();
  if (grads.layers.size() != layers.size() || state.first_moment.size() != layers.size()) {
    throw Error("adam_update: parameter / gradient / state shape mismatch");
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (grads.layers[k].weight.rows() != layers[k].weight.rows() ||
      grads.layers[k].weight.cols() != layers[k].weight.cols() ||
      grads.layers[k].bias.size() != layers[k].bias.size() ||
      state.first_moment[k].weight.rows() != layers[k].weight.rows() ||
      state.first_moment[k].weight.cols() != layers[k].weight.cols())
    {
      throw Error("adam_update: shape mismatch in layer " + std::to_string(k));
    }
  }
  const auto & c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);

  auto update = [&](auto & p, const auto & g, auto & m, auto & v) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    p.array() -=
      c.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);
  };
  for (std::size_t k = 0; k < layers.size(); ++k) {
    update(
      layers[k].weight, grads.layers[k].weight, state.first_moment[k].weight,
      state.second_moment[k].weight);
    update(
      layers[k].bias, grads.layers[k].bias, state.first_moment[k].bias,
      state.second_moment[k].bias);
  }
}

void polyak_update(Mlp & target, const Mlp & online, double tau)
{
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw Error("polyak_update: tau must lie in (0, 1]");
  }
  if (!target.same_architecture(online)) {
    throw Error("polyak_update: architecture mismatch");
  }
  auto & t = target.layers();
  const auto & o = online.layers();
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (tau == 1.0) {
      t[k] = o[k];
      continue;
    }
    t[k].weight = tau * o[k].weight + (1.0 - tau) * t[k].weight;
    t[k].bias = tau * o[k].bias + (1.0 - tau) * t[k].bias;
  }
}

void write_checkpoint(std::ostream & os, const Checkpoint & ckpt)
{
  const Mlp & net = ckpt.net;
  io::write_magic(os, kCheckpointMagic);
  io::write_u32(os, kCheckpointVersion);
  io::write_u32(os, static_cast<std::uint32_t>(net.sizes().size()));
  for (int s : net.sizes()) {
    io::write_u32(os, static_cast<std::uint32_t>(s));
  }
  io::write_u32(os, static_cast<std::uint32_t>(net.activation()));
  if (net.activation() == OutputActivation::TanhScaled) {
    io::write_f64s(os, {net.bounds().data(), static_cast<std::size_t>(net.bounds().size())});
  }
  if (ckpt.has_normalizer()) {
    if (ckpt.input_mean.size() != net.input_size() || ckpt.input_std.size() != net.input_size()) {
      throw Error("write_checkpoint: normalizer size does not match the input size");
    }
    io::write_u32(os, 1);
    io::write_f64s(os, {ckpt.input_mean.data(), static_cast<std::size_t>(net.input_size())});
    io::write_f64s(os, {ckpt.input_std.data(), static_cast<std::size_t>(net.input_size())});
  } else {
    io::write_u32(os, 0);
  }
  for (const auto & l : net.layers()) {
    // Row-major weights.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = l.weight;
    io::write_f64s(os, {w.data(), static_cast<std::size_t>(w.size())});
    io::write_f64s(os, {l.bias.data(), static_cast<std::size_t>(l.bias.size())});
  }
}

Checkpoint read_checkpoint(std::istream & is)
{
  constexpr std::uint32_t kMaxLayers = 64;
  constexpr std::uint32_t kMaxWidth = 1u << 16;
  io::expect_magic(is, kCheckpointMagic, "checkpoint");
  const auto version = io::read_u32(is);
  if (version != kCheckpointVersion) {
    throw Error("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto n_sizes = io::read_u32(is);
  if (n_sizes < 2 || n_sizes > kMaxLayers) {
    throw Error("checkpoint: implausible layer count");
  }
  std::vector<int> sizes;
  for (std::uint32_t i = 0; i < n_sizes; ++i) {
    const auto s = io::read_u32(is);
    if (s == 0 || s > kMaxWidth) {
      throw Error("checkpoint: implausible layer width");
    }
    sizes.push_back(static_cast<int>(s));
  }
  const auto act = io::read_u32(is);
  if (act > 1) {
    throw Error("checkpoint: unknown output activation");
  }
  Vector bounds;
  if (act == 1) {
    bounds.resize(sizes.back());
    io::read_f64s(is, {bounds.data(), static_cast<std::size_t>(bounds.size())});
  }
  Checkpoint ckpt;
  const auto has_norm = io::read_u32(is);
  if (has_norm > 1) {
    throw Error("checkpoint: bad normalizer flag");
  }
  if (has_norm == 1) {
    ckpt.input_mean.resize(sizes.front());
    ckpt.input_std.resize(sizes.front());
    io::read_f64s(is, {ckpt.input_mean.data(), static_cast<std::size_t>(sizes.front())});
    io::read_f64s(is, {ckpt.input_std.data(), static_cast<std::size_t>(sizes.front())});
  }
  ckpt.net = Mlp(sizes, static_cast<OutputActivation>(act), bounds);
  for (auto & l : ckpt.net.layers()) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w(
      l.weight.rows(), l.weight.cols());
    io::read_f64s(is, {w.data(), static_cast<std::size_t>(w.size())});
    l.weight = w;
    io::read_f64s(is, {l.bias.data(), static_cast<std::size_t>(l.bias.size())});
  }
  io::expect_eof(is, "checkpoint");
  return ckpt;
}

void save_checkpoint(const std::string & path, const Checkpoint & ckpt)
{
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) {
    throw Error("cannot write checkpoint " + path);
  }
  write_checkpoint(os, ckpt);
}

Checkpoint load_checkpoint(const std::string & path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw Error("cannot open checkpoint " + path);
  }
  try {
    return read_checkpoint(is);
  } catch (const Error & e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace crossflow::nn
