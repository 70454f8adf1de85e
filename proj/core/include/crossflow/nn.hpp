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

#ifndef CROSSFLOW__NN_HPP_
#define CROSSFLOW__NN_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crossflow/common.hpp"

namespace crossflow::nn
{

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class OutputActivation : std::uint32_t { Identity = 0, TanhScaled = 1 };

/// weight is out x in.
struct DenseLayer
{
  Matrix weight;
  Vector bias;
};

/// Fully connected ReLU network. Batches are column-major: one sample per
/// column.
class Mlp
{
public:
  Mlp() = default;
  /// Zero-initialized network. `bounds` is required (one positive entry per
  /// output) for TanhScaled and must be empty for Identity.
  Mlp(std::vector<int> sizes, OutputActivation activation, Vector bounds = {});

  /// He-uniform hidden layers, final layer uniform in [-3e-3, 3e-3].
  static Mlp initialized(
    std::vector<int> sizes, OutputActivation activation, Vector bounds, Rng & rng);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int> & sizes() const { return sizes_; }
  OutputActivation activation() const { return activation_; }
  const Vector & bounds() const { return bounds_; }

  std::vector<DenseLayer> & layers() { return layers_; }
  const std::vector<DenseLayer> & layers() const { return layers_; }

  std::size_t parameter_count() const;
  bool same_architecture(const Mlp & other) const;

private:
  std::vector<int> sizes_;
  OutputActivation activation_ = OutputActivation::Identity;
  Vector bounds_;
  std::vector<DenseLayer> layers_;
};

/// Intermediate activations of one forward pass, consumed by backward().
struct Tape
{
  Matrix input;
  /// Pre-activation of every layer.
  std::vector<Matrix> pre;
  /// Post-activation of every layer; the last entry is the network output.
  std::vector<Matrix> post;
  const Mlp * net = nullptr;

  bool empty() const { return net == nullptr; }
};

Matrix forward(const Mlp & net, const Matrix & x);
Vector forward(const Mlp & net, const Vector & x);
/// Forward pass that records what backward() needs.
Matrix forward(const Mlp & net, const Matrix & x, Tape & tape);

/// Per-parameter gradients mirroring an Mlp, plus the input gradient.
struct GradientBundle
{
  std::vector<DenseLayer> layers;
  Matrix input;

  static GradientBundle zeros_like(const Mlp & net);
  GradientBundle & operator+=(const GradientBundle & other);
  GradientBundle & operator*=(double k);
  double max_abs() const;
};

enum class BackwardMode { Full, InputOnly };

/// Reverse-mode gradient of sum(upstream .* forward(net, x)) with respect to
/// every parameter and to x. Throws Error when `tape` was not produced by a
/// forward pass of `net`. InputOnly skips parameter gradients.
GradientBundle backward(
  const Mlp & net, const Tape & tape, const Matrix & upstream,
  BackwardMode mode = BackwardMode::Full);

struct AdamConfig
{
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState
{
  AdamConfig config;
  std::vector<DenseLayer> first_moment;
  std::vector<DenseLayer> second_moment;
  std::int64_t step = 0;

  static AdamState for_net(const Mlp & net, const AdamConfig & cfg = {});
};

/// Bias-corrected Adam step: p -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_update(Mlp & params, const GradientBundle & grads, AdamState & state);

/// target <- tau * online + (1 - tau) * target, tau in (0, 1].
void polyak_update(Mlp & target, const Mlp & online, double tau);

/// Network plus the per-feature input standardization it was trained with.
struct Checkpoint
{
  Mlp net;
  Vector input_mean;
  Vector input_std;

  bool has_normalizer() const { return input_mean.size() > 0; }
};

inline constexpr const char * kCheckpointMagic = "CFNN1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream & os, const Checkpoint & ckpt);
Checkpoint read_checkpoint(std::istream & is);
void save_checkpoint(const std::string & path, const Checkpoint & ckpt);
Checkpoint load_checkpoint(const std::string & path);

}  // namespace crossflow::nn

#endif  // CROSSFLOW__NN_HPP_
