#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "repu/activation.hpp"

namespace repu {

struct Layer {
  Eigen::MatrixXd weights;  // d_out x d_in
  Eigen::VectorXd bias;     // d_out
  std::vector<ActivationPower> powers;

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }
  bool operator==(const Layer& other) const;
};

/// Sup-norm bounds (B, B') of the function class the network was declared in.
/// Recorded metadata only; evaluation never enforces them.
struct DeclaredBounds {
  double value = 0.0;
  double partial = 0.0;
  bool operator==(const DeclaredBounds&) const = default;
};

/// D (hidden layers), W (widest hidden layer), U (hidden neurons) and S
/// (weights + biases of the dense layers, sum of d_{i+1}(d_i + 1)).
/// `nonzero_size` counts only the non-zero entries; sparse constructions
/// (compiled polynomials, derivative networks) are sized by it.
struct ArchitectureStats {
  long depth = 0;
  long width = 0;
  long neurons = 0;
  long size = 0;
  long nonzero_size = 0;
  bool operator==(const ArchitectureStats&) const = default;
};

/// Feed-forward perceptron x -> L_D o sigma o ... o sigma o L_0 (x) where every
/// hidden neuron carries its own power t >= 1 and the last layer is affine.
/// Immutable once built; copies are cheap enough for training snapshots.
class MixedRepuNetwork {
 public:
  explicit MixedRepuNetwork(std::vector<Layer> layers,
                            std::optional<DeclaredBounds> bounds = std::nullopt);

  const std::vector<Layer>& layers() const { return layers_; }
  int input_dim() const { return static_cast<int>(layers_.front().in_dim()); }
  int output_dim() const { return static_cast<int>(layers_.back().out_dim()); }
  int hidden_depth() const { return static_cast<int>(layers_.size()) - 1; }
  const std::optional<DeclaredBounds>& declared_bounds() const { return bounds_; }

  /// The common hidden power if every hidden neuron shares it.
  std::optional<int> uniform_hidden_power() const;

  Eigen::Index parameter_count() const;
  /// Flattened parameters: per layer, weights row-major then bias.
  std::vector<double> parameters() const;
  MixedRepuNetwork with_parameters(std::span<const double> params) const;

  /// Scalar network computing output coordinate `o` (shares the hidden trunk).
  MixedRepuNetwork output_head(int o) const;

  bool operator==(const MixedRepuNetwork& other) const;

 private:
  std::vector<Layer> layers_;
  std::optional<DeclaredBounds> bounds_;
};

Eigen::VectorXd forward(const MixedRepuNetwork& net, std::span<const double> x);
inline Eigen::VectorXd forward(const MixedRepuNetwork& net, const Eigen::VectorXd& x) {
  return forward(net, std::span<const double>(x.data(), static_cast<size_t>(x.size())));
}

/// Column-batched forward: X is d x n, result is output_dim x n.
Eigen::MatrixXd forward_batch(const MixedRepuNetwork& net, const Eigen::MatrixXd& X);

struct Gradients {
  std::vector<double> params;  // same layout as MixedRepuNetwork::parameters()
  Eigen::VectorXd input;
};

/// Reverse pass for a scalar-output network (seed 1).
Gradients backprop(const MixedRepuNetwork& net, std::span<const double> x);
/// Reverse pass of <seed, f(x)> for vector outputs.
Gradients backprop(const MixedRepuNetwork& net, std::span<const double> x,
                   std::span<const double> output_seed);

/// output_dim x d Jacobian, one reverse pass per output coordinate.
Eigen::MatrixXd input_jacobian(const MixedRepuNetwork& net, std::span<const double> x);

inline Gradients backprop(const MixedRepuNetwork& net, const Eigen::VectorXd& x) {
  return backprop(net, std::span<const double>(x.data(), static_cast<size_t>(x.size())));
}
inline Eigen::MatrixXd input_jacobian(const MixedRepuNetwork& net, const Eigen::VectorXd& x) {
  return input_jacobian(net, std::span<const double>(x.data(), static_cast<size_t>(x.size())));
}

ArchitectureStats architecture_stats(const MixedRepuNetwork& net);

/// Pseudo-dimension upper bound 3 p D S (D + log2 U) for Mixed-RePU classes.
double pdim_bound(double depth, double size, double neurons, double p);

}  // namespace repu
