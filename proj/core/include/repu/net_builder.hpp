#pragma once

#include <map>
#include <span>
#include <vector>

#include "repu/network.hpp"

namespace repu {

/// Affine combination of the neurons of one level of a network under
/// construction (level 0 is the raw input). A signal with no terms is a
/// constant and is usable at every level for free.
struct Signal {
  int level = 0;
  std::map<int, double> terms;
  double constant = 0.0;

  bool is_constant() const { return terms.empty(); }
  static Signal constant_value(double c) { return Signal{0, {}, c}; }

  Signal& operator+=(const Signal& o);
  Signal& operator*=(double c);
};

Signal operator+(Signal a, const Signal& b);
Signal operator-(Signal a, const Signal& b);
Signal operator*(double c, Signal s);

class NetBuilder;

/// The 2p neurons sigma_p(s + t_i), sigma_p(-s - t_i), t_i = 1..p. Any
/// polynomial of degree <= p in s is a linear readout of them.
class ShallowBlock {
 public:
  /// a_0 + a_1 s + ... + a_k s^k, k <= p.
  Signal readout(std::span<const double> coeffs) const;
  Signal identity() const;
  Signal square() const;
  int level() const { return level_; }

 private:
  friend class NetBuilder;
  int level_ = 0;
  int p_ = 2;
  std::vector<int> plus_, minus_;
};

/// Layer-by-layer construction of sparse RePU networks from blocks.
class NetBuilder {
 public:
  NetBuilder(int input_dim, int p);

  int power() const { return p_; }
  int input_dim() const { return input_dim_; }
  int top_level() const { return static_cast<int>(levels_.size()); }

  Signal input(int j) const;
  /// sigma_t(in) placed on `level`; `in` must live on level - 1 or be constant.
  Signal neuron(int level, const Signal& in, int t);
  ShallowBlock shallow(const Signal& s);
  /// s^p = sigma_p(s) + (-1)^p sigma_p(-s), two neurons.
  Signal power_block(const Signal& s);
  /// Identity blocks until the signal lives on `level`; constants pass through.
  Signal carry(const Signal& s, int level);

  /// Output layer reads the signals; every non-constant one is carried to the top level.
  MixedRepuNetwork build(std::vector<Signal> outputs);

 private:
  struct Row {
    std::map<int, double> weights;
    double bias;
    int power;
  };
  int width(int level) const;

  int input_dim_;
  int p_;
  std::vector<std::vector<Row>> levels_;  // levels_[l - 1] holds level l
};

/// Readout weights u_1..u_p, u_0 for a_0..a_p over knots 1..p (Vandermonde solve).
std::vector<double> shallow_readout_weights(std::span<const double> coeffs, int p);

}  // namespace repu
