#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "repu/network.hpp"

namespace repu::testing {

// Dense random net with uniform hidden power p; widths in [1, max_width].
inline MixedRepuNetwork random_net(std::mt19937_64& rng, int d, int depth, int p, int max_width = 4,
                                   int outputs = 1, double scale = 0.8) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::uniform_int_distribution<int> w(1, max_width);
  std::vector<Layer> layers;
  int din = d;
  for (int k = 0; k <= depth; ++k) {
    int dout = k == depth ? outputs : w(rng);
    Layer l;
    l.weights = Eigen::MatrixXd::NullaryExpr(dout, din, [&] { return u(rng); });
    l.bias = Eigen::VectorXd::NullaryExpr(dout, [&] { return u(rng); });
    l.powers.assign(dout, ActivationPower(k == depth ? 0 : p));
    layers.push_back(std::move(l));
    din = dout;
  }
  return MixedRepuNetwork(std::move(layers));
}

inline Eigen::VectorXd random_point(std::mt19937_64& rng, int d, double r = 1.5) {
  std::uniform_real_distribution<double> u(-r, r);
  return Eigen::VectorXd::NullaryExpr(d, [&] { return u(rng); });
}

// |a - b| / max(1, |a|, |b|)
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// x^2 as sigma_2(x) + sigma_2(-x).
inline MixedRepuNetwork square_net() {
  Layer h{Eigen::MatrixXd(2, 1), Eigen::VectorXd::Zero(2), {ActivationPower(2), ActivationPower(2)}};
  h.weights << 1, -1;
  Layer o{Eigen::MatrixXd(1, 2), Eigen::VectorXd::Zero(1), {ActivationPower::linear()}};
  o.weights << 1, 1;
  return MixedRepuNetwork({h, o});
}

}  // namespace repu::testing
