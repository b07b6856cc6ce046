#include "repu/network.hpp"

#include <cmath>
#include <string>

namespace repu {

namespace {

std::string at_layer(size_t k) { return " (layer " + std::to_string(k) + ")"; }

void check_dim(std::span<const double> x, const MixedRepuNetwork& net) {
  if (static_cast<int>(x.size()) != net.input_dim())
    throw InvalidArgument("input has dimension " + std::to_string(x.size()) + ", network expects " +
                          std::to_string(net.input_dim()));
}

}  // namespace

bool Layer::operator==(const Layer& other) const {
  return weights.rows() == other.weights.rows() && weights.cols() == other.weights.cols() &&
         bias.size() == other.bias.size() && weights == other.weights && bias == other.bias &&
         powers == other.powers;
}

MixedRepuNetwork::MixedRepuNetwork(std::vector<Layer> layers, std::optional<DeclaredBounds> bounds)
    : layers_(std::move(layers)), bounds_(bounds) {
  if (layers_.empty()) throw InvalidArgument("network needs at least an output layer");
  for (size_t k = 0; k < layers_.size(); ++k) {
    const Layer& l = layers_[k];
    if (l.out_dim() == 0 || l.in_dim() == 0) throw InvalidArgument("empty layer" + at_layer(k));
    if (l.bias.size() != l.out_dim() || static_cast<Eigen::Index>(l.powers.size()) != l.out_dim())
      throw InvalidArgument("weights/bias/powers length mismatch" + at_layer(k));
    if (k > 0 && l.in_dim() != layers_[k - 1].out_dim())
      throw InvalidArgument("layer input does not chain with previous output" + at_layer(k));
    if (!l.weights.allFinite() || !l.bias.allFinite())
      throw NumericalError("non-finite parameter" + at_layer(k));
    bool last = k + 1 == layers_.size();
    for (auto t : l.powers) {
      if (last && !t.is_linear()) throw InvalidArgument("output layer must be affine (power 0)");
      if (!last && t.is_linear()) throw InvalidArgument("hidden neuron with power 0" + at_layer(k));
    }
  }
}

std::optional<int> MixedRepuNetwork::uniform_hidden_power() const {
  std::optional<int> p;
  for (size_t k = 0; k + 1 < layers_.size(); ++k)
    for (auto t : layers_[k].powers) {
      if (p && *p != t.value()) return std::nullopt;
      p = t.value();
    }
  return p;
}

Eigen::Index MixedRepuNetwork::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<double> MixedRepuNetwork::parameters() const {
  std::vector<double> out;
  out.reserve(static_cast<size_t>(parameter_count()));
  for (const auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) out.push_back(l.weights(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
  }
  return out;
}

MixedRepuNetwork MixedRepuNetwork::with_parameters(std::span<const double> params) const {
  if (static_cast<Eigen::Index>(params.size()) != parameter_count())
    throw InvalidArgument("parameter vector has wrong length");
  std::vector<Layer> ls = layers_;
  size_t i = 0;
  for (auto& l : ls) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = params[i++];
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = params[i++];
  }
  return MixedRepuNetwork(std::move(ls), bounds_);
}

MixedRepuNetwork MixedRepuNetwork::output_head(int o) const {
  if (o < 0 || o >= output_dim()) throw InvalidArgument("output index out of range");
  std::vector<Layer> ls = layers_;
  Layer& last = ls.back();
  Layer head;
  head.weights = last.weights.row(o);
  head.bias = last.bias.segment(o, 1);
  head.powers = {ActivationPower::linear()};
  last = std::move(head);
  return MixedRepuNetwork(std::move(ls), bounds_);
}

bool MixedRepuNetwork::operator==(const MixedRepuNetwork& other) const {
  return layers_ == other.layers_ && bounds_ == other.bounds_;
}

Eigen::VectorXd forward(const MixedRepuNetwork& net, std::span<const double> x) {
  check_dim(x, net);
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (const auto& l : net.layers()) {
    Eigen::VectorXd z = l.weights * a + l.bias;
    for (Eigen::Index r = 0; r < z.size(); ++r) z(r) = apply_power(z(r), l.powers[r].value());
    a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd forward_batch(const MixedRepuNetwork& net, const Eigen::MatrixXd& X) {
  if (X.rows() != net.input_dim()) throw InvalidArgument("batch rows must equal input dimension");
  Eigen::MatrixXd a = X;
  for (const auto& l : net.layers()) {
    Eigen::MatrixXd z = l.weights * a;
    z.colwise() += l.bias;
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      int t = l.powers[r].value();
      if (t == 0) continue;
      for (Eigen::Index c = 0; c < z.cols(); ++c) z(r, c) = apply_power(z(r, c), t);
    }
    a = std::move(z);
  }
  return a;
}

Gradients backprop(const MixedRepuNetwork& net, std::span<const double> x,
                   std::span<const double> output_seed) {
  check_dim(x, net);
  if (static_cast<int>(output_seed.size()) != net.output_dim())
    throw InvalidArgument("output seed length must equal output dimension");
  const auto& ls = net.layers();
  std::vector<Eigen::VectorXd> acts;  // acts[k] = input of layer k
  std::vector<Eigen::VectorXd> pre;
  acts.reserve(ls.size() + 1);
  acts.emplace_back(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
  for (const auto& l : ls) {
    Eigen::VectorXd z = l.weights * acts.back() + l.bias;
    Eigen::VectorXd a(z.size());
    for (Eigen::Index r = 0; r < z.size(); ++r) a(r) = apply_power(z(r), l.powers[r].value());
    pre.push_back(std::move(z));
    acts.push_back(std::move(a));
  }

  Gradients g;
  g.params.assign(static_cast<size_t>(net.parameter_count()), 0.0);
  std::vector<size_t> offset(ls.size());
  size_t off = 0;
  for (size_t k = 0; k < ls.size(); ++k) {
    offset[k] = off;
    off += static_cast<size_t>(ls[k].weights.size() + ls[k].bias.size());
  }

  Eigen::VectorXd abar =
      Eigen::Map<const Eigen::VectorXd>(output_seed.data(), static_cast<Eigen::Index>(output_seed.size()));
  for (size_t k = ls.size(); k-- > 0;) {
    const Layer& l = ls[k];
    Eigen::VectorXd zbar(l.out_dim());
    for (Eigen::Index r = 0; r < zbar.size(); ++r)
      zbar(r) = abar(r) * apply_power_derivative(pre[k](r), l.powers[r].value());
    const Eigen::VectorXd& in = acts[k];
    size_t i = offset[k];
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) g.params[i++] = zbar(r) * in(c);
    for (Eigen::Index r = 0; r < zbar.size(); ++r) g.params[i++] = zbar(r);
    abar = l.weights.transpose() * zbar;
  }
  g.input = std::move(abar);
  return g;
}

Gradients backprop(const MixedRepuNetwork& net, std::span<const double> x) {
  if (net.output_dim() != 1) throw InvalidArgument("backprop without seed needs a scalar output");
  const double one = 1.0;
  return backprop(net, x, std::span<const double>(&one, 1));
}

Eigen::MatrixXd input_jacobian(const MixedRepuNetwork& net, std::span<const double> x) {
  Eigen::MatrixXd J(net.output_dim(), net.input_dim());
  std::vector<double> seed(static_cast<size_t>(net.output_dim()), 0.0);
  for (int o = 0; o < net.output_dim(); ++o) {
    seed[static_cast<size_t>(o)] = 1.0;
    J.row(o) = backprop(net, x, seed).input.transpose();
    seed[static_cast<size_t>(o)] = 0.0;
  }
  return J;
}

ArchitectureStats architecture_stats(const MixedRepuNetwork& net) {
  ArchitectureStats s;
  const auto& ls = net.layers();
  s.depth = static_cast<long>(ls.size()) - 1;
  for (size_t k = 0; k < ls.size(); ++k) {
    const Layer& l = ls[k];
    if (k + 1 < ls.size()) {
      s.width = std::max<long>(s.width, l.out_dim());
      s.neurons += l.out_dim();
    }
    s.size += l.out_dim() * (l.in_dim() + 1);
    s.nonzero_size += (l.weights.array() != 0.0).count() + (l.bias.array() != 0.0).count();
  }
  return s;
}

double pdim_bound(double depth, double size, double neurons, double p) {
  if (!(depth >= 1 && size >= 1 && neurons >= 1 && p >= 1))
    throw InvalidArgument("pdim_bound: all arguments must be >= 1");
  return 3.0 * p * depth * size * (depth + std::log2(neurons));
}

}  // namespace repu
