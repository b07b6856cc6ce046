#include "repu/net_builder.hpp"

#include <cmath>
#include <mutex>
#include <string>

#include "repu/errors.hpp"

namespace repu {

namespace {

void check_same_level(const Signal& a, const Signal& b) {
  if (!a.is_constant() && !b.is_constant() && a.level != b.level)
    throw InvalidArgument("combining signals from levels " + std::to_string(a.level) + " and " +
                          std::to_string(b.level));
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Inverse of V[k-1][i-1] = C(p,k) t_i^{p-k}, t_i = i, cached per p.
const Eigen::MatrixXd& vandermonde_inverse(int p) {
  static std::mutex mu;
  static std::map<int, Eigen::MatrixXd> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(p);
  if (it != cache.end()) return it->second;
  Eigen::MatrixXd V(p, p);
  for (int k = 1; k <= p; ++k)
    for (int i = 1; i <= p; ++i) V(k - 1, i - 1) = binom(p, k) * std::pow(double(i), p - k);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(V);
  if (!lu.isInvertible()) throw NumericalError("shallow block: singular Vandermonde system");
  return cache.emplace(p, lu.inverse()).first->second;
}

}  // namespace

Signal& Signal::operator+=(const Signal& o) {
  check_same_level(*this, o);
  if (is_constant()) level = o.level;
  for (const auto& [i, c] : o.terms) {
    double& s = terms[i];
    s += c;
    if (s == 0.0) terms.erase(i);
  }
  constant += o.constant;
  return *this;
}

Signal& Signal::operator*=(double c) {
  if (c == 0.0) terms.clear();
  for (auto& [i, w] : terms) w *= c;
  constant *= c;
  return *this;
}

Signal operator+(Signal a, const Signal& b) { return a += b; }
Signal operator-(Signal a, const Signal& b) { return a += -1.0 * b; }
Signal operator*(double c, Signal s) { return s *= c; }

std::vector<double> shallow_readout_weights(std::span<const double> coeffs, int p) {
  if (p < 2) throw InvalidArgument("shallow block needs p >= 2");
  if (static_cast<int>(coeffs.size()) > p + 1)
    throw InvalidArgument("shallow block: degree " + std::to_string(coeffs.size() - 1) + " exceeds p");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
  for (int k = 1; k < static_cast<int>(coeffs.size()); ++k) rhs(k - 1) = coeffs[static_cast<size_t>(k)];
  Eigen::VectorXd u = vandermonde_inverse(p) * rhs;
  std::vector<double> out(u.data(), u.data() + p);
  double u0 = coeffs.empty() ? 0.0 : coeffs[0];
  for (int i = 1; i <= p; ++i) u0 -= u(i - 1) * std::pow(double(i), p);
  out.push_back(u0);
  return out;
}

Signal ShallowBlock::readout(std::span<const double> coeffs) const {
  auto u = shallow_readout_weights(coeffs, p_);
  double sign = p_ % 2 == 0 ? 1.0 : -1.0;
  Signal s{level_, {}, u.back()};
  for (int i = 0; i < p_; ++i) {
    if (u[static_cast<size_t>(i)] == 0.0) continue;
    s.terms[plus_[static_cast<size_t>(i)]] += u[static_cast<size_t>(i)];
    s.terms[minus_[static_cast<size_t>(i)]] += sign * u[static_cast<size_t>(i)];
  }
  return s;
}

Signal ShallowBlock::identity() const {
  const double a[] = {0.0, 1.0};
  return readout(a);
}

Signal ShallowBlock::square() const {
  const double a[] = {0.0, 0.0, 1.0};
  return readout(a);
}

NetBuilder::NetBuilder(int input_dim, int p) : input_dim_(input_dim), p_(p) {
  if (input_dim < 1) throw InvalidArgument("builder needs input_dim >= 1");
  if (p < 1) throw InvalidArgument("builder needs p >= 1");
}

int NetBuilder::width(int level) const {
  return level == 0 ? input_dim_ : static_cast<int>(levels_[static_cast<size_t>(level - 1)].size());
}

Signal NetBuilder::input(int j) const {
  if (j < 0 || j >= input_dim_) throw InvalidArgument("input index out of range");
  return Signal{0, {{j, 1.0}}, 0.0};
}

Signal NetBuilder::neuron(int level, const Signal& in, int t) {
  if (level < 1) throw InvalidArgument("neurons live on levels >= 1");
  if (!in.is_constant() && in.level != level - 1)
    throw InvalidArgument("neuron on level " + std::to_string(level) + " fed from level " + std::to_string(in.level));
  while (top_level() < level) levels_.emplace_back();
  auto& rows = levels_[static_cast<size_t>(level - 1)];
  rows.push_back(Row{in.terms, in.constant, t});
  return Signal{level, {{static_cast<int>(rows.size()) - 1, 1.0}}, 0.0};
}

ShallowBlock NetBuilder::shallow(const Signal& s) {
  ShallowBlock b;
  b.level_ = s.level + 1;
  b.p_ = p_;
  for (int i = 1; i <= p_; ++i) {
    b.plus_.push_back(neuron(b.level_, s + Signal::constant_value(i), p_).terms.begin()->first);
    b.minus_.push_back(neuron(b.level_, -1.0 * (s + Signal::constant_value(i)), p_).terms.begin()->first);
  }
  return b;
}

Signal NetBuilder::power_block(const Signal& s) {
  int level = s.level + 1;
  Signal a = neuron(level, s, p_);
  Signal b = neuron(level, -1.0 * s, p_);
  return a + (p_ % 2 == 0 ? 1.0 : -1.0) * b;
}

Signal NetBuilder::carry(const Signal& s, int level) {
  if (s.is_constant()) return s;
  if (s.level > level) throw InvalidArgument("cannot carry a signal downwards");
  Signal cur = s;
  while (cur.level < level) cur = shallow(cur).identity();
  return cur;
}

MixedRepuNetwork NetBuilder::build(std::vector<Signal> outputs) {
  if (outputs.empty()) throw InvalidArgument("network needs at least one output");
  int top = top_level();
  for (auto& o : outputs) o = carry(o, top);

  std::vector<Layer> layers;
  for (int l = 1; l <= top; ++l) {
    const auto& rows = levels_[static_cast<size_t>(l - 1)];
    Layer layer;
    layer.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), width(l - 1));
    layer.bias.resize(static_cast<Eigen::Index>(rows.size()));
    for (size_t r = 0; r < rows.size(); ++r) {
      for (const auto& [c, w] : rows[r].weights) layer.weights(static_cast<Eigen::Index>(r), c) = w;
      layer.bias(static_cast<Eigen::Index>(r)) = rows[r].bias;
      layer.powers.emplace_back(rows[r].power);
    }
    layers.push_back(std::move(layer));
  }
  Layer out;
  out.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(outputs.size()), width(top));
  out.bias.resize(static_cast<Eigen::Index>(outputs.size()));
  for (size_t r = 0; r < outputs.size(); ++r) {
    for (const auto& [c, w] : outputs[r].terms) out.weights(static_cast<Eigen::Index>(r), c) = w;
    out.bias(static_cast<Eigen::Index>(r)) = outputs[r].constant;
  }
  out.powers.assign(outputs.size(), ActivationPower::linear());
  layers.push_back(std::move(out));
  return MixedRepuNetwork(std::move(layers));
}

}  // namespace repu
