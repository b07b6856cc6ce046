#include <doctest.h>

#include "repu/errors.hpp"
#include "repu/serialize.hpp"
#include "test_util.hpp"

using namespace repu;
using repu::testing::random_net;
using repu::testing::random_point;
using repu::testing::square_net;

TEST_CASE("repu values and kink") {
  CHECK(repu::repu(-1.5, 2) == 0.0);
  CHECK(repu::repu(2.0, 3) == 8.0);
  CHECK(repu::repu(0.0, 2) == 0.0);
  CHECK(repu_derivative(0.0, 2) == 0.0);
  // one-sided difference quotients at 0 both vanish for t >= 2
  const double h = 1e-7;
  CHECK(std::abs(repu::repu(h, 2) / h) < 1e-6);
  CHECK(std::abs(repu::repu(-h, 2) / h) < 1e-6);
  CHECK_THROWS_AS(repu::repu(1.0, 0), InvalidArgument);
}

TEST_CASE("forward on hand-built nets") {
  auto sq = square_net();
  CHECK(forward(sq, Eigen::VectorXd::Constant(1, 3.0))(0) == 9.0);

  Layer h{Eigen::MatrixXd(2, 1), Eigen::VectorXd::Zero(2), {ActivationPower(1), ActivationPower(1)}};
  h.weights << 1, -1;
  Layer o{Eigen::MatrixXd(1, 2), Eigen::VectorXd::Zero(1), {ActivationPower::linear()}};
  o.weights << 1, -1;
  MixedRepuNetwork id({h, o});
  CHECK(forward(id, Eigen::VectorXd::Constant(1, -4.0))(0) == -4.0);
}

TEST_CASE("forward is deterministic and batch agrees") {
  std::mt19937_64 rng(3);
  auto net = random_net(rng, 3, 3, 2, 5);
  Eigen::MatrixXd X(3, 20);
  for (int i = 0; i < 20; ++i) X.col(i) = random_point(rng, 3);
  Eigen::MatrixXd Y = forward_batch(net, X);
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd x = X.col(i);
    CHECK(forward(net, x)(0) == forward(net, x)(0));
    CHECK(std::abs(forward(net, x)(0) - Y(0, i)) <= 1e-12 * (1 + std::abs(Y(0, i))));
  }
}

TEST_CASE("network validation") {
  CHECK_THROWS_AS(MixedRepuNetwork(std::vector<Layer>{}), InvalidArgument);
  Layer bad{Eigen::MatrixXd::Constant(1, 1, std::nan("")), Eigen::VectorXd::Zero(1), {ActivationPower::linear()}};
  CHECK_THROWS_AS(MixedRepuNetwork({bad}), NumericalError);
  Layer hidden_linear{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1), {ActivationPower::linear()}};
  Layer o{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1), {ActivationPower::linear()}};
  CHECK_THROWS_AS(MixedRepuNetwork({hidden_linear, o}), InvalidArgument);
  Layer wrong{Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Zero(1), {ActivationPower::linear()}};
  CHECK_THROWS_AS(MixedRepuNetwork({square_net().layers()[0], o, wrong}), InvalidArgument);
}

TEST_CASE("backprop: hand cases") {
  auto g = backprop(square_net(), std::vector<double>{3.0});
  CHECK(g.input(0) == doctest::Approx(6.0));

  std::mt19937_64 rng(1);
  auto net = random_net(rng, 2, 2, 2);
  std::vector<double> zero(net.parameter_count(), 0.0);
  auto c = net.with_parameters(zero);
  auto gc = backprop(c, std::vector<double>{0.3, -0.2});
  CHECK(gc.input.norm() == 0.0);
  // every parameter gradient vanishes except d f / d (output bias) = 1
  for (size_t k = 0; k + 1 < gc.params.size(); ++k) CHECK(gc.params[k] == 0.0);
  CHECK(gc.params.back() == 1.0);
}

TEST_CASE("backprop matches central differences") {
  std::mt19937_64 rng(11);
  const double h = 1e-5;
  double worst_in = 0, worst_par = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int p = 2 + trial % 2, d = 1 + trial % 3, depth = 1 + trial % 3;
    auto net = random_net(rng, d, depth, p);
    Eigen::VectorXd x = random_point(rng, d);
    if (trial % 10 == 0) x(0) = 0.0;  // coordinate exactly 0
    auto g = backprop(net, x);
    for (int j = 0; j < d; ++j) {
      Eigen::VectorXd a = x, b = x;
      a(j) += h;
      b(j) -= h;
      double fd = (forward(net, a)(0) - forward(net, b)(0)) / (2 * h);
      double floor = 1e-10 * std::max(1.0, std::abs(forward(net, x)(0)));
      double scale = std::max({1.0, std::abs(fd), std::abs(g.input(j))});
      worst_in = std::max(worst_in, std::max(0.0, std::abs(fd - g.input(j)) - floor) / scale);
    }
    // the difference quotient itself carries roundoff of order eps |f| / h
    double floor = 1e-10 * std::max(1.0, std::abs(forward(net, x)(0)));
    auto theta = net.parameters();
    for (size_t k = 0; k < theta.size(); ++k) {
      auto tp = theta, tm = theta;
      tp[k] += h;
      tm[k] -= h;
      double fd = (forward(net.with_parameters(tp), x)(0) - forward(net.with_parameters(tm), x)(0)) / (2 * h);
      double scale = std::max({1.0, std::abs(fd), std::abs(g.params[k])});
      worst_par = std::max(worst_par, std::max(0.0, std::abs(fd - g.params[k]) - floor) / scale);
    }
  }
  CHECK(worst_in <= 1e-6);
  CHECK(worst_par <= 1e-6);
}

TEST_CASE("input_jacobian rows equal per-output backprop") {
  std::mt19937_64 rng(5);
  auto net = random_net(rng, 3, 2, 3, 4, 2);
  Eigen::VectorXd x = random_point(rng, 3);
  Eigen::MatrixXd J = input_jacobian(net, x);
  for (int o = 0; o < 2; ++o) {
    auto g = backprop(net.output_head(o), x);
    CHECK((J.row(o).transpose() - g.input).norm() <= 1e-12);
  }
}

TEST_CASE("architecture_stats") {
  auto s = architecture_stats(square_net());
  CHECK(s.depth == 1);
  CHECK(s.width == 2);
  CHECK(s.neurons == 2);
  CHECK(s.size == 7);

  Layer affine{Eigen::MatrixXd::Ones(1, 4), Eigen::VectorXd::Zero(1), {ActivationPower::linear()}};
  auto a = architecture_stats(MixedRepuNetwork({affine}));
  CHECK(a.depth == 0);
  CHECK(a.neurons == 0);
  CHECK(a.size == 5);

  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    auto net = random_net(rng, 3, 3, 2, 6);
    long size = 0;
    for (const auto& l : net.layers()) size += l.out_dim() * (l.in_dim() + 1);
    CHECK(architecture_stats(net).size == size);
  }
}

TEST_CASE("pdim_bound") {
  // 3 * 2 * 2 * 10 * (2 + log2 5) = 120 * 4.3219...
  CHECK(pdim_bound(2, 10, 5, 2) == doctest::Approx(120 * (2 + std::log2(5.0))));
  CHECK(pdim_bound(2, 10, 5, 2) == doctest::Approx(518.63).epsilon(1e-5));
  CHECK(pdim_bound(1, 1, 1, 1) == 3.0);
  CHECK(pdim_bound(3, 20, 7, 2) == doctest::Approx(2 * pdim_bound(3, 10, 7, 2)));
  double base = pdim_bound(2, 10, 5, 2);
  CHECK(pdim_bound(2.5, 10, 5, 2) > base);
  CHECK(pdim_bound(2, 10.5, 5, 2) > base);
  CHECK(pdim_bound(2, 10, 5.5, 2) > base);
  CHECK(pdim_bound(2, 10, 5, 2.5) > base);
  CHECK_THROWS_AS(pdim_bound(0.5, 1, 1, 1), InvalidArgument);
}

TEST_CASE("serialization round trip and errors") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    auto net = random_net(rng, 1 + t % 3, t % 4, 2 + t % 2, 5, 1 + t % 2);
    CHECK(deserialize(serialize(net)) == net);
  }
  MixedRepuNetwork with_bounds(square_net().layers(), DeclaredBounds{2.0, 3.0});
  auto back = deserialize(serialize(with_bounds));
  REQUIRE(back.declared_bounds().has_value());
  CHECK(back.declared_bounds()->partial == 3.0);

  std::string empty_layer =
      R"({"format_version":1,"input_dim":1,"declared_bounds":null,"layers":[{"rows":0,"cols":1,"weights":[],"bias":[],"powers":[]}]})";
  CHECK_THROWS_AS(deserialize(empty_layer), FormatError);
  std::string nan_weight =
      R"({"format_version":1,"input_dim":1,"declared_bounds":null,"layers":[{"rows":1,"cols":1,"weights":[NaN],"bias":[0],"powers":[0]}]})";
  CHECK_THROWS_AS(deserialize(nan_weight), FormatError);
  std::string null_weight =
      R"({"format_version":1,"input_dim":1,"declared_bounds":null,"layers":[{"rows":1,"cols":1,"weights":[null],"bias":[0],"powers":[0]}]})";
  CHECK_THROWS_AS(deserialize(null_weight), FormatError);
  CHECK_THROWS_AS(deserialize(R"({"format_version":2,"layers":[]})"), FormatError);
}
