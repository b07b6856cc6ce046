#include <doctest.h>

#include <numeric>

#include "repu/errors.hpp"
#include "repu/estimators.hpp"
#include "repu/simbench.hpp"
#include "test_util.hpp"

using namespace repu;

namespace {

// Best monotone step fit over all 2^(n-1) contiguous partitions.
std::vector<double> brute_isotonic(const std::vector<double>& y) {
  const int n = static_cast<int>(y.size());
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> arg;
  for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
    std::vector<double> fit(n);
    int start = 0;
    double prev = -std::numeric_limits<double>::infinity();
    bool feasible = true;
    for (int i = 0; i < n && feasible; ++i) {
      bool cut = i == n - 1 || (mask >> i & 1u);
      if (!cut) continue;
      double m = 0;
      for (int k = start; k <= i; ++k) m += y[k];
      m /= (i - start + 1);
      if (m < prev) feasible = false;
      for (int k = start; k <= i; ++k) fit[k] = m;
      prev = m;
      start = i + 1;
    }
    if (!feasible) continue;
    double sse = 0;
    for (int i = 0; i < n; ++i) sse += (fit[i] - y[i]) * (fit[i] - y[i]);
    if (sse < best) best = sse, arg = fit;
  }
  return arg;
}

bool leq(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) { return (a.array() <= b.array()).all(); }

// max over u <= x of min over v >= x of the mean on [u, v], and the reverse, by scanning
// every pair of design points directly.
std::pair<double, double> brute_block(const Dataset& data, const Eigen::RowVectorXd& x) {
  const int n = data.n();
  auto mean_on = [&](int u, int v) {
    double s = 0;
    int c = 0;
    for (int i = 0; i < n; ++i)
      if (leq(data.X.row(u), data.X.row(i)) && leq(data.X.row(i), data.X.row(v))) s += data.y(i), ++c;
    return s / c;
  };
  double maxmin = -1e300, minmax = 1e300;
  for (int u = 0; u < n; ++u) {
    if (!leq(data.X.row(u), x)) continue;
    double inner = 1e300;
    for (int v = 0; v < n; ++v)
      if (leq(x, data.X.row(v))) inner = std::min(inner, mean_on(u, v));
    maxmin = std::max(maxmin, inner);
  }
  for (int v = 0; v < n; ++v) {
    if (!leq(x, data.X.row(v))) continue;
    double inner = -1e300;
    for (int u = 0; u < n; ++u)
      if (leq(data.X.row(u), x)) inner = std::max(inner, mean_on(u, v));
    minmax = std::min(minmax, inner);
  }
  return {maxmin, minmax};
}

Dataset lattice3(std::mt19937_64& rng) {
  Dataset data;
  data.X.resize(9, 2);
  data.y.resize(9);
  std::normal_distribution<double> g;
  for (int i = 0; i < 9; ++i) {
    data.X(i, 0) = (i / 3) * 0.5;
    data.X(i, 1) = (i % 3) * 0.5;
    data.y(i) = g(rng);
  }
  return data;
}

double grid_l2(const MixedRepuNetwork& s, double lo, double hi, const std::function<double(double)>& score) {
  Eigen::RowVectorXd g = Eigen::RowVectorXd::LinSpaced(401, lo, hi);
  Eigen::MatrixXd out = forward_batch(s, g);
  double acc = 0;
  for (int i = 0; i < g.size(); ++i) acc += std::pow(out(0, i) - score(g(i)), 2);
  return std::sqrt(acc / g.size());
}

EstimatorConfig quick_config(std::uint64_t seed) {
  EstimatorConfig c;
  c.arch = default_regression_arch();
  c.train.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("pava: small cases") {
  std::vector<double> x{0, 1, 2, 3}, y{1, 2, 2, 5};
  CHECK(pava_fitted(x, y) == y);
  CHECK(pava_fitted(std::vector<double>{0, 1}, std::vector<double>{2, 1}) == std::vector<double>{1.5, 1.5});
  // ties in x are one observation at the pooled mean
  auto tied = pava_fitted(std::vector<double>{0, 1, 1, 2}, std::vector<double>{0, 3, 1, 5});
  CHECK(tied[1] == tied[2]);
  auto step = pava_1d(std::vector<double>{0, 1, 2}, std::vector<double>{1, 3, 2});
  CHECK(step(0.5) == 1.0);   // left-constant between knots
  CHECK(step(1.0) == 2.5);
  CHECK(step(-3.0) == 1.0);  // boundary values outside
  CHECK(step(9.0) == 2.5);
}

TEST_CASE("pava equals brute-force projection") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 500; ++trial) {
    int n = 1 + trial % 8;
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) x[i] = i, y[i] = g(rng);
    auto fit = pava_fitted(x, y);
    auto want = brute_isotonic(y);
    for (int i = 0; i < n; ++i) CHECK(fit[i] == doctest::Approx(want[i]).epsilon(1e-12));
    for (int i = 1; i < n; ++i) CHECK(fit[i - 1] <= fit[i]);
    double m1 = std::accumulate(y.begin(), y.end(), 0.0), m2 = std::accumulate(fit.begin(), fit.end(), 0.0);
    CHECK(m1 == doctest::Approx(m2).epsilon(1e-12));
  }
}

TEST_CASE("block estimator: small cases") {
  Dataset one;
  one.X = Eigen::MatrixXd::Constant(1, 2, 0.3);
  one.y = Eigen::VectorXd::Constant(1, 1.7);
  BlockEstimator b1(one);
  CHECK(b1.predict(std::vector<double>{0.3, 0.3}) == 1.7);

  Dataset line;
  line.X.resize(4, 1);
  line.X << 0, 1, 2, 3;
  line.y.resize(4);
  line.y << 1, 2, 4, 8;
  BlockEstimator b(line);
  for (int i = 0; i < 4; ++i) CHECK(b.predict(std::vector<double>{double(i)}) == doctest::Approx(line.y(i)));
  CHECK_THROWS_AS(b.predict(std::vector<double>{-1.0}), UndefinedQuery);
}

TEST_CASE("block estimator matches exhaustive min-max and max-min on 3x3 lattices") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    auto data = lattice3(rng);
    BlockEstimator be(data);
    for (int q = 0; q < 20; ++q) {
      Eigen::RowVectorXd x(2);
      x << u(rng), u(rng);
      if (q < 9) x = data.X.row(q);
      auto [maxmin, minmax] = brute_block(data, x);
      auto bounds = be.bounds(std::span<const double>(x.data(), 2));
      CHECK(bounds.max_min == doctest::Approx(maxmin).epsilon(1e-12));
      CHECK(bounds.min_max == doctest::Approx(minmax).epsilon(1e-12));
      double pred = be.predict(std::span<const double>(x.data(), 2));
      CHECK(pred >= std::min(maxmin, minmax) - 1e-12);
      CHECK(pred <= std::max(maxmin, minmax) + 1e-12);
    }
    // monotone in the query
    for (int q = 0; q < 20; ++q) {
      double a = u(rng), b = u(rng);
      double lo = be.predict(std::vector<double>{a * 0.5, b * 0.5});
      double hi = be.predict(std::vector<double>{a * 0.5 + 0.4, b * 0.5 + 0.3});
      CHECK(lo <= hi + 1e-12);
    }
  }
}

TEST_CASE("fit_pdir with lambda 0 is fit_dnr") {
  auto data = generate(model_by_name("U-Exp"), 64, 3);
  auto cfg = quick_config(3);
  cfg.train.epochs = 200;
  cfg.lambda = LambdaRule::parse("0");
  auto a = fit_pdir(data, cfg), b = fit_dnr(data, cfg);
  CHECK(*a.net == *b.net);
}

TEST_CASE("fit_dnr: affine target is learned") {
  auto data = generate(model_by_name("U-Linear"), 64, 1);
  data.y = 2 * data.X.col(0);
  auto res = fit_dnr(data, quick_config(1));
  Eigen::VectorXd r = res.predictor->predict_batch(data.X) - data.y;
  CHECK(r.squaredNorm() / 64 <= 1e-3);
}

TEST_CASE("fit_pdir: constant target and the penalty direction on Exp") {
  const auto& cmodel = model_by_name("U-Constant");
  auto cfg = quick_config(11);
  auto res = fit_pdir(generate(cmodel, 256, 11), cfg);
  auto row = metrics(*res.predictor, cmodel, 100, 99);
  CHECK(row.l2 <= 0.1);

  auto exp_data = generate(model_by_name("U-Exp"), 256, 12);
  auto with = fit_pdir(exp_data, quick_config(12));
  auto without = fit_dnr(exp_data, quick_config(12));
  CHECK(with.monotonicity.mean_penalty[0] <= without.monotonicity.mean_penalty[0]);
}

TEST_CASE("fit_dsme: shifted normal") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(1.0, 2.0);
  Dataset data;
  data.X.resize(2000, 1);
  for (int i = 0; i < 2000; ++i) data.X(i, 0) = g(rng);
  EstimatorConfig cfg;
  cfg.arch = default_score_arch();
  cfg.train.seed = 5;
  auto res = fit_dsme(data, cfg);
  CHECK(grid_l2(*res.net, -3, 5, [](double x) { return (1 - x) / 4; }) <= 0.15);
}

TEST_CASE("fit_dsme: Fisher divergence decreases on a mixture") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  std::bernoulli_distribution coin(0.5);
  auto draw = [&](int n) {
    Eigen::MatrixXd X(n, 1);
    for (int i = 0; i < n; ++i) X(i, 0) = g(rng) + (coin(rng) ? 1.5 : -1.5);
    return X;
  };
  auto score = [](double x) {
    double a = std::exp(-0.5 * (x - 1.5) * (x - 1.5)), b = std::exp(-0.5 * (x + 1.5) * (x + 1.5));
    return (-(x - 1.5) * a - (x + 1.5) * b) / (a + b);
  };
  Dataset data;
  data.X = draw(2000);
  Eigen::MatrixXd test = draw(20000);
  EstimatorConfig cfg;
  cfg.arch = default_score_arch();
  cfg.train.seed = 6;
  std::vector<double> fisher;
  for (int epochs : {0, 100, 300, 1000, 2000}) {
    cfg.train.epochs = epochs;
    auto res = fit_dsme(data, cfg);
    Eigen::MatrixXd s = forward_batch(*res.net, test.transpose());
    double acc = 0;
    for (int i = 0; i < test.rows(); ++i) acc += 0.5 * std::pow(s(0, i) - score(test(i, 0)), 2);
    fisher.push_back(acc / test.rows());
  }
  for (size_t k = 1; k < fisher.size(); ++k) CHECK(fisher[k] <= fisher[k - 1] + 0.01);
  CHECK(fisher.back() < 0.5 * fisher.front());
}

TEST_CASE("fit_method dispatch") {
  auto data = generate(model_by_name("U-Step"), 32, 2);
  CHECK(fit_method("pava", data, {}).method == "pava");
  CHECK(fit_method("block", data, {}).method == "block");
  CHECK_THROWS_AS(fit_method("lasso", data, {}), InvalidArgument);
  auto d2 = generate(model_by_name("B-Step"), 16, 2);
  CHECK_THROWS_AS(fit_pava(d2), InvalidArgument);
}
