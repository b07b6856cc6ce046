#include "repu/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace repu {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Eigen::VectorXd Predictor::predict_batch(const MatrixXd& X) const {
  VectorXd out(X.rows());
  std::vector<double> x(static_cast<size_t>(X.cols()));
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) x[static_cast<size_t>(j)] = X(i, j);
    out(i) = predict(x);
  }
  return out;
}

NetworkPredictor::NetworkPredictor(MixedRepuNetwork net, int output) : net_(std::move(net)), output_(output) {
  if (output < 0 || output >= net_.output_dim()) throw InvalidArgument("predictor output index out of range");
}

double NetworkPredictor::predict(std::span<const double> x) const { return forward(net_, x)(output_); }

Eigen::VectorXd NetworkPredictor::predict_batch(const MatrixXd& X) const {
  return forward_batch(net_, X.transpose()).row(output_).transpose();
}

StepFunction::StepFunction(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.empty() || knots_.size() != values_.size()) throw InvalidArgument("step function needs matching knots");
  if (!std::is_sorted(knots_.begin(), knots_.end())) throw InvalidArgument("step function knots must be sorted");
}

double StepFunction::operator()(double x) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  if (it == knots_.begin()) return values_.front();
  return values_[static_cast<size_t>(it - knots_.begin() - 1)];
}

double StepFunction::predict(std::span<const double> x) const {
  if (x.size() != 1) throw InvalidArgument("step function takes scalar input");
  return (*this)(x[0]);
}

namespace {

struct Pool {
  double sum_wy, w;
  size_t count;  // number of tie-pooled knots
  double mean() const { return sum_wy / w; }
};

// PAVA on weighted points; returns a value per point.
std::vector<double> pava_weighted(std::span<const double> y, std::span<const double> w) {
  std::vector<Pool> st;
  for (size_t i = 0; i < y.size(); ++i) {
    st.push_back({y[i] * w[i], w[i], 1});
    while (st.size() > 1 && st[st.size() - 2].mean() > st.back().mean()) {
      Pool top = st.back();
      st.pop_back();
      st.back().sum_wy += top.sum_wy;
      st.back().w += top.w;
      st.back().count += top.count;
    }
  }
  std::vector<double> out;
  for (const auto& p : st) out.insert(out.end(), p.count, p.mean());
  return out;
}

void tie_pool(std::span<const double> x, std::span<const double> y, std::vector<double>& ux, std::vector<double>& uy,
              std::vector<double>& uw) {
  if (x.empty()) throw InvalidArgument("isotonic fit of empty data");
  if (x.size() != y.size()) throw InvalidArgument("x and y lengths differ");
  for (size_t i = 1; i < x.size(); ++i)
    if (x[i] < x[i - 1]) throw InvalidArgument("pava_1d needs x sorted ascending");
  for (size_t i = 0; i < x.size();) {
    size_t k = i;
    double s = 0.0;
    while (k < x.size() && x[k] == x[i]) s += y[k++];
    ux.push_back(x[i]);
    uy.push_back(s / static_cast<double>(k - i));
    uw.push_back(static_cast<double>(k - i));
    i = k;
  }
}

bool precedes(const MatrixXd& X, Index a, std::span<const double> x) {
  for (Index j = 0; j < X.cols(); ++j)
    if (X(a, j) > x[static_cast<size_t>(j)]) return false;
  return true;
}

bool follows(const MatrixXd& X, Index a, std::span<const double> x) {
  for (Index j = 0; j < X.cols(); ++j)
    if (X(a, j) < x[static_cast<size_t>(j)]) return false;
  return true;
}

}  // namespace

StepFunction pava_1d(std::span<const double> x, std::span<const double> y) {
  std::vector<double> ux, uy, uw;
  tie_pool(x, y, ux, uy, uw);
  return StepFunction(ux, pava_weighted(uy, uw));
}

std::vector<double> pava_fitted(std::span<const double> x, std::span<const double> y) {
  StepFunction f = pava_1d(x, y);
  std::vector<double> out;
  for (double xi : x) out.push_back(f(xi));
  return out;
}

BlockEstimator::BlockEstimator(const Dataset& train) : X_(train.X) {
  if (train.n() == 0 || !train.labeled()) throw InvalidArgument("block estimator needs labeled data");
  const Index n = X_.rows();
  mean_ = MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> lo(static_cast<size_t>(X_.cols())), hi(lo.size());
  for (Index u = 0; u < n; ++u)
    for (Index v = 0; v < n; ++v) {
      bool ok = true;
      for (Index j = 0; j < X_.cols() && ok; ++j) ok = X_(u, j) <= X_(v, j);
      if (!ok) continue;
      double s = 0.0;
      int c = 0;
      for (Index i = 0; i < n; ++i) {
        bool in = true;
        for (Index j = 0; j < X_.cols() && in; ++j) in = X_(u, j) <= X_(i, j) && X_(i, j) <= X_(v, j);
        if (in) {
          s += train.y(i);
          ++c;
        }
      }
      mean_(u, v) = s / c;
    }
}

BlockEstimator::Bounds BlockEstimator::bounds(std::span<const double> x) const {
  if (static_cast<Index>(x.size()) != X_.cols()) throw InvalidArgument("query has wrong dimension");
  std::vector<Index> lower, upper;
  for (Index a = 0; a < X_.rows(); ++a) {
    if (precedes(X_, a, x)) lower.push_back(a);
    if (follows(X_, a, x)) upper.push_back(a);
  }
  if (lower.empty() || upper.empty())
    throw UndefinedQuery("block estimator is undefined outside the design envelope");
  const double inf = std::numeric_limits<double>::infinity();
  double max_min = -inf;
  for (Index u : lower) {
    double m = inf;
    for (Index v : upper) m = std::min(m, mean_(u, v));
    max_min = std::max(max_min, m);
  }
  double min_max = inf;
  for (Index v : upper) {
    double m = -inf;
    for (Index u : lower) m = std::max(m, mean_(u, v));
    min_max = std::min(min_max, m);
  }
  return {max_min, min_max};
}

double BlockEstimator::predict(std::span<const double> x) const {
  Bounds b = bounds(x);
  return 0.5 * (b.max_min + b.min_max);
}

MonotonicitySummary monotonicity_summary(const MixedRepuNetwork& f, const MatrixXd& X) {
  MatrixXd G = input_gradients(f, X);
  MonotonicitySummary s;
  PenaltySpec hinge;
  for (Index j = 0; j < G.cols(); ++j) {
    double pen = 0.0;
    int neg = 0;
    for (Index i = 0; i < G.rows(); ++i) {
      pen += penalty_eval(hinge, G(i, j));
      neg += G(i, j) < 0;
    }
    s.mean_penalty.push_back(pen / static_cast<double>(G.rows()));
    s.frac_negative.push_back(static_cast<double>(neg) / static_cast<double>(G.rows()));
  }
  return s;
}

namespace {

FitResult fit_regression_net(const std::string& method, const Dataset& data, const EstimatorConfig& config,
                             std::vector<double> lambda) {
  if (!data.labeled()) throw InvalidArgument(method + " needs responses");
  if (data.n() < 2) throw InvalidArgument(method + " needs n >= 2");
  TrainConfig tc = config.train;
  tc.lambda = lambda;
  VectorXd centre = data.X.colwise().mean().transpose();
  MixedRepuNetwork net0 = init_network(config.arch, data.d(), 1, tc.seed,
                                       std::span<const double>(centre.data(), static_cast<size_t>(centre.size())));
  TrainResult tr = train(net0, data, LossKind::pdir, tc);
  FitResult r;
  r.method = method;
  r.lambda = std::move(lambda);
  r.history = std::move(tr.history);
  r.initial_loss = tr.initial_loss;
  r.final_loss = tr.final_loss;
  r.monotonicity = monotonicity_summary(tr.net, data.X);
  r.predictor = std::make_shared<NetworkPredictor>(tr.net);
  r.net = std::move(tr.net);
  return r;
}

}  // namespace

FitResult fit_pdir(const Dataset& data, const EstimatorConfig& config) {
  return fit_regression_net("pdir", data, config, config.lambda.resolve(data.n(), data.d()));
}

FitResult fit_dnr(const Dataset& data, const EstimatorConfig& config) {
  return fit_regression_net("dnr", data, config, std::vector<double>(static_cast<size_t>(data.d()), 0.0));
}

FitResult fit_dsme(const Dataset& data, const EstimatorConfig& config) {
  if (data.n() < 1) throw InvalidArgument("dsme needs data");
  TrainConfig tc = config.train;
  tc.lambda.clear();
  VectorXd centre = data.X.colwise().mean().transpose();
  MixedRepuNetwork net0 = init_network(config.arch, data.d(), data.d(), tc.seed,
                                       std::span<const double>(centre.data(), static_cast<size_t>(centre.size())));
  Dataset unlabeled{data.X, {}, data.generator, data.seed};
  TrainResult tr = train(net0, unlabeled, LossKind::dsme, tc);
  FitResult r;
  r.method = "dsme";
  r.history = std::move(tr.history);
  r.initial_loss = tr.initial_loss;
  r.final_loss = tr.final_loss;
  r.predictor = std::make_shared<NetworkPredictor>(tr.net);
  r.net = std::move(tr.net);
  return r;
}

FitResult fit_pava(const Dataset& data) {
  if (data.d() != 1) throw InvalidArgument("pava is univariate; use block for d >= 2");
  if (!data.labeled() || data.n() == 0) throw InvalidArgument("pava needs labeled data");
  std::vector<int> order(static_cast<size_t>(data.n()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return data.X(a, 0) < data.X(b, 0); });
  std::vector<double> x, y;
  for (int i : order) {
    x.push_back(data.X(i, 0));
    y.push_back(data.y(i));
  }
  FitResult r;
  r.method = "pava";
  r.predictor = std::make_shared<StepFunction>(pava_1d(x, y));
  return r;
}

FitResult fit_block(const Dataset& data) {
  FitResult r;
  r.method = "block";
  r.predictor = std::make_shared<BlockEstimator>(data);
  return r;
}

FitResult fit_method(const std::string& method, const Dataset& data, const EstimatorConfig& config) {
  if (method == "pdir") return fit_pdir(data, config);
  if (method == "dnr") return fit_dnr(data, config);
  if (method == "dsme") return fit_dsme(data, config);
  if (method == "pava") return fit_pava(data);
  if (method == "block") return fit_block(data);
  throw InvalidArgument("unknown method '" + method + "' (pdir|dnr|dsme|pava|block)");
}

}  // namespace repu
