#include "repu/training.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <random>
#include <sstream>

#include "fmt_double.hpp"

namespace repu {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double PenaltySpec::kappa() const {
  if (kind == PenaltyKind::hinge) return 1.0;
  return clip > 0 ? 2.0 * clip : std::numeric_limits<double>::infinity();
}

PenaltySpec parse_penalty(const std::string& s) {
  PenaltySpec p;
  if (s == "hinge") return p;
  if (s == "squared_hinge" || s == "squared-hinge") {
    p.kind = PenaltyKind::squared_hinge;
    return p;
  }
  const std::string pre = "squared_hinge:clip=";
  if (s.rfind(pre, 0) == 0) {
    p.kind = PenaltyKind::squared_hinge;
    p.clip = std::stod(s.substr(pre.size()));
    if (!(p.clip > 0)) throw InvalidArgument("penalty clip must be positive");
    return p;
  }
  throw InvalidArgument("unknown penalty '" + s + "' (hinge|squared_hinge[:clip=c])");
}

std::string to_string(const PenaltySpec& p) {
  if (p.kind == PenaltyKind::hinge) return "hinge";
  return p.clip > 0 ? "squared_hinge:clip=" + format_double(p.clip) : "squared_hinge";
}

double penalty_eval(const PenaltySpec& rho, double x) {
  double m = x < 0 ? -x : 0.0;
  if (rho.kind == PenaltyKind::hinge) return m;
  if (rho.clip > 0 && m > rho.clip) return rho.clip * (2.0 * m - rho.clip);  // linear beyond the clip
  return m * m;
}

double penalty_grad(const PenaltySpec& rho, double x) {
  if (x >= 0) return 0.0;
  if (rho.kind == PenaltyKind::hinge) return -1.0;
  double m = -x;
  if (rho.clip > 0 && m > rho.clip) return -2.0 * rho.clip;
  return -2.0 * m;
}

LossKind parse_loss_kind(const std::string& s) {
  if (s == "pdir") return LossKind::pdir;
  if (s == "dsme") return LossKind::dsme;
  throw InvalidArgument("unknown loss '" + s + "' (pdir|dsme)");
}

std::string to_string(LossKind k) { return k == LossKind::pdir ? "pdir" : "dsme"; }

void TrainConfig::validate() const {
  if (!(lr > 0)) throw InvalidArgument("lr must be > 0");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw InvalidArgument("Adam betas must lie in [0, 1)");
  if (!(eps > 0)) throw InvalidArgument("Adam epsilon must be > 0");
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (batch_size < 0) throw InvalidArgument("batch size must be >= 0");
  for (double l : lambda)
    if (!(l >= 0) || !std::isfinite(l)) throw InvalidArgument("lambda entries must be finite and >= 0");
  if (!(divergence_factor > 0)) throw InvalidArgument("divergence factor must be > 0");
}

namespace {

Eigen::Map<const VectorXd> row_view(const MatrixXd& X, Index r, VectorXd& buf) {
  buf = X.row(r).transpose();
  return Eigen::Map<const VectorXd>(buf.data(), buf.size());
}

void check_lambda(std::span<const double> lambda, int d) {
  if (static_cast<int>(lambda.size()) != d)
    throw InvalidArgument("lambda has length " + std::to_string(lambda.size()) + ", data has d = " + std::to_string(d));
}

// Per-hidden-layer values with their first and second derivatives, and the
// forward tangents d(.)/dx_j for the coordinates in `coords`.
struct Tape {
  std::vector<int> coords;
  std::vector<MatrixXd> act;  // act[0] = X^T, act[k] = output of hidden layer k
  std::vector<MatrixXd> s1, s2;
  std::vector<std::vector<MatrixXd>> ztan, tan;  // per hidden layer, per coordinate
  MatrixXd y;
  std::vector<MatrixXd> ytan;
};

void activate(const MatrixXd& z, const std::vector<ActivationPower>& powers, bool second, MatrixXd& a, MatrixXd& s1,
              MatrixXd& s2) {
  a.resize(z.rows(), z.cols());
  s1.resize(z.rows(), z.cols());
  if (second) s2.resize(z.rows(), z.cols());
  for (Index c = 0; c < z.cols(); ++c)
    for (Index r = 0; r < z.rows(); ++r) {
      const int t = powers[static_cast<size_t>(r)].value();
      const double v = z(r, c);
      if (v <= 0.0) {
        a(r, c) = s1(r, c) = 0.0;
        if (second) s2(r, c) = 0.0;
      } else if (t == 2) {
        a(r, c) = v * v;
        s1(r, c) = 2.0 * v;
        if (second) s2(r, c) = 2.0;
      } else {
        a(r, c) = apply_power(v, t);
        s1(r, c) = apply_power_derivative(v, t);
        if (second) s2(r, c) = apply_power_second_derivative(v, t);
      }
    }
}

Tape run_forward(const MixedRepuNetwork& net, const MatrixXd& X, std::vector<int> coords) {
  const auto& ls = net.layers();
  const Index n = X.rows();
  Tape tp;
  tp.coords = std::move(coords);
  const size_t nj = tp.coords.size();
  tp.act.push_back(X.transpose());
  for (size_t k = 0; k + 1 < ls.size(); ++k) {
    const Layer& l = ls[k];
    MatrixXd z = l.weights * tp.act.back();
    z.colwise() += l.bias;
    MatrixXd a, s1, s2;
    activate(z, l.powers, nj > 0, a, s1, s2);
    std::vector<MatrixXd> zt(nj), t(nj);
    for (size_t jj = 0; jj < nj; ++jj) {
      if (k == 0)
        zt[jj] = l.weights.col(tp.coords[jj]).replicate(1, n);
      else
        zt[jj] = l.weights * tp.tan.back()[jj];
      t[jj] = s1.cwiseProduct(zt[jj]);
    }
    tp.act.push_back(std::move(a));
    tp.s1.push_back(std::move(s1));
    tp.s2.push_back(std::move(s2));
    tp.ztan.push_back(std::move(zt));
    tp.tan.push_back(std::move(t));
  }
  const Layer& o = ls.back();
  tp.y = o.weights * tp.act.back();
  tp.y.colwise() += o.bias;
  tp.ytan.resize(nj);
  for (size_t jj = 0; jj < nj; ++jj)
    tp.ytan[jj] = ls.size() == 1 ? MatrixXd(o.weights.col(tp.coords[jj]).replicate(1, n))
                                 : MatrixXd(o.weights * tp.tan.back()[jj]);
  return tp;
}

// Reverse sweep for seeds on y and on each output tangent.
std::vector<double> run_reverse(const MixedRepuNetwork& net, const Tape& tp, const MatrixXd& ybar,
                                const std::vector<MatrixXd>& ytbar) {
  const auto& ls = net.layers();
  const size_t nj = tp.coords.size();
  std::vector<MatrixXd> gw(ls.size());
  std::vector<VectorXd> gb(ls.size());

  auto accumulate = [&](size_t k, const MatrixXd& zbar, const std::vector<MatrixXd>& ztbar) {
    gw[k] = zbar * tp.act[k].transpose();
    gb[k] = zbar.rowwise().sum();
    for (size_t jj = 0; jj < nj; ++jj) {
      if (k == 0)
        gw[k].col(tp.coords[jj]) += ztbar[jj].rowwise().sum();
      else
        gw[k].noalias() += ztbar[jj] * tp.tan[k - 1][jj].transpose();
    }
  };

  size_t last = ls.size() - 1;
  accumulate(last, ybar, ytbar);
  MatrixXd abar = ls[last].weights.transpose() * ybar;
  std::vector<MatrixXd> tbar(nj);
  for (size_t jj = 0; jj < nj; ++jj) tbar[jj] = ls[last].weights.transpose() * ytbar[jj];

  for (size_t k = last; k-- > 0;) {
    MatrixXd zbar = tp.s1[k].cwiseProduct(abar);
    std::vector<MatrixXd> ztbar(nj);
    for (size_t jj = 0; jj < nj; ++jj) {
      zbar += tp.s2[k].cwiseProduct(tp.ztan[k][jj]).cwiseProduct(tbar[jj]);
      ztbar[jj] = tp.s1[k].cwiseProduct(tbar[jj]);
    }
    accumulate(k, zbar, ztbar);
    if (k > 0) {
      abar = ls[k].weights.transpose() * zbar;
      for (size_t jj = 0; jj < nj; ++jj) tbar[jj] = ls[k].weights.transpose() * ztbar[jj];
    }
  }

  std::vector<double> g;
  g.reserve(static_cast<size_t>(net.parameter_count()));
  for (size_t k = 0; k < ls.size(); ++k) {
    for (Index r = 0; r < gw[k].rows(); ++r)
      for (Index c = 0; c < gw[k].cols(); ++c) g.push_back(gw[k](r, c));
    for (Index r = 0; r < gb[k].size(); ++r) g.push_back(gb[k](r));
  }
  return g;
}

LossGradient pdir_gradient(const MixedRepuNetwork& net, const Dataset& data, const TrainConfig& cfg) {
  const int d = data.d();
  const double n = data.n();
  std::vector<int> coords;
  for (int j = 0; j < d; ++j)
    if (cfg.lambda[static_cast<size_t>(j)] > 0) coords.push_back(j);
  Tape tp = run_forward(net, data.X, coords);
  MatrixXd ybar(1, data.n());
  std::vector<MatrixXd> ytbar(coords.size(), MatrixXd(1, data.n()));
  double sum = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    double r = tp.y(0, i) - data.y(i);
    double pen = 0.0;
    for (size_t jj = 0; jj < coords.size(); ++jj) {
      double lam = cfg.lambda[static_cast<size_t>(coords[jj])];
      double s = tp.ytan[jj](0, i);
      pen += lam * penalty_eval(cfg.penalty, s);
      ytbar[jj](0, i) = lam * penalty_grad(cfg.penalty, s) / (d * n);
    }
    sum += r * r + pen / d;
    ybar(0, i) = 2.0 * r / n;
  }
  return {sum / n, run_reverse(net, tp, ybar, ytbar)};
}

LossGradient dsme_gradient(const MixedRepuNetwork& net, const Dataset& data) {
  const int d = data.d();
  const double n = data.n();
  std::vector<int> coords(static_cast<size_t>(d));
  std::iota(coords.begin(), coords.end(), 0);
  Tape tp = run_forward(net, data.X, coords);
  double sum = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    double tr = 0.0;
    for (int j = 0; j < d; ++j) tr += tp.ytan[static_cast<size_t>(j)](j, i);
    sum += tr + 0.5 * tp.y.col(i).squaredNorm();
  }
  MatrixXd ybar = tp.y / n;
  std::vector<MatrixXd> ytbar(static_cast<size_t>(d), MatrixXd::Zero(d, data.n()));
  for (int j = 0; j < d; ++j) ytbar[static_cast<size_t>(j)].row(j).setConstant(1.0 / n);
  return {sum / n, run_reverse(net, tp, ybar, ytbar)};
}

Dataset subset(const Dataset& data, std::span<const int> rows) {
  Dataset b;
  b.X.resize(static_cast<Index>(rows.size()), data.d());
  if (data.labeled()) b.y.resize(static_cast<Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    b.X.row(static_cast<Index>(i)) = data.X.row(rows[i]);
    if (data.labeled()) b.y(static_cast<Index>(i)) = data.y(rows[i]);
  }
  return b;
}

}  // namespace

double empirical_mse(const MixedRepuNetwork& f, const Dataset& data) {
  if (f.output_dim() != 1) throw InvalidArgument("mse needs a scalar-output network");
  if (data.n() == 0 || !data.labeled()) throw InvalidArgument("mse needs a non-empty labeled dataset");
  MatrixXd out = forward_batch(f, data.X.transpose());
  double sum = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    double r = data.y(i) - out(0, i);
    sum += r * r;
  }
  return sum / data.n();
}

double loss_pdir(const MixedRepuNetwork& f, const Dataset& data, std::span<const double> lambda,
                 const PenaltySpec& rho) {
  if (f.output_dim() != 1) throw InvalidArgument("pdir loss needs a scalar-output network");
  if (data.n() == 0 || !data.labeled()) throw InvalidArgument("pdir loss needs a non-empty labeled dataset");
  if (f.input_dim() != data.d()) throw InvalidArgument("network input dimension differs from data");
  check_lambda(lambda, data.d());
  const bool penalised = std::any_of(lambda.begin(), lambda.end(), [](double l) { return l != 0.0; });
  MatrixXd out = forward_batch(f, data.X.transpose());
  VectorXd buf;
  double sum = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    double r = data.y(i) - out(0, i);
    double pen = 0.0;
    if (penalised) {
      auto x = row_view(data.X, i, buf);
      VectorXd g = backprop(f, std::span<const double>(x.data(), static_cast<size_t>(x.size()))).input;
      for (int j = 0; j < data.d(); ++j) pen += lambda[static_cast<size_t>(j)] * penalty_eval(rho, g(j));
      pen /= data.d();
    }
    sum += r * r + pen;
  }
  return sum / data.n();
}

double loss_dsme(const MixedRepuNetwork& s, const MatrixXd& X) {
  if (X.rows() == 0) throw InvalidArgument("dsme loss needs a non-empty sample");
  if (s.input_dim() != X.cols() || s.output_dim() != X.cols())
    throw InvalidArgument("score network must map R^d to R^d");
  VectorXd buf;
  double sum = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    auto x = row_view(X, i, buf);
    std::span<const double> xs(x.data(), static_cast<size_t>(x.size()));
    MatrixXd J = input_jacobian(s, xs);
    sum += J.trace() + 0.5 * forward(s, xs).squaredNorm();
  }
  return sum / static_cast<double>(X.rows());
}

LossGradient grad_loss(LossKind kind, const MixedRepuNetwork& net, const Dataset& batch, const TrainConfig& config) {
  if (batch.n() == 0) throw InvalidArgument("empty batch");
  if (net.input_dim() != batch.d()) throw InvalidArgument("network input dimension differs from data");
  if (kind == LossKind::pdir) {
    if (net.output_dim() != 1) throw InvalidArgument("pdir needs a scalar-output network");
    if (!batch.labeled()) throw InvalidArgument("pdir needs responses");
    check_lambda(config.lambda, batch.d());
    return pdir_gradient(net, batch, config);
  }
  if (net.output_dim() != batch.d()) throw InvalidArgument("score network must map R^d to R^d");
  return dsme_gradient(net, batch);
}

MatrixXd input_gradients(const MixedRepuNetwork& f, const MatrixXd& X) {
  if (f.output_dim() != 1) throw InvalidArgument("input_gradients needs a scalar-output network");
  if (f.input_dim() != X.cols()) throw InvalidArgument("network input dimension differs from data");
  std::vector<int> coords(static_cast<size_t>(X.cols()));
  std::iota(coords.begin(), coords.end(), 0);
  Tape tp = run_forward(f, X, coords);
  MatrixXd G(X.rows(), X.cols());
  for (Index j = 0; j < X.cols(); ++j) G.col(j) = tp.ytan[static_cast<size_t>(j)].row(0).transpose();
  return G;
}

std::string AdamState::serialize() const {
  nlohmann::json j{{"t", t}, {"m", m}, {"v", v}};
  return j.dump() + "\n";
}

AdamState AdamState::deserialize(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    AdamState s;
    s.t = j.at("t").get<long>();
    s.m = j.at("m").get<std::vector<double>>();
    s.v = j.at("v").get<std::vector<double>>();
    if (s.m.size() != s.v.size() || s.t < 0) throw FormatError("inconsistent Adam state");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed Adam state: ") + e.what());
  }
}

void adam_step(std::vector<double>& params, std::span<const double> grads, AdamState& state,
               const TrainConfig& config) {
  if (grads.size() != params.size()) throw InvalidArgument("gradient length differs from parameter length");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) throw InvalidArgument("Adam state length differs from parameter length");
  for (size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i]))
      throw NumericalError("non-finite gradient at parameter " + std::to_string(i) + " (step " +
                           std::to_string(state.t + 1) + ")");
  ++state.t;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    const double mh = state.m[i] / c1, vh = state.v[i] / c2;
    params[i] -= config.lr * mh / (std::sqrt(vh) + config.eps);
  }
}

TrainResult train(const MixedRepuNetwork& net0, const Dataset& data, LossKind kind, const TrainConfig& config) {
  config.validate();
  if (data.n() == 0) throw InvalidArgument("empty training set");
  TrainResult res{net0, {}, 0.0, 0.0};
  res.initial_loss = grad_loss(kind, net0, data, config).loss;
  if (!std::isfinite(res.initial_loss)) throw NumericalError("initial loss is not finite");
  const double limit = res.initial_loss + config.divergence_factor * std::max(std::abs(res.initial_loss), 1.0);

  std::mt19937_64 rng(config.seed);
  std::vector<int> order(static_cast<size_t>(data.n()));
  std::iota(order.begin(), order.end(), 0);
  const int bs = config.batch_size == 0 ? data.n() : std::min(config.batch_size, data.n());
  const bool full = bs == data.n();

  std::vector<double> params = net0.parameters();
  AdamState state;
  MixedRepuNetwork cur = net0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (!full) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (int s = 0; s < data.n(); s += bs) {
      LossGradient lg;
      if (full) {
        lg = grad_loss(kind, cur, data, config);
      } else {
        auto rows = std::span<const int>(order).subspan(static_cast<size_t>(s),
                                                        static_cast<size_t>(std::min(bs, data.n() - s)));
        lg = grad_loss(kind, cur, subset(data, rows), config);
      }
      if (!std::isfinite(lg.loss) || lg.loss > limit)
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + " (loss " +
                                  format_double(lg.loss) + ", initial " + format_double(res.initial_loss) + ")",
                              cur, res.history);
      try {
        adam_step(params, lg.grad, state, config);
        cur = cur.with_parameters(params);
      } catch (const NumericalError& e) {
        throw DivergenceError(std::string("training aborted: ") + e.what(), cur, res.history);
      }
      epoch_loss += lg.loss;
      ++batches;
    }
    res.history.push_back(epoch_loss / batches);
  }
  res.final_loss = grad_loss(kind, cur, data, config).loss;
  res.net = std::move(cur);
  return res;
}

ArchSpec ArchSpec::parse(const std::string& s) {
  ArchSpec a;
  a.widths.clear();
  std::string body = s;
  if (auto c = s.find(':'); c != std::string::npos) {
    body = s.substr(0, c);
    std::string tail = s.substr(c + 1);
    if (tail.size() < 2 || tail[0] != 'p') throw InvalidArgument("arch spec power must look like ':p2'");
    try {
      a.p = std::stoi(tail.substr(1));
    } catch (const std::exception&) {
      throw InvalidArgument("bad power in arch spec '" + s + "'");
    }
  }
  try {
    if (auto x = body.find('x'); x != std::string::npos) {
      int w = std::stoi(body.substr(0, x)), depth = std::stoi(body.substr(x + 1));
      a.widths.assign(static_cast<size_t>(std::max(depth, 0)), w);
    } else {
      std::istringstream ss(body);
      std::string tok;
      while (std::getline(ss, tok, ',')) a.widths.push_back(std::stoi(tok));
    }
  } catch (const std::exception&) {
    throw InvalidArgument("bad arch spec '" + s + "' (e.g. 32x3:p2 or 16,32,16:p3)");
  }
  if (a.widths.empty()) throw InvalidArgument("arch spec needs at least one hidden layer");
  for (int w : a.widths)
    if (w < 1) throw InvalidArgument("arch spec widths must be >= 1");
  if (a.p < 1) throw InvalidArgument("arch spec power must be >= 1");
  return a;
}

std::string ArchSpec::str() const {
  bool uniform = std::all_of(widths.begin(), widths.end(), [&](int w) { return w == widths.front(); });
  std::string s;
  if (uniform) {
    s = std::to_string(widths.front()) + "x" + std::to_string(widths.size());
  } else {
    for (size_t i = 0; i < widths.size(); ++i) s += (i ? "," : "") + std::to_string(widths[i]);
  }
  return s + ":p" + std::to_string(p);
}

MixedRepuNetwork init_network(const ArchSpec& arch, int input_dim, int output_dim, std::uint64_t seed,
                              std::span<const double> input_center) {
  if (input_dim < 1 || output_dim < 1) throw InvalidArgument("network dimensions must be >= 1");
  if (!input_center.empty() && static_cast<int>(input_center.size()) != input_dim)
    throw InvalidArgument("input centre has the wrong dimension");
  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  int in = input_dim;
  for (size_t k = 0; k <= arch.widths.size(); ++k) {
    const bool last = k == arch.widths.size();
    const int out = last ? output_dim : arch.widths[k];
    const double a = std::sqrt(6.0 / (in + out)) / arch.p;
    std::uniform_real_distribution<double> u(-a, a);
    Layer l;
    l.weights.resize(out, in);
    for (Index r = 0; r < out; ++r)
      for (Index c = 0; c < in; ++c) l.weights(r, c) = u(rng);
    l.bias = VectorXd::Zero(out);
    if (k == 0 && !input_center.empty())
      l.bias = -l.weights * Eigen::Map<const VectorXd>(input_center.data(), input_dim);
    l.powers.assign(static_cast<size_t>(out), last ? ActivationPower::linear() : ActivationPower(arch.p));
    layers.push_back(std::move(l));
    in = out;
  }
  return MixedRepuNetwork(std::move(layers));
}

LambdaRule LambdaRule::parse(const std::string& s) {
  LambdaRule r;
  auto number_prefix = [&](const std::string& head) {
    if (head.empty()) return 1.0;
    try {
      size_t used = 0;
      double v = std::stod(head, &used);
      if (used != head.size() || !(v >= 0)) throw std::invalid_argument(head);
      return v;
    } catch (const std::exception&) {
      throw InvalidArgument("bad lambda rule '" + s + "'");
    }
  };
  if (s.size() >= 4 && s.compare(s.size() - 4, 4, "logn") == 0) {
    r.kind = Kind::log_n;
    std::string head = s.substr(0, s.size() - 4);
    if (!head.empty() && head.back() == '*') head.pop_back();
    r.scale = number_prefix(head);
    return r;
  }
  if (auto t = s.find("theory:s="); t != std::string::npos) {
    r.kind = Kind::theory;
    std::string head = s.substr(0, t);
    if (!head.empty() && head.back() == '*') head.pop_back();
    r.scale = number_prefix(head);
    try {
      r.smoothness = std::stoi(s.substr(t + 9));
    } catch (const std::exception&) {
      throw InvalidArgument("bad smoothness in lambda rule '" + s + "'");
    }
    if (r.smoothness < 0) throw InvalidArgument("smoothness must be >= 0");
    return r;
  }
  r.kind = Kind::values;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) r.values.push_back(number_prefix(tok));
  if (r.values.empty()) throw InvalidArgument("empty lambda list");
  return r;
}

std::vector<double> LambdaRule::resolve(int n, int d) const {
  if (n < 1 || d < 1) throw InvalidArgument("lambda rule needs n, d >= 1");
  switch (kind) {
    case Kind::log_n:
      return std::vector<double>(static_cast<size_t>(d), scale * std::log(static_cast<double>(n)));
    case Kind::theory: {
      double e = -(smoothness + 1.0) / (d + 2.0 * smoothness);
      return std::vector<double>(static_cast<size_t>(d), scale * std::pow(static_cast<double>(n), e));
    }
    case Kind::values:
      if (values.size() == 1) return std::vector<double>(static_cast<size_t>(d), values[0]);
      if (static_cast<int>(values.size()) != d)
        throw InvalidArgument("lambda list has " + std::to_string(values.size()) + " entries for d = " +
                              std::to_string(d));
      return values;
  }
  return {};
}

std::string LambdaRule::str() const {
  std::string pre = scale == 1.0 ? "" : format_double(scale) + "*";
  switch (kind) {
    case Kind::log_n:
      return pre + "logn";
    case Kind::theory:
      return pre + "theory:s=" + std::to_string(smoothness);
    case Kind::values: {
      std::string s;
      for (size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + format_double(values[i]);
      return s;
    }
  }
  return {};
}

}  // namespace repu
