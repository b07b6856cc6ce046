#include "repu/poly_compiler.hpp"

#include <cmath>
#include <json.hpp>
#include <limits>
#include <map>
#include <random>

#include "repu/errors.hpp"
#include "repu/net_builder.hpp"

namespace repu {

namespace {

void check_p(int p) {
  if (p < 2) throw InvalidArgument("polynomial compilation needs p >= 2");
}

// Affine part (degree <= 1) of `poly` as a level-0 signal; vars[j] is the input
// coordinate of the poly's j-th variable.
Signal affine_signal(const MultiPoly& poly, std::span<const int> vars) {
  Signal s;
  for (const auto& [alpha, c] : poly.terms()) {
    int deg = 0, at = -1;
    for (size_t j = 0; j < alpha.size(); ++j) {
      deg += alpha[j];
      if (alpha[j]) at = static_cast<int>(j);
    }
    if (deg == 0)
      s.constant += c;
    else if (deg == 1)
      s.terms[vars[static_cast<size_t>(at)]] += c;
    else
      throw InvalidArgument("affine_signal on a polynomial of degree > 1");
  }
  return s;
}

// A signal equal to `x` on every requested level; carries are shared.
class CarriedInput {
 public:
  CarriedInput(NetBuilder& b, Signal x) : b_(b) { by_level_[0] = std::move(x); }
  void offer(int level, const Signal& s) { by_level_.emplace(level, s); }
  Signal at(int level) {
    auto it = by_level_.upper_bound(level);
    --it;
    while (it->first < level) {
      Signal next = b_.shallow(it->second).identity();
      it = by_level_.emplace(it->first + 1, std::move(next)).first;
    }
    return it->second;
  }

 private:
  NetBuilder& b_;
  std::map<int, Signal> by_level_;
};

// Signal equal to `poly` on level 2N - 1 (N = total degree >= 2), level 1 for
// affine polynomials, or a constant.
Signal horner_signal(NetBuilder& b, const MultiPoly& poly, std::span<const int> vars) {
  const int n = poly.total_degree();
  if (n == 0) return Signal::constant_value(poly.coefficient(MultiIndex(vars.size(), 0)));
  if (n == 1) return b.shallow(affine_signal(poly, vars)).identity();

  auto rest = vars.subspan(1);
  std::vector<MultiPoly> g = poly.split_first();
  g.resize(static_cast<size_t>(n + 1), MultiPoly(poly.dim() - 1));
  CarriedInput x(b, b.input(vars[0]));

  // b_1 = g_N x + g_{N-1} is affine in the raw input.
  Signal acc = affine_signal(g[static_cast<size_t>(n - 1)], rest);
  double lead = g[static_cast<size_t>(n)].is_zero() ? 0.0 : g[static_cast<size_t>(n)].terms().begin()->second;
  acc += lead * x.at(0);
  if (!acc.is_constant()) acc = b.shallow(acc).identity();

  for (int k = 2; k <= n; ++k) {
    const int mul_level = 2 * k - 2, add_level = 2 * k - 1;
    Signal prod;
    if (acc.is_constant()) {
      if (acc.constant != 0.0) prod = acc.constant * x.at(add_level);
    } else {
      Signal xs = x.at(acc.level);
      Signal u = xs + acc, v = xs - acc;
      if (k == n && b.power() == 2) {
        prod = 0.25 * (b.power_block(u) - b.power_block(v));
      } else {
        ShallowBlock bu = b.shallow(u), bv = b.shallow(v);
        prod = 0.25 * (bu.square() - bv.square());
        if (k < n) x.offer(mul_level, 0.5 * (bu.identity() + bv.identity()));
      }
      prod = b.carry(prod, add_level);
    }
    Signal gk = b.carry(horner_signal(b, g[static_cast<size_t>(n - k)], rest), add_level);
    acc = prod + gk;
  }
  return acc;
}

// Degree <= 1 polynomials in one hidden layer.
MixedRepuNetwork shallow_affine(const MultiPoly& poly, int p) {
  NetBuilder b(std::max(poly.dim(), 1), p);
  std::vector<int> vars(static_cast<size_t>(poly.dim()));
  for (int j = 0; j < poly.dim(); ++j) vars[static_cast<size_t>(j)] = j;
  Signal s = affine_signal(poly, vars);
  if (s.is_constant())
    return b.build({s.constant * b.neuron(1, Signal::constant_value(1.0), p)});
  return b.build({b.shallow(s).identity()});
}

void verify(const MixedRepuNetwork& net, const MultiPoly& poly, const CompileOptions& opts, CompileReport& rep) {
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> u(-opts.verify_radius, opts.verify_radius);
  std::vector<double> x(static_cast<size_t>(poly.dim()));
  rep.max_abs_residual = rep.max_rel_residual = 0.0;
  for (int i = 0; i < opts.verify_points; ++i) {
    for (auto& xi : x) xi = u(rng);
    double want = eval_poly(poly, x);
    double got = forward(net, x)(0);
    double err = std::abs(got - want);
    rep.max_abs_residual = std::max(rep.max_abs_residual, err);
    rep.max_rel_residual = std::max(rep.max_rel_residual, err / (1.0 + std::abs(want)));
  }
  rep.verify_points = opts.verify_points;
  rep.verify_radius = opts.verify_radius;
  rep.verify_seed = opts.seed;
}

CompileReport base_report(const MultiPoly& poly, PolyArchitecture arch, int p) {
  CompileReport r;
  r.architecture = arch;
  r.dim = poly.dim();
  r.degree = poly.total_degree();
  r.p = p;
  return r;
}

void enumerate_indices(int dim, int budget, MultiIndex& cur, std::vector<MultiIndex>& out) {
  if (static_cast<int>(cur.size()) == dim) {
    out.push_back(cur);
    return;
  }
  for (int a = 0; a <= budget; ++a) {
    cur.push_back(a);
    enumerate_indices(dim, budget - a, cur, out);
    cur.pop_back();
  }
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

// t^e on level `level` (e <= p^level), memoised by (e, level).
class PowerChain {
 public:
  PowerChain(NetBuilder& b, Signal t) : b_(b), t_(std::move(t)) {}

  Signal power(int e, int level) {
    if (e == 0) return Signal::constant_value(1.0);
    auto key = std::make_pair(e, level);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    Signal s = compute(e, level);
    memo_.emplace(key, s);
    return s;
  }

 private:
  Signal raise(const Signal& s, int q) {
    const int p = b_.power();
    if (q == 1) return b_.carry(s, s.level + 1);
    if (q == p) return b_.power_block(s);
    std::vector<double> a(static_cast<size_t>(q + 1), 0.0);
    a.back() = 1.0;
    return b_.shallow(s).readout(a);
  }

  Signal compute(int e, int level) {
    const int p = b_.power();
    if (level == 1) return raise(t_, e);
    int base = 1;
    for (int i = 1; i < level; ++i) base *= p;
    int q = e / base, r = e % base;
    if (q == 0) return b_.carry(power(e, level - 1), level);
    Signal a = power(base, level - 1);
    if (r == 0) return raise(a, q);
    // A^q B = sum_k lambda_k (A + c_k B)^{q+1}, with sum_k lambda_k c_k^i = [i = 1] / (q + 1).
    Signal bsig = power(r, level - 1);
    int m = q + 2;
    std::vector<double> c;
    if (m % 2) c.push_back(0.0);
    for (int k = 1; static_cast<int>(c.size()) < m; ++k) {
      c.push_back(k);
      c.push_back(-k);
    }
    Eigen::MatrixXd V(m, m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k) V(i, k) = std::pow(c[static_cast<size_t>(k)], i);
    rhs(1) = 1.0 / (q + 1);
    Eigen::VectorXd lambda = V.fullPivLu().solve(rhs);
    double scale = lambda.cwiseAbs().maxCoeff();
    Signal out;
    for (int k = 0; k < m; ++k) {
      if (std::abs(lambda(k)) <= 1e-14 * scale) continue;
      out += lambda(k) * raise(a + c[static_cast<size_t>(k)] * bsig, q + 1);
    }
    return out;
  }

  NetBuilder& b_;
  Signal t_;
  std::map<std::pair<int, int>, Signal> memo_;
};

struct DirectionFit {
  Eigen::MatrixXd dirs;  // (d + 1) x M, last row is b
  Eigen::VectorXd coef;
  double cond = 0.0;
};

}  // namespace

std::string to_string(PolyArchitecture a) { return a == PolyArchitecture::horner ? "horner" : "mhaskar"; }

PolyArchitecture parse_poly_architecture(const std::string& s) {
  if (s == "horner") return PolyArchitecture::horner;
  if (s == "mhaskar") return PolyArchitecture::mhaskar;
  throw InvalidArgument("unknown architecture '" + s + "' (horner|mhaskar)");
}

bool CompileReport::matches_prediction() const {
  return predicted && predicted->depth == stats.depth && predicted->width == stats.width &&
         predicted->neurons == stats.neurons && predicted->size == stats.size;
}

std::string CompileReport::to_json() const {
  auto st = [](const ArchitectureStats& s) {
    return nlohmann::json{{"depth", s.depth},   {"width", s.width},
                          {"neurons", s.neurons}, {"size", s.size},
                          {"nonzero_size", s.nonzero_size}};
  };
  nlohmann::json j{{"architecture", to_string(architecture)},
                   {"dim", dim},
                   {"degree", degree},
                   {"p", p},
                   {"stats", st(stats)},
                   {"predicted", predicted ? st(*predicted) : nlohmann::json("not applicable")},
                   {"matches_prediction", matches_prediction()},
                   {"max_abs_residual", max_abs_residual},
                   {"max_rel_residual", max_rel_residual},
                   {"verify_points", verify_points},
                   {"verify_radius", verify_radius},
                   {"verify_seed", verify_seed}};
  if (architecture == PolyArchitecture::mhaskar) {
    j["condition_number"] = condition_number;
    j["coefficient_l1"] = coefficient_l1;
    j["resamples"] = resamples;
  }
  return j.dump(1) + "\n";
}

int ceil_log(int n, int p) {
  if (n < 1 || p < 2) throw InvalidArgument("ceil_log needs n >= 1, p >= 2");
  int l = 0;
  long v = 1;
  while (v < n) {
    v *= p;
    ++l;
  }
  return l;
}

MixedRepuNetwork compile_shallow_univariate(std::span<const double> coeffs, int p) {
  check_p(p);
  size_t k = coeffs.size();
  while (k > 1 && coeffs[k - 1] == 0.0) --k;
  if (k == 0) throw InvalidArgument("no coefficients");
  if (static_cast<int>(k) - 1 > p) throw InvalidArgument("shallow compile needs degree <= p");
  NetBuilder b(1, p);
  Signal x = b.input(0);
  if (k == 1) return b.build({coeffs[0] * b.neuron(1, Signal::constant_value(1.0), p)});
  bool pure_top = static_cast<int>(k) - 1 == p;
  for (size_t i = 0; i + 1 < k; ++i) pure_top = pure_top && coeffs[i] == 0.0;
  if (pure_top) return b.build({coeffs[k - 1] * b.power_block(x)});
  return b.build({b.shallow(x).readout(coeffs.subspan(0, k))});
}

MixedRepuNetwork compile_mul_gadget(int p) {
  check_p(p);
  NetBuilder b(2, p);
  Signal u = b.input(0) + b.input(1), v = b.input(0) - b.input(1);
  if (p == 2) return b.build({0.25 * (b.power_block(u) - b.power_block(v))});
  return b.build({0.25 * (b.shallow(u).square() - b.shallow(v).square())});
}

ArchitectureStats horner_predicted_stats(int d, int n, int p) {
  if (d < 1 || n < 2 || p < 2) throw InvalidArgument("Horner formulas need d >= 1, N >= 2, p >= 2");
  using big = __int128;
  const big limit = std::numeric_limits<long>::max();
  auto chk = [&](big v) {
    if (v > limit || v < -limit) throw NumericalError("predicted Horner size overflows");
    return v;
  };
  big nd = 1, nd1 = 1;
  for (int i = 0; i < d; ++i) nd = chk(nd * n);
  for (int i = 0; i + 1 < d; ++i) nd1 = chk(nd1 * n);
  big core = chk(2 * nd - nd1 - n);
  ArchitectureStats s;
  s.depth = 2 * n - 1;
  s.width = static_cast<long>(chk(12 * big(p) * nd1 + 6 * big(p) * (nd1 - n) / (n - 1)));
  s.neurons = static_cast<long>(chk((6 * big(p) + 2) * core + 2 * big(p) * core / (n - 1)));
  s.size = static_cast<long>(chk((30 * big(p) + 2) * core + (2 * big(p) + 1) * core / (n - 1)));
  s.nonzero_size = s.size;
  return s;
}

CompiledPoly compile_horner(const MultiPoly& poly, int p, const CompileOptions& opts) {
  check_p(p);
  if (poly.dim() < 1) throw InvalidArgument("polynomial needs at least one variable");
  CompileReport rep = base_report(poly, PolyArchitecture::horner, p);
  if (rep.degree <= 1) {
    MixedRepuNetwork net = shallow_affine(poly, p);
    rep.stats = architecture_stats(net);
    verify(net, poly, opts, rep);
    return {std::move(net), rep};
  }
  rep.predicted = horner_predicted_stats(poly.dim(), rep.degree, p);
  NetBuilder b(poly.dim(), p);
  std::vector<int> vars(static_cast<size_t>(poly.dim()));
  for (int j = 0; j < poly.dim(); ++j) vars[static_cast<size_t>(j)] = j;
  MixedRepuNetwork net = b.build({horner_signal(b, poly, vars)});
  rep.stats = architecture_stats(net);
  verify(net, poly, opts, rep);
  return {std::move(net), rep};
}

CompiledPoly compile_mhaskar(const MultiPoly& poly, int p, const CompileOptions& opts) {
  check_p(p);
  const int d = poly.dim();
  if (d < 1) throw InvalidArgument("polynomial needs at least one variable");
  CompileReport rep = base_report(poly, PolyArchitecture::mhaskar, p);
  const int n = rep.degree;
  if (n <= 1) {
    MixedRepuNetwork net = shallow_affine(poly, p);
    rep.stats = architecture_stats(net);
    verify(net, poly, opts, rep);
    return {std::move(net), rep};
  }

  std::vector<MultiIndex> idx;
  MultiIndex cur;
  enumerate_indices(d, n, cur, idx);
  const int m = static_cast<int>(idx.size());
  Eigen::VectorXd target(m);
  std::vector<double> multinom(static_cast<size_t>(m));
  for (int r = 0; r < m; ++r) {
    const auto& a = idx[static_cast<size_t>(r)];
    target(r) = poly.coefficient(a);
    int s = 0;
    double den = 1.0;
    for (int e : a) {
      s += e;
      den *= factorial(e);
    }
    multinom[static_cast<size_t>(r)] = factorial(n) / (den * factorial(n - s));
  }

  std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss;
  std::optional<DirectionFit> best;
  int accepted = 0, rejected = 0;
  double worst_cond = 0.0;
  while (accepted < opts.mhaskar_candidates) {
    Eigen::MatrixXd dirs(d + 1, m);
    for (int k = 0; k < m; ++k) {
      for (int i = 0; i <= d; ++i) dirs(i, k) = gauss(rng);
      dirs.col(k).normalize();
    }
    Eigen::MatrixXd A(m, m);
    for (int r = 0; r < m; ++r) {
      const auto& a = idx[static_cast<size_t>(r)];
      int s = 0;
      for (int e : a) s += e;
      for (int k = 0; k < m; ++k) {
        double v = multinom[static_cast<size_t>(r)] * std::pow(dirs(d, k), n - s);
        for (int i = 0; i < d; ++i) v *= std::pow(dirs(i, k), a[static_cast<size_t>(i)]);
        A(r, k) = v;
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& sv = svd.singularValues();
    double cond = sv(m - 1) > 0 ? sv(0) / sv(m - 1) : std::numeric_limits<double>::infinity();
    if (!(cond <= opts.mhaskar_max_condition)) {
      worst_cond = std::max(worst_cond, cond);
      if (++rejected > opts.mhaskar_max_retries) {
        if (best) break;
        throw NumericalError("mhaskar: direction system ill-conditioned after " + std::to_string(rejected) +
                             " draws (last condition number " + std::to_string(cond) + ")");
      }
      continue;
    }
    ++accepted;
    Eigen::VectorXd coef = A.fullPivLu().solve(target);
    if (!best || coef.lpNorm<1>() < best->coef.lpNorm<1>()) best = DirectionFit{dirs, coef, cond};
  }
  rep.condition_number = best->cond;
  rep.coefficient_l1 = best->coef.lpNorm<1>();
  rep.resamples = rejected;

  const int levels = ceil_log(n, p);
  NetBuilder b(d, p);
  Signal out;
  for (int k = 0; k < m; ++k) {
    if (best->coef(k) == 0.0) continue;
    Signal t = Signal::constant_value(best->dirs(d, k));
    for (int i = 0; i < d; ++i) t += best->dirs(i, k) * b.input(i);
    PowerChain chain(b, t);
    out += best->coef(k) * chain.power(n, levels);
  }
  MixedRepuNetwork net = b.build({out});
  rep.stats = architecture_stats(net);
  verify(net, poly, opts, rep);
  return {std::move(net), rep};
}

CompiledPoly compile_poly(const MultiPoly& poly, PolyArchitecture arch, int p, const CompileOptions& opts) {
  return arch == PolyArchitecture::horner ? compile_horner(poly, p, opts) : compile_mhaskar(poly, p, opts);
}

}  // namespace repu
