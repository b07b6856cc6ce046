#include "repu/multipoly.hpp"

#include <cmath>
#include <sstream>

#include "repu/errors.hpp"
#include "fmt_double.hpp"

namespace repu {

namespace {

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

}  // namespace

MultiPoly::MultiPoly(int dim) : dim_(dim) {
  if (dim < 0) throw InvalidArgument("polynomial dimension must be >= 0");
}

MultiPoly::MultiPoly(int dim, const std::map<MultiIndex, double>& terms) : MultiPoly(dim) {
  for (const auto& [alpha, c] : terms) add_term(alpha, c);
}

MultiPoly MultiPoly::univariate(std::span<const double> coeffs) {
  MultiPoly p(1);
  for (size_t i = 0; i < coeffs.size(); ++i) p.add_term({static_cast<int>(i)}, coeffs[i]);
  return p;
}

MultiPoly MultiPoly::constant(int dim, double c) {
  MultiPoly p(dim);
  p.add_term(MultiIndex(static_cast<size_t>(dim), 0), c);
  return p;
}

MultiPoly MultiPoly::random_dense(int dim, int degree, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<MultiIndex> idx;
  MultiIndex cur;
  enumerate_indices(dim, degree, cur, idx);
  MultiPoly p(dim);
  for (const auto& a : idx) p.add_term(a, u(rng));
  return p;
}

int MultiPoly::total_degree() const {
  int n = 0;
  for (const auto& [alpha, c] : terms_) {
    int s = 0;
    for (int a : alpha) s += a;
    n = std::max(n, s);
  }
  return n;
}

double MultiPoly::coefficient(const MultiIndex& alpha) const {
  auto it = terms_.find(alpha);
  return it == terms_.end() ? 0.0 : it->second;
}

void MultiPoly::add_term(const MultiIndex& alpha, double c) {
  if (static_cast<int>(alpha.size()) != dim_)
    throw InvalidArgument("multi-index length " + std::to_string(alpha.size()) + " != " + std::to_string(dim_));
  for (int a : alpha)
    if (a < 0) throw InvalidArgument("negative exponent in multi-index");
  if (!std::isfinite(c)) throw NumericalError("non-finite polynomial coefficient");
  double& slot = terms_[alpha];
  slot += c;
  if (slot == 0.0) terms_.erase(alpha);
}

MultiPoly MultiPoly::operator+(const MultiPoly& other) const {
  if (other.dim_ != dim_) throw InvalidArgument("adding polynomials of different dimension");
  MultiPoly r = *this;
  for (const auto& [alpha, c] : other.terms_) r.add_term(alpha, c);
  return r;
}

MultiPoly MultiPoly::scaled(double c) const {
  MultiPoly r(dim_);
  for (const auto& [alpha, a] : terms_) r.add_term(alpha, a * c);
  return r;
}

std::vector<MultiPoly> MultiPoly::split_first() const {
  if (dim_ == 0) throw InvalidArgument("split_first on a constant");
  int k = 0;
  for (const auto& [alpha, c] : terms_) k = std::max(k, alpha[0]);
  std::vector<MultiPoly> g(static_cast<size_t>(k + 1), MultiPoly(dim_ - 1));
  for (const auto& [alpha, c] : terms_) {
    MultiIndex rest(alpha.begin() + 1, alpha.end());
    g[static_cast<size_t>(alpha[0])].add_term(rest, c);
  }
  return g;
}

double eval_poly(const MultiPoly& poly, std::span<const double> x) {
  if (static_cast<int>(x.size()) != poly.dim())
    throw InvalidArgument("eval_poly: point has dimension " + std::to_string(x.size()));
  double sum = 0.0;
  for (const auto& [alpha, c] : poly.terms()) {
    double m = c;
    for (size_t j = 0; j < alpha.size(); ++j)
      for (int e = 0; e < alpha[j]; ++e) m *= x[j];
    sum += m;
  }
  return sum;
}

MultiPoly parse_poly(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int dim = -1;
  int lineno = 0;
  std::map<MultiIndex, double> acc;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::vector<double> vals;
    std::string tok;
    while (ls >> tok) {
      try {
        size_t used = 0;
        vals.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw FormatError("polynomial line " + std::to_string(lineno) + ": bad token '" + tok + "'");
      }
    }
    if (vals.empty()) continue;
    int d = static_cast<int>(vals.size()) - 1;
    if (dim < 0) dim = d;
    if (d != dim)
      throw FormatError("polynomial line " + std::to_string(lineno) + ": expected " + std::to_string(dim) +
                        " exponents, got " + std::to_string(d));
    MultiIndex alpha;
    for (int j = 0; j < d; ++j) {
      double e = vals[static_cast<size_t>(j)];
      if (e < 0 || e != std::floor(e) || e > 1e6)
        throw FormatError("polynomial line " + std::to_string(lineno) + ": exponent must be a non-negative integer");
      alpha.push_back(static_cast<int>(e));
    }
    acc[alpha] += vals.back();
  }
  if (dim < 0) throw FormatError("polynomial file has no terms");
  return MultiPoly(dim, acc);
}

std::string format_poly(const MultiPoly& poly) {
  std::string out = "# " + std::to_string(poly.dim()) + " exponents then coefficient\n";
  for (const auto& [alpha, c] : poly.terms()) {
    for (int a : alpha) out += std::to_string(a) + " ";
    out += format_double(c) + "\n";
  }
  return out;
}

}  // namespace repu
