#pragma once

#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace repu {

using MultiIndex = std::vector<int>;

/// Sparse polynomial in d variables: multi-index alpha -> a_alpha.
/// Zero coefficients are never stored. d = 0 is allowed (a constant).
class MultiPoly {
 public:
  explicit MultiPoly(int dim = 1);
  MultiPoly(int dim, const std::map<MultiIndex, double>& terms);

  /// a_0 + a_1 x + ... + a_k x^k.
  static MultiPoly univariate(std::span<const double> coeffs);
  static MultiPoly constant(int dim, double c);
  /// Every coefficient of total degree <= n drawn from U[-1, 1].
  static MultiPoly random_dense(int dim, int degree, std::mt19937_64& rng);

  int dim() const { return dim_; }
  int total_degree() const;
  bool is_zero() const { return terms_.empty(); }
  const std::map<MultiIndex, double>& terms() const { return terms_; }
  double coefficient(const MultiIndex& alpha) const;

  void add_term(const MultiIndex& alpha, double c);
  MultiPoly operator+(const MultiPoly& other) const;
  MultiPoly scaled(double c) const;

  /// f = sum_i g_i(x_2, ..., x_d) x_1^i; returns g_0..g_k with k the x_1-degree.
  std::vector<MultiPoly> split_first() const;

  bool operator==(const MultiPoly&) const = default;

 private:
  int dim_;
  std::map<MultiIndex, double> terms_;
};

/// Direct summation of a_alpha prod x_j^alpha_j. Used as the oracle.
double eval_poly(const MultiPoly& poly, std::span<const double> x);

/// One term per line: "alpha_1 ... alpha_d coefficient"; '#' starts a comment.
MultiPoly parse_poly(std::string_view text);
std::string format_poly(const MultiPoly& poly);

}  // namespace repu
