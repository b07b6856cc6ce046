#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "repu/multipoly.hpp"
#include "repu/network.hpp"

namespace repu {

enum class PolyArchitecture { horner, mhaskar };

std::string to_string(PolyArchitecture a);
PolyArchitecture parse_poly_architecture(const std::string& s);

struct CompileOptions {
  std::uint64_t seed = 0x5eed;  // verification sample and direction sampling
  int verify_points = 200;
  double verify_radius = 2.0;  // points uniform in [-r, r]^d
  int mhaskar_candidates = 8;  // direction sets whose coefficients are compared
  int mhaskar_max_retries = 20;
  double mhaskar_max_condition = 1e10;
};

struct CompileReport {
  PolyArchitecture architecture = PolyArchitecture::horner;
  int dim = 0;
  int degree = 0;
  int p = 2;
  ArchitectureStats stats;
  /// Closed-form sizes of the construction; empty when not applicable (degree <= 1,
  /// and always for mhaskar, whose constant is only given as an order).
  std::optional<ArchitectureStats> predicted;
  double max_abs_residual = 0.0;
  double max_rel_residual = 0.0;  // max |net - poly| / (1 + |poly|)
  int verify_points = 0;
  double verify_radius = 0.0;
  std::uint64_t verify_seed = 0;
  // mhaskar only
  double condition_number = 0.0;
  double coefficient_l1 = 0.0;
  int resamples = 0;

  /// depth, width, neurons and size all equal to the prediction.
  bool matches_prediction() const;
  std::string to_json() const;
};

struct CompiledPoly {
  MixedRepuNetwork net;
  CompileReport report;
};

/// One hidden layer with at most 2p neurons computing a_0 + ... + a_k x^k, k <= p.
MixedRepuNetwork compile_shallow_univariate(std::span<const double> coeffs, int p);

/// (x, y) -> xy = ((x + y)^2 - (x - y)^2) / 4 in one hidden layer.
MixedRepuNetwork compile_mul_gadget(int p);

/// Horner recursion over the variables: depth 2N - 1.
CompiledPoly compile_horner(const MultiPoly& poly, int p, const CompileOptions& opts = {});

/// sum_m c_m (w_m . x + b_m)^N over binom(N + d, d) random directions; powers in
/// ceil(log_p N) layers.
CompiledPoly compile_mhaskar(const MultiPoly& poly, int p, const CompileOptions& opts = {});

CompiledPoly compile_poly(const MultiPoly& poly, PolyArchitecture arch, int p, const CompileOptions& opts = {});

/// Closed-form Horner sizes for (d, N, p), N >= 2. Throws NumericalError on overflow.
ArchitectureStats horner_predicted_stats(int d, int n, int p);

/// Smallest L with p^L >= n.
int ceil_log(int n, int p);

}  // namespace repu
