#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "repu/dataset.hpp"
#include "repu/estimators.hpp"

namespace repu {

enum class ModelId {
  u_linear, u_exp, u_step, u_constant, u_wave,
  b_polynomial, b_concave, b_step, b_partial, b_constant, b_wave, b_model_g
};

struct SimModel {
  ModelId id;
  std::string name;  // "U-Linear", ...
  int d;
  bool monotone;
  double noise_sd = 0.5;
  double f0(std::span<const double> x) const;
};

const std::vector<SimModel>& all_models();
/// Accepts the canonical name or its lower-case form.
const SimModel& model_by_name(const std::string& name);

enum class Design { lattice, uniform };
Design parse_design(const std::string& s);

/// Lattice: n = m^d points, each axis linspace(0, 1, m). Uniform: iid U[0,1]^d.
Dataset generate(const SimModel& model, int n, std::uint64_t seed, Design design = Design::lattice);
/// Even lattice with m = T^{1/d} points per axis (rows in lexicographic order, last axis fastest).
Eigen::MatrixXd lattice_points(int d, int total);

struct MetricsRow {
  std::string model, method;
  int n = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  double lambda = 0.0;  // first lambda component (pdir), 0 otherwise
  double mse = 0.0;     // on noisy test responses
  double mse_f0 = 0.0;  // against f0 (= L2 squared)
  double l1 = 0.0, l2 = 0.0;
  std::vector<double> violation;  // per coordinate: mean negative part of forward-difference slopes
  bool ok = true;
  std::string error;
};

/// Test lattice of T = 100^d points with fresh N(0, sd^2) responses drawn from `seed`.
MetricsRow metrics(const Predictor& predictor, const SimModel& model, int total, std::uint64_t seed);

struct ReplicateSpec {
  std::string model = "U-Linear";
  int n = 256;
  std::vector<std::string> methods{"pdir"};
  int reps = 20;
  std::uint64_t seed = 7;  // replication r uses seed + r
  int test_points = 0;     // 0: 100^d
  Design design = Design::lattice;
  EstimatorConfig estimator;
  int jobs = 0;  // 0: hardware concurrency
};

/// One row per (replication, method); a failed fit is recorded with ok = false.
std::vector<MetricsRow> replicate(const ReplicateSpec& spec);

struct SummaryRow {
  std::string model, method;
  int n = 0;
  double lambda = 0.0;
  int reps = 0, failed = 0;
  double mse_mean = 0, mse_sd = 0, l1_mean = 0, l1_sd = 0, l2_mean = 0, l2_sd = 0;
  double l1_lo = 0, l1_hi = 0, l2_lo = 0, l2_hi = 0;  // empirical 5% / 95% quantiles
};

/// Grouped by (model, n, method, lambda) in first-appearance order.
std::vector<SummaryRow> summarize(const std::vector<MetricsRow>& rows);

/// pdir over the lambda grid (same value for every coordinate).
std::vector<SummaryRow> lambda_sweep(const ReplicateSpec& spec, std::span<const double> grid,
                                     std::vector<MetricsRow>* raw = nullptr);
/// `count` evenly spaced values on [0, 3 log n].
std::vector<double> default_lambda_grid(int n, int count);

std::string metrics_csv_header();
std::string to_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> parse_metrics_csv(std::string_view text);
std::string summary_csv(const std::vector<SummaryRow>& rows);
/// "mean (sd)" table in the layout of the paper's simulation tables.
std::string render_table(const std::vector<SummaryRow>& rows);
/// x = lambda, y = mean L2, band columns = 5% / 95% quantiles.
std::string plot_data_csv(const std::vector<SummaryRow>& rows);

/// Runs fn(0..count-1) on `jobs` threads.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn);

}  // namespace repu
