#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "repu/dataset.hpp"
#include "repu/network.hpp"
#include "repu/training.hpp"

namespace repu {

class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual int input_dim() const = 0;
  virtual double predict(std::span<const double> x) const = 0;
  /// One prediction per row of X.
  virtual Eigen::VectorXd predict_batch(const Eigen::MatrixXd& X) const;
};

class NetworkPredictor : public Predictor {
 public:
  explicit NetworkPredictor(MixedRepuNetwork net, int output = 0);
  int input_dim() const override { return net_.input_dim(); }
  double predict(std::span<const double> x) const override;
  Eigen::VectorXd predict_batch(const Eigen::MatrixXd& X) const override;
  const MixedRepuNetwork& net() const { return net_; }

 private:
  MixedRepuNetwork net_;
  int output_;
};

/// Piecewise-constant fit on sorted knots: left-constant between knots,
/// boundary values outside.
class StepFunction : public Predictor {
 public:
  StepFunction(std::vector<double> knots, std::vector<double> values);
  int input_dim() const override { return 1; }
  double predict(std::span<const double> x) const override;
  double operator()(double x) const;
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> knots_, values_;
};

/// Query outside the coordinate-wise envelope of the block estimator's design.
class UndefinedQuery : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Mean of the max-min and min-max block-average estimators. Every block
/// [u, v] spanned by design points u <= v is averaged once up front (cubic in n).
class BlockEstimator : public Predictor {
 public:
  explicit BlockEstimator(const Dataset& train);
  int input_dim() const override { return static_cast<int>(X_.cols()); }
  double predict(std::span<const double> x) const override;

  struct Bounds {
    double max_min, min_max;
  };
  Bounds bounds(std::span<const double> x) const;

 private:
  Eigen::MatrixXd X_;
  Eigen::MatrixXd mean_;  // mean_(u, v) over points in [X_u, X_v]; NaN unless X_u <= X_v
};

struct MonotonicitySummary {
  std::vector<double> mean_penalty;    // E_n[rho(df/dx_j)] with the hinge penalty
  std::vector<double> frac_negative;   // share of training points with df/dx_j < 0
};

struct FitResult {
  std::string method;
  std::shared_ptr<const Predictor> predictor;
  std::optional<MixedRepuNetwork> net;
  std::vector<double> lambda;
  std::vector<double> history;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  MonotonicitySummary monotonicity;
};

/// Regression default: three hidden layers of 32, p = 2.
inline ArchSpec default_regression_arch() { return ArchSpec{{32, 32, 32}, 2}; }
/// Score default: one hidden layer of 8, p = 2. Deeper nets drive the empirical
/// score-matching objective well below its population minimum.
inline ArchSpec default_score_arch() { return ArchSpec{{8}, 2}; }

struct EstimatorConfig {
  ArchSpec arch;
  LambdaRule lambda;  // pdir only
  TrainConfig train;  // train.lambda is overwritten from the rule
};

/// Penalised least squares; monotonicity summary on the training set.
FitResult fit_pdir(const Dataset& data, const EstimatorConfig& config);
/// fit_pdir with lambda = 0.
FitResult fit_dnr(const Dataset& data, const EstimatorConfig& config);
/// Score network R^d -> R^d fitted to unlabeled X.
FitResult fit_dsme(const Dataset& data, const EstimatorConfig& config);

/// Weighted pool-adjacent-violators on sorted x (ties pooled first).
StepFunction pava_1d(std::span<const double> x, std::span<const double> y);
/// Isotonic fit at each input point (x sorted, ties allowed).
std::vector<double> pava_fitted(std::span<const double> x, std::span<const double> y);

FitResult fit_pava(const Dataset& data);
FitResult fit_block(const Dataset& data);

/// pdir | dnr | dsme | pava | block
FitResult fit_method(const std::string& method, const Dataset& data, const EstimatorConfig& config);

MonotonicitySummary monotonicity_summary(const MixedRepuNetwork& f, const Eigen::MatrixXd& X);

}  // namespace repu
