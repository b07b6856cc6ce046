#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "repu/dataset.hpp"
#include "repu/errors.hpp"
#include "repu/network.hpp"

namespace repu {

enum class PenaltyKind { hinge, squared_hinge };

/// rho(x) = max(-x, 0) or its square. `clip` > 0 caps the squared-hinge
/// argument so the penalty stays Lipschitz with kappa = 2 clip.
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::hinge;
  double clip = 0.0;
  double kappa() const;
};

PenaltySpec parse_penalty(const std::string& s);
std::string to_string(const PenaltySpec& p);

double penalty_eval(const PenaltySpec& rho, double x);
double penalty_grad(const PenaltySpec& rho, double x);

enum class LossKind { pdir, dsme };
LossKind parse_loss_kind(const std::string& s);
std::string to_string(LossKind k);

struct TrainConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  int epochs = 2000;
  int batch_size = 0;  // 0: full batch
  std::uint64_t seed = 0;
  std::vector<double> lambda;  // one per input coordinate (pdir only)
  PenaltySpec penalty;
  double divergence_factor = 1e3;

  void validate() const;
};

/// (1/n) sum_i { (y_i - f(x_i))^2 + (1/d) sum_j lambda_j rho(df/dx_j (x_i)) }.
double loss_pdir(const MixedRepuNetwork& f, const Dataset& data, std::span<const double> lambda,
                 const PenaltySpec& rho);
/// (1/n) sum_i { tr grad s(x_i) + |s(x_i)|^2 / 2 }; one reverse pass per output.
double loss_dsme(const MixedRepuNetwork& s, const Eigen::MatrixXd& X);

/// (1/n) sum_i (y_i - f(x_i))^2, same summation order as loss_pdir.
double empirical_mse(const MixedRepuNetwork& f, const Dataset& data);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad;  // parameter layout of MixedRepuNetwork::parameters()
};

/// Analytic gradient through the input derivatives (forward tangents plus one
/// reverse sweep carrying second-order terms).
LossGradient grad_loss(LossKind kind, const MixedRepuNetwork& net, const Dataset& batch, const TrainConfig& config);

/// n x d matrix of df/dx_j at each row of X via forward tangents (scalar f).
Eigen::MatrixXd input_gradients(const MixedRepuNetwork& f, const Eigen::MatrixXd& X);

struct AdamState {
  std::vector<double> m, v;
  long t = 0;
  std::string serialize() const;
  static AdamState deserialize(std::string_view text);
  bool operator==(const AdamState&) const = default;
};

/// One Adam update with bias correction; advances state.t. Throws NumericalError
/// on a non-finite gradient.
void adam_step(std::vector<double>& params, std::span<const double> grads, AdamState& state,
               const TrainConfig& config);

struct TrainResult {
  MixedRepuNetwork net;
  std::vector<double> history;  // loss at the start of each epoch
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Training aborted by the divergence guard; carries the last good network.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, MixedRepuNetwork last_good, std::vector<double> history)
      : NumericalError(what), last_good_(std::move(last_good)), history_(std::move(history)) {}
  const MixedRepuNetwork& last_good() const { return last_good_; }
  const std::vector<double>& history() const { return history_; }

 private:
  MixedRepuNetwork last_good_;
  std::vector<double> history_;
};

TrainResult train(const MixedRepuNetwork& net0, const Dataset& data, LossKind kind, const TrainConfig& config);

/// Hidden widths and power, written "32x3:p2" (three layers of 32) or "16,32,16:p3".
struct ArchSpec {
  std::vector<int> widths{32, 32, 32};
  int p = 2;
  static ArchSpec parse(const std::string& s);
  std::string str() const;
};

/// Weights U[-a, a] with a = sqrt(6 / (d_in + d_out)) / p, biases 0. With a
/// non-empty `input_center` c the first-layer bias is -W c, i.e. zero bias in
/// coordinates centred at c.
MixedRepuNetwork init_network(const ArchSpec& arch, int input_dim, int output_dim, std::uint64_t seed,
                              std::span<const double> input_center = {});

/// lambda_j rules: an explicit list (one value broadcasts), "logn", or "theory:s=<int>"
/// giving n^{-(s+1)/(d+2s)}.
struct LambdaRule {
  enum class Kind { values, log_n, theory } kind = Kind::log_n;
  std::vector<double> values;
  int smoothness = 1;
  double scale = 1.0;  // multiplies the resolved value ("3logn")
  static LambdaRule parse(const std::string& s);
  std::vector<double> resolve(int n, int d) const;
  std::string str() const;
};

}  // namespace repu
