#pragma once

#include <compare>
#include <cstdint>

#include "repu/errors.hpp"

namespace repu {

/// Power t of a rectified power unit sigma_t(x) = max(0, x)^t.
/// t = 0 is reserved for the affine pass-through of an output layer.
class ActivationPower {
 public:
  constexpr ActivationPower() = default;
  constexpr explicit ActivationPower(int t) : t_(t) {
    if (t < 0) throw InvalidArgument("activation power must be >= 0");
  }
  static constexpr ActivationPower linear() { return ActivationPower{}; }

  constexpr int value() const { return t_; }
  constexpr bool is_linear() const { return t_ == 0; }

  friend constexpr auto operator<=>(ActivationPower, ActivationPower) = default;

 private:
  int t_ = 0;
};

/// sigma_t(x). Throws for t = 0: linear lanes are handled at the layer level.
double repu(double x, int t);

/// d/dx sigma_t(x) = t * sigma_{t-1}(x) for t >= 2; the unit step for t = 1
/// with the derivative at 0 taken as 0.
double repu_derivative(double x, int t);

/// Second derivative with the same convention at the kink (0 for t <= 2 at x = 0).
double repu_second_derivative(double x, int t);

// Unchecked kernels used in the hot loops. 0 means identity.
inline double apply_power(double z, int t) {
  if (t == 0) return z;
  if (z <= 0.0) return 0.0;
  double r = z;
  for (int i = 1; i < t; ++i) r *= z;
  return r;
}

inline double apply_power_derivative(double z, int t) {
  if (t == 0) return 1.0;
  if (z <= 0.0) return 0.0;
  if (t == 1) return 1.0;
  return t * apply_power(z, t - 1);
}

inline double apply_power_second_derivative(double z, int t) {
  if (t <= 1 || z <= 0.0) return 0.0;
  if (t == 2) return 2.0;
  return t * (t - 1) * apply_power(z, t - 2);
}

}  // namespace repu
