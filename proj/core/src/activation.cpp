#include "repu/activation.hpp"

namespace repu {

double repu(double x, int t) {
  if (t < 1) throw InvalidArgument("repu: power must be >= 1 (t = 0 is the affine output lane)");
  return apply_power(x, t);
}

double repu_derivative(double x, int t) {
  if (t < 1) throw InvalidArgument("repu_derivative: power must be >= 1");
  return apply_power_derivative(x, t);
}

double repu_second_derivative(double x, int t) {
  if (t < 1) throw InvalidArgument("repu_second_derivative: power must be >= 1");
  return apply_power_second_derivative(x, t);
}

}  // namespace repu
