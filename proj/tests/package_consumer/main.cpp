#include <iostream>

#include "repu/multipoly.hpp"
#include "repu/poly_compiler.hpp"

int main() {
  repu::MultiPoly xy(2, {{{1, 1}, 1.0}});
  auto c = repu::compile_horner(xy, 2);
  std::cout << repu::forward(c.net, Eigen::Vector2d(2, 3))(0) << "\n";
}
