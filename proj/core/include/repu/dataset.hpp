#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>

namespace repu {

/// Design X (n x d, one row per observation), response y (n, or empty for
/// unlabeled score-estimation data) and where it came from.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::string generator = "external";
  std::uint64_t seed = 0;

  int n() const { return static_cast<int>(X.rows()); }
  int d() const { return static_cast<int>(X.cols()); }
  bool labeled() const { return y.size() > 0; }
};

/// Header row x1..xd[,y]; a trailing column named y marks the response.
Dataset parse_dataset_csv(std::string_view text);
std::string dataset_to_csv(const Dataset& data);

}  // namespace repu
