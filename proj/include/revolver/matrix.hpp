#pragma once

#include <Eigen/Dense>

namespace revolver {

/// Plaintext dense matrix, row-major so rows map straight onto slots.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace revolver
