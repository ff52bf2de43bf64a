#pragma once

#include <Eigen/Dense>

#include <vector>

namespace bpinn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Reference-free view over a batch of equally sized vectors.
using VectorList = std::vector<Vector>;

}  // namespace bpinn
