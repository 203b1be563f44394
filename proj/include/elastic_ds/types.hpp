#pragma once

#include <vector>

#include <Eigen/Core>

namespace elastic_ds {

// Workspace vectors and matrices. Dimension is dynamic (2 or 3) but bounded,
// so storage stays on the stack and the control-loop path does not allocate.
inline constexpr int kMaxDim = 3;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

using Point = Vec;
using Points = std::vector<Vec>;

}  // namespace elastic_ds
