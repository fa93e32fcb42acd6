#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace idcrn {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

using Labels = std::vector<int>;
using Mask = std::vector<bool>;

// Largest N for which N x N matrices are materialized densely.
inline constexpr Index kDefaultDenseCap = 25000;

// Norm guard used by every cosine computation.
inline constexpr double kNormEpsilon = 1e-12;

}  // namespace idcrn
