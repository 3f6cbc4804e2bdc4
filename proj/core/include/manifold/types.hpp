#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace manifold {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;  // compressed column storage
using Triplet = Eigen::Triplet<double>;

}  // namespace manifold
