#pragma once

#include <Eigen/Core>

#include "negrl/rng.hpp"

namespace negrl {

template <typename Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using RowMatX = RowMat<double>;

/// Orthogonal init: QR of a Gaussian draw, sign-fixed so the factorization is
/// unique, scaled by `gain`. Rows are orthonormal when rows <= cols and
/// columns when cols <= rows.
RowMatX orthogonal_matrix(int rows, int cols, double gain, Rng& rng);

}  // namespace negrl
