#include "negrl/matrix.hpp"

#include <Eigen/Dense>

#include "negrl/errors.hpp"

namespace negrl {

RowMatX orthogonal_matrix(int rows, int cols, double gain, Rng& rng) {
  if (rows < 1 || cols < 1) throw InvalidInputError("orthogonal_matrix needs positive dimensions");
  const bool transpose = rows < cols;
  const int tall_rows = transpose ? cols : rows;
  const int tall_cols = transpose ? rows : cols;

  Eigen::MatrixXd gauss(tall_rows, tall_cols);
  for (int r = 0; r < tall_rows; ++r) {
    for (int c = 0; c < tall_cols; ++c) gauss(r, c) = rng.normal();
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall_rows, tall_cols);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(tall_cols).triangularView<Eigen::Upper>();
  for (int c = 0; c < tall_cols; ++c) {
    if (r(c, c) < 0.0) q.col(c) *= -1.0;
  }

  RowMatX out = transpose ? RowMatX(q.transpose()) : RowMatX(q);
  out *= gain;
  return out;
}

}  // namespace negrl
