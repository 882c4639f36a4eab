#include "rigidlab/rotations.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace rigidlab {

RotationResult nearest_rotation_svd(const MatN& a) {
  const int n = static_cast<int>(a.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::MatrixXd u = svd.matrixU();
  Eigen::MatrixXd v = svd.matrixV();
  Eigen::VectorXd d = Eigen::VectorXd::Ones(n);
  if ((u * v.transpose()).determinant() < 0) d[n - 1] = -1.0;
  MatN q = u * d.asDiagonal() * v.transpose();
  return {q, (a - q).norm()};
}

RotationResult nearest_rotation(const MatN& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 2) {
    double tr = a(0, 0) + a(1, 1);
    double sk = a(1, 0) - a(0, 1);
    double theta = std::atan2(sk, tr);  // atan2(0,0) = 0: identity on the degenerate ray
    MatN q(2, 2);
    double c = std::cos(theta), s = std::sin(theta);
    q << c, -s, s, c;
    return {q, (a - q).norm()};
  }
  return nearest_rotation_svd(a);
}

ScalarField dist_field(const MatrixField& du) {
  const auto& dom = du.domain();
  ScalarField out(du.domain_ptr());
  for (std::uint32_t c = 0; c < dom.ncells(); ++c)
    if (dom.inside(c)) out[c] = nearest_rotation(du.get(c)).distance;
  return out;
}

namespace {

MatN cell_mean(const MatrixField& du, const std::vector<std::uint32_t>& cells) {
  const int n = du.domain().dim;
  MatN acc = zero_mat(n);
  if (cells.empty()) fail_input("field mean over empty region");
  for (auto c : cells) acc += du.get(c);
  return MatN(acc / static_cast<double>(cells.size()));
}

}  // namespace

MatN procrustes_mean(const MatrixField& du) {
  return procrustes_mean(du, du.domain().inside_cells());
}
MatN procrustes_mean(const MatrixField& du, const std::vector<std::uint32_t>& cells) {
  return nearest_rotation(cell_mean(du, cells)).q;
}

MatN skew_mean(const MatrixField& du) { return skew_mean(du, du.domain().inside_cells()); }
MatN skew_mean(const MatrixField& du, const std::vector<std::uint32_t>& cells) {
  MatN m = cell_mean(du, cells);
  return MatN(0.5 * (m - m.transpose()));
}

}  // namespace rigidlab
