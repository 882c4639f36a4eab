#pragma once

// Pointwise rotation geometry: nearest rotation and Frobenius distance to
// SO(n), plus the two field-level means the decompositions are anchored to.

#include "rigidlab/field.hpp"

#include <vector>

namespace rigidlab {

struct RotationResult {
  MatN q;           // det +1, orthonormal
  double distance;  // |A - q| Frobenius; equals the singular-value formula
};

// n=2 via the closed-form angle atan2(A21-A12, A11+A22); n=3 via SVD with the
// determinant sign folded into the smallest singular direction. A = 0 (or the
// degenerate n=2 case A11+A22 = A21-A12 = 0) returns the identity and the
// distance is sqrt(n) resp. |A - Id|; any rotation is equally near there.
RotationResult nearest_rotation(const MatN& a);

// SVD path for any n in {2,3}; the n=2 unit tests cross-check the closed form
// against this.
RotationResult nearest_rotation_svd(const MatN& a);

// dist(Du(x), SO(n)) per cell.
ScalarField dist_field(const MatrixField& du);

// Nearest rotation to the cell average of Du (whole mask or a region).
MatN procrustes_mean(const MatrixField& du);
MatN procrustes_mean(const MatrixField& du, const std::vector<std::uint32_t>& cells);

// Skew part of the cell average of Du.
MatN skew_mean(const MatrixField& du);
MatN skew_mean(const MatrixField& du, const std::vector<std::uint32_t>& cells);

}  // namespace rigidlab
