#pragma once

// Discrete calculus on masked grids: finite-difference derivatives, Lp norms,
// and the pointwise split of a matrix field between scalar majorants.

#include "rigidlab/field.hpp"

#include <vector>

namespace rigidlab {

// Central differences where both axis neighbors are inside, one-sided
// first-order otherwise (exact on affine fields either way). A cell with no
// inside neighbor along some axis is a stencil error.
MatrixField gradient(const VectorField& u);        // (Du)_ij = d u_i / d x_j
VectorField gradient(const ScalarField& s);
MatrixField sym_grad(const VectorField& u);        // (Du + Du^T)/2

// Pointwise Frobenius norm |A(x)|.
ScalarField frobenius_field(const MatrixField& a);

// Lp over mask cells with measure h^n; p = kInf gives the max. p < 1 is an
// input error. Region variants restrict to the given cells.
double lp_norm(const ScalarField& s, double p);
double lp_norm(const VectorField& u, double p);
double lp_norm(const MatrixField& a, double p);
double lp_norm_region(const ScalarField& s, double p, const std::vector<std::uint32_t>& cells);
double lp_norm_region(const MatrixField& a, double p, const std::vector<std::uint32_t>& cells);

// Mask-aware multilinear interpolation at an off-lattice point: corner
// weights of the containing cell, restricted to inside corners and
// renormalized (constants are preserved near the mask edge, linears exactly
// when every corner is inside). No inside corner at all is an input error
// (geometry: the point left the sampled region).
struct InterpSample {
  std::array<std::uint32_t, 8> cells{};
  std::array<double, 8> weights{};
  int count = 0;
};

InterpSample interp_sample(const GridDomain& dom, const VecN& x);

// True when interp_sample(dom, x) would find an inside corner. Lets chart
// builders trim lattice cells whose world pullback has left the mask without
// paying for an exception.
bool can_sample(const GridDomain& dom, const VecN& x);

double sample_scalar(const ScalarField& s, const VecN& x);
VecN sample_vector(const VectorField& u, const VecN& x);
MatN sample_matrix(const MatrixField& a, const VecN& x);
double sample_matrix_comp(const MatrixField& a, int i, int j, const VecN& x);

// Pointwise convex split A = sum_alpha parts[alpha] with |parts[alpha]| <=
// |majorant_alpha| a.e.; requires |A| <= sum |majorants| + 1e-10 pointwise
// (contract error naming the worst cell otherwise). Where all majorants
// vanish, A must too, and every part is zero.
std::vector<MatrixField> split_by_majorants(const MatrixField& a,
                                            const std::vector<const ScalarField*>& majorants);
std::pair<MatrixField, MatrixField> split_by_majorants(const MatrixField& a, const ScalarField& f,
                                                       const ScalarField& g);

}  // namespace rigidlab
