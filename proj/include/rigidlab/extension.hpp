#pragma once

// Reflection-type extension of (u, f, g) across a Lipschitz graph boundary:
// w is built from weighted samples of u along downward rays x - lambda
// delta(x) e_n, and matrix fields f~, g~ are assembled so that Ew = f~ + g~
// holds on the output ball with per-exponent norm control. The weight psi
// has vanishing first moment, which is what removes the boundary trace from
// the Hessian term.

#include "rigidlab/calculus.hpp"

namespace rigidlab {

// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
// on the Legendre recurrence (no tables).
std::vector<std::pair<double, double>> gauss_legendre(int n);

// psi on [1,2] with int psi = 1 and int lambda psi = 0. The affine choice is
// psi = 28 - 18 lambda; the blended variant multiplies a sin^2 bump in so
// psi extends C1 by zero outside [1,2] (the affine one jumps at the
// endpoints, which no computed quantity sees since all integrals stop there).
struct MomentWeight {
  bool blended = false;
  double a = 28.0, b = -18.0;  // affine coefficients
  double c1 = 0.0, c2 = 0.0;   // blended coefficients for (1 + lambda) * bump
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;

  double eval(double lambda) const;
};

MomentWeight moment_weight(bool blended = false);

// delta = beta * (mollified signed distance to the graph), with beta chosen
// so delta >= 2 dist on the exterior. Fields live on a small full-mask box
// around the output ball; derivatives are central differences on that box.
struct RegularizedDistance {
  std::shared_ptr<const GridDomain> box;
  ScalarField delta;       // beta * mollified signed distance
  ScalarField dist_exact;  // signed distance to the piecewise linear graph
  VectorField grad;
  MatrixField hess;
  double beta = 0.0;     // normalization, 2 for a flat graph
  double c_upper = 0.0;  // max delta / dist over exterior cells
  double c_grad = 0.0;   // max |D delta| over exterior cells
  double c_hess = 0.0;   // max |D^2 delta| * delta over exterior cells
};

// Requires dom.boundary_graph. R is the chart ball radius; the fields cover
// the output ball of radius r = R / (2 sqrt(1 + L^2)) plus a two-cell halo.
RegularizedDistance regularized_distance(const GridDomain& dom, double R);

struct ExtensionResult {
  std::shared_ptr<const GridDomain> ball;  // same lattice, mask |x| < r
  VectorField w;
  MatrixField f_ext;
  MatrixField g_ext;
  double r = 0.0;
  double residual_sup = 0.0;  // sup |Ew - f~ - g~| over formula cells
  double ratio_p = 0.0;       // ||f~||_p(ball) / ||f||_p(Omega cap B(0,R))
  double ratio_q = 0.0;
  RegularizedDistance dist;
};

// u, f, g live on a domain with a boundary graph (mask below the graph);
// requires Eu = f + g there to precheck_tol. Cells of the output ball below
// the graph are copied; cells above get the ray formula, sampling u, f, g
// back in the domain by mask-aware multilinear interpolation. A ray or copy
// cell leaving the sampled region is an input error (geometry).
ExtensionResult extend(const VectorField& u, const MatrixField& f, const MatrixField& g,
                       double p, double q, double R,
                       const MomentWeight& psi = moment_weight(),
                       double precheck_tol = 1e-10);

}  // namespace rigidlab
