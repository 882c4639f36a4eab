#pragma once

// Nonlinear rigidity decompositions Du = Q + sum_alpha F_alpha around a
// single rotation, with dist(Du, SO(n)) majorized per exponent. The pipeline
// truncates to the Lipschitz regime, charges the truncation error to the
// dominant majorant, and linearizes around the mean rotation with the Korn
// engine as the workhorse, recursing until the exponent spread is small.

#include "rigidlab/field.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace rigidlab {

struct TaylorCheck {
  double lhs = 0.0;  // |sym(A) - Id|
  double rhs = 0.0;  // c (dist(A, SO(n)) + |A - Id|^2)
  bool ok = false;
};

// The linearization envelope at one matrix.
TaylorCheck taylor_check(const MatN& a, double c);

// Smallest constant making taylor_check pass over a deterministic seeded
// sweep of matrices with |A| <= 2n + 1 (the clipping range of the pipeline).
// Measured once per dimension and cached; the pipeline applies a 5% margin
// on top before trusting it cellwise.
double taylor_constant(int dim);

struct RigidityLpResult {
  MatN q;
  double ratio = 0.0;  // ||Du - Q||_p / ||dist(Du, SO)||_p; 0/0 -> 0
};

// Single-exponent baseline: Q is the Procrustes mean of Du.
RigidityLpResult rigidity_lp(const VectorField& u, double p);

struct RigidityResult {
  MatN q;                              // proper rotation
  std::vector<MatrixField> parts;      // F_alpha, one per input slot
  ExponentList exponents;
  std::vector<double> part_norms;      // ||F_alpha||_{p_alpha}
  std::vector<double> majorant_norms;  // ||f_alpha||_{p_alpha} of the inputs
  std::vector<double> ratios;          // part / majorant; 0/0 -> 0, x/0 -> inf
  nlohmann::json telemetry;            // branch trace, truncation stats, taylor constant
};

// Lipschitz-regime decomposition: requires |Du| <= m on the mask and
// dist(Du, SO) <= f + g + 1e-10 pointwise; majorants are clamped to [0, 2m]
// internally. 1 < p < q.
RigidityResult rigidity_lipschitz(const VectorField& u, const ScalarField& f,
                                  const ScalarField& g, double p, double q, double m);

// Full pipeline, no Lipschitz assumption: dist(Du, SO) <= f + g + 1e-10.
RigidityResult rigidity_mixed(const VectorField& u, const ScalarField& f, const ScalarField& g,
                              double p, double q);

RigidityResult rigidity_multi(const VectorField& u, const std::vector<ScalarField>& majorants,
                              const ExponentList& exponents);

}  // namespace rigidlab
