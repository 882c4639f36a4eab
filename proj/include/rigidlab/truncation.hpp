#pragma once

// Lipschitz truncation: restricted maximal function over dyadic balls, the
// good set E where the function is provably Lipschitz, and the McShane
// extension that realizes u_M with u_M = u on E.

#include "rigidlab/calculus.hpp"

namespace rigidlab {

// M s(x) = max over r in {h, 2h, 4h, ...} up to the diameter of the average
// of |s| over the open ball B(x,r) cap Omega. r = h selects the cell itself,
// so M s >= |s| pointwise.
ScalarField maximal_function(const ScalarField& s);

struct GoodSet {
  std::vector<std::uint8_t> e_mask;  // over the full grid; subset of the domain mask
  std::size_t e_count = 0;
  double excess_measure = 0.0;   // |Omega \ E|
  double c_e_sampled = 0.0;      // sampled Lipschitz ratio of u on E, relative to lambda
};

GoodSet good_set(const VectorField& u, double lambda, std::uint64_t sample_seed = 7);

// McShane per component: min over y in E of u(y) + M|x-y|. Exact minimum
// (no spatial pruning; our grids are small enough that O(|Omega||E|) wins
// over a KD tree below ~1e5 cells).
VectorField lipschitz_extend(const VectorField& u, const std::vector<std::uint8_t>& e_mask,
                             double m);

struct TruncationResult {
  VectorField u_m;
  std::vector<std::uint8_t> e_mask;
  std::size_t e_count = 0;
  double lambda = 0.0;
  double c_e = 0.0;          // final per-component Lipschitz bound of u on E, / lambda
  double m = 0.0;            // c_e * lambda, the McShane slope
  double lipschitz_m = 0.0;  // sqrt(n) * m, the vector-level constant of u_m
  double excess_measure = 0.0;
  double bound_rhs = 0.0;    // (1/lambda) int_{|Du|>lambda} |Du|
};

// Composes good_set and lipschitz_extend. The slope is certified by an exact
// componentwise pair scan over E (the sampled estimate can undershoot), so
// u_M = u on E holds by construction. Empty E is an input error
// ("truncation degenerate: raise lambda").
TruncationResult truncate(const VectorField& u, double lambda);

}  // namespace rigidlab
