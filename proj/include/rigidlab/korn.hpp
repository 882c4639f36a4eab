#pragma once

// Mixed-growth Korn decompositions Du = S + sum_alpha F_alpha with a constant
// skew matrix and per-exponent norm control of each part by its scalar
// majorant. One engine serves the two-exponent and N-exponent entry points;
// the two-exponent form is the N = 2 instance.

#include "rigidlab/cover.hpp"
#include "rigidlab/field.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace rigidlab {

struct KornClassicalResult {
  MatN s;             // skew mean of Du over the region
  double ratio = 0.0; // ||Du - S||_p / ||Eu||_p on the region; 0/0 -> 0, x/0 -> inf
};

// Region cells must lie in the mask; p in (1, inf).
KornClassicalResult korn_classical(const VectorField& u, const std::vector<std::uint32_t>& region,
                                   double p);

struct MixedDecomposition {
  MatN constant;                       // skew S
  std::vector<MatrixField> parts;      // F_alpha, one per input slot
  ExponentList exponents;
  std::vector<double> part_norms;      // ||F_alpha||_{p_alpha}
  std::vector<double> majorant_norms;  // ||f_alpha||_{p_alpha} of the inputs
  std::vector<double> ratios;          // part / majorant; 0/0 -> 0, x/0 -> inf
  nlohmann::json telemetry;            // branch, merges, cover stats, diagnostics
};

// Decompose Du - S with |Eu| <= f + g pointwise (tolerance 1e-10); F is
// controlled in L^p, G in L^q. Equals korn_multi with two slots.
MixedDecomposition korn_mixed(const VectorField& u, const ScalarField& f, const ScalarField& g,
                              double p, double q);

MixedDecomposition korn_multi(const VectorField& u, const std::vector<ScalarField>& majorants,
                              const ExponentList& exponents);

}  // namespace rigidlab
