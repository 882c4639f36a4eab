#pragma once

// .gfld on-disk format: one JSON header line, then little-endian float64
// payload for mask-true cells in row-major cell order (components fastest).
// Header fields: version, dim, shape, spacing, origin, rank (0/1/2), mask_rle.
// mask_rle alternates run lengths outside/inside, starting with the outside
// run (possibly 0). Round-trips are bit-exact.

#include "rigidlab/field.hpp"

#include <string>
#include <variant>

namespace rigidlab {

void write_gfld(const std::string& path, const ScalarField& f);
void write_gfld(const std::string& path, const VectorField& f);
void write_gfld(const std::string& path, const MatrixField& f);

using AnyField = std::variant<ScalarField, VectorField, MatrixField>;
AnyField read_gfld(const std::string& path);

int gfld_rank(const AnyField& f);

}  // namespace rigidlab
