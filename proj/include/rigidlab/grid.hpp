#pragma once

// Masked uniform grids. Cells are indexed row-major (last axis fastest) over
// the bounding box; the mask selects the cells that belong to the domain.
// Cell-centered convention: cell (i,j) covers [origin + i*h, origin + (i+1)*h)
// per axis and carries its value at the center.

#include "rigidlab/common.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace rigidlab {

// Global description of a Lipschitz-graph boundary in axis-aligned frame:
// the domain lies below the graph, x_n < phi(x'). phi is stored as samples
// and evaluated by piecewise-linear (n=2) or bilinear (n=3) interpolation.
struct BoundaryGraph {
  std::vector<double> axis1;   // sample coordinates along x_1
  std::vector<double> axis2;   // along x_2 (empty for n=2)
  std::vector<double> values;  // phi samples, axis2-fastest layout
  double lipschitz = 0.0;

  double eval(double x1, double x2 = 0.0) const;
  void validate() const;  // sampled Lipschitz bound must respect `lipschitz`
};

struct GridDomain {
  int dim = 2;
  std::array<int, 3> shape{1, 1, 1};  // shape[2] == 1 when dim == 2
  double spacing = 0.0;
  std::array<double, 3> origin{0.0, 0.0, 0.0};
  std::vector<std::uint8_t> mask;
  std::optional<BoundaryGraph> boundary_graph;

  // Provenance for analytic geometry (covers, charts). "custom" when loaded
  // from a .gfld file or assembled by hand in tests.
  std::string kind = "custom";
  double size = 0.0;
  double lipschitz_L = 0.0;

  std::size_t ncells() const {
    return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
  }
  std::uint32_t index(int i, int j, int k = 0) const {
    return static_cast<std::uint32_t>((static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k);
  }
  std::array<int, 3> unpack(std::uint32_t c) const {
    int k = static_cast<int>(c) % shape[2];
    int j = (static_cast<int>(c) / shape[2]) % shape[1];
    int i = static_cast<int>(c) / (shape[1] * shape[2]);
    return {i, j, k};
  }
  bool inside(std::uint32_t c) const { return mask[c] != 0; }
  bool in_bounds(int i, int j, int k = 0) const {
    return i >= 0 && i < shape[0] && j >= 0 && j < shape[1] && k >= 0 && k < shape[2];
  }
  VecN cell_center(std::uint32_t c) const {
    auto ijk = unpack(c);
    VecN x(dim);
    for (int a = 0; a < dim; ++a) x[a] = origin[a] + (ijk[a] + 0.5) * spacing;
    return x;
  }
  // Nearest cell holding the point, or -1 when out of the bounding box.
  std::int64_t locate(const VecN& x) const;

  std::size_t inside_count() const;
  std::vector<std::uint32_t> inside_cells() const;
  double cell_measure() const;     // h^n
  double bounding_diameter() const;
  double min_extent() const;

  void validate() const;  // mask non-empty, connected; finite geometry
};

// kind in {"square", "lshape", "graph_halfball"}. `size` is the edge length
// (square/lshape) or the ball radius R (graph_halfball, box [-R,R]^n with
// phi(x') = L|x'|). `resolution` counts cells per axis of the bounding box.
std::shared_ptr<GridDomain> make_domain(const std::string& kind, double size, int resolution,
                                        double lipschitz_L, int dim = 2);

// Drop inside cells lacking an inside neighbor along some axis, repeating
// until stable. Masks cut by curved or slanted boundaries grow one-cell
// whiskers that cannot support difference stencils; every constructed domain
// runs through this before use.
void trim_stencil_orphans(GridDomain& dom);

}  // namespace rigidlab
