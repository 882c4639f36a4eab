#pragma once

// Finite ball covers of grid domains, the geometry underneath the mixed
// decompositions. Boundary balls are centered on the analytic boundary and
// carry a rotated frame in which the nearby boundary is a Lipschitz graph;
// interior balls sit strictly inside the mask. The shrunken balls
// B(x_l, gamma r_l / 2) cover every mask cell, and the first ball covering a
// cell owns it, which fixes the patch order of the decompositions.

#include "rigidlab/field.hpp"
#include "rigidlab/grid.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace rigidlab {

// World-to-frame rotation for one boundary ball. Rows of rot are the frame
// axes; the last row points outward so that "inside" means below the frame
// graph. chart_radius is the data window of the chart. It is sized from the
// catalogue slope estimate so the extension ball derived from it has radius
// at least gamma * radius even when the chart is steeper than the domain's
// declared constant (sphere/wedge junctions reach slope about 1 + curvature
// no matter how gentle the wedge is).
struct ChartFrame {
  MatN rot;
  double chart_radius = 0.0;
  double lipschitz_est = 0.0;
};

struct Ball {
  VecN center;
  double radius = 0.0;
  bool boundary = false;
  std::optional<ChartFrame> chart;
};

// Chart lattice for one boundary ball: a frame-aligned box whose boundary
// graph is sampled by ray bisection against the analytic inside test. Mask
// cells lie below the sampled graph and keep at least one inside
// interpolation corner when pulled back to the world grid.
struct FrameDomain {
  std::shared_ptr<const GridDomain> dom;
  VecN center;  // world center of the ball
  MatN rot;     // world -> frame
  double chart_radius = 0.0;

  VecN to_world(const VecN& xi) const { return center + rot.transpose() * xi; }
  VecN to_frame(const VecN& x) const { return rot * (x - center); }
};

struct BallCover {
  std::shared_ptr<const GridDomain> dom;
  std::vector<Ball> balls;
  double gamma = 0.0;  // 1 / (2 sqrt(1 + L^2)) with L the declared domain constant
  double alpha = 0.0;  // minimal nonempty pairwise overlap measure of shrunken balls
  std::size_t boundary_count = 0;
  std::vector<std::int32_t> owner;                // cell -> first covering ball, -1 off mask
  std::vector<std::vector<std::uint32_t>> owned;  // cells per ball (may be empty)
  std::vector<std::shared_ptr<const FrameDomain>> frames;  // per ball, null for interior

  // Ownership radius. Boundary balls serve an extension ball of radius at
  // least 0.999 gamma r (checked when the chart is built), and interior balls
  // solve on their full radius, so owning out to 0.98 gamma r keeps every
  // owned cell strictly inside the region its decomposition is valid on while
  // covering the boundary strip down to cell depth.
  double shrunken_radius(std::size_t l) const { return 0.98 * gamma * balls[l].radius; }
};

// Mask cells whose centers lie strictly within radius of center.
std::vector<std::uint32_t> ball_cells(const GridDomain& dom, const VecN& center, double radius);

// Continuum membership test and exact boundary distance for the catalogued
// kinds (square, lshape, graph_halfball). Input error for "custom".
bool analytic_inside(const GridDomain& dom, const VecN& x);
double analytic_boundary_distance(const GridDomain& dom, const VecN& x);

FrameDomain build_frame_domain(const GridDomain& world, const Ball& ball);

BallCover build_cover(const std::shared_ptr<const GridDomain>& dom);

}  // namespace rigidlab
