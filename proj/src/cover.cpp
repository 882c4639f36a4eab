#include "rigidlab/cover.hpp"

#include "rigidlab/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

namespace rigidlab {
namespace {

double gamma_of(double l) { return 1.0 / (2.0 * std::sqrt(1.0 + l * l)); }

VecN vec2(double x, double y) {
  VecN v(2);
  v << x, y;
  return v;
}

// Frame for a boundary ball from its outward direction: row 0 tangent,
// row 1 outward, so frame coordinates have the domain below the graph.
MatN frame_rot(const VecN& outward) {
  VecN en = outward.normalized();
  MatN r(2, 2);
  r(0, 0) = en[1];
  r(0, 1) = -en[0];
  r(1, 0) = en[0];
  r(1, 1) = en[1];
  return r;
}

// Chart data window. Sized so that the extension ball computed from the
// measured chart slope (at most l_est) keeps radius >= gamma * radius.
constexpr double kChartMargin = 1.1;

double chart_window(double radius, double l_est, double gamma) {
  return kChartMargin * radius * gamma * 2.0 * std::sqrt(1.0 + l_est * l_est);
}

struct WalkBall {
  VecN center;
  VecN outward;
  double radius = 0.0;
  double l_est = 0.0;
};

[[noreturn]] void fail_radius(const VecN& x) {
  fail_input("resolution too coarse for a valid cover: boundary ball radius underflow near (" +
             std::to_string(x[0]) + ", " + std::to_string(x[1]) + ")");
}

// Shared walk for polygonal kinds (square, lshape). Vertices ccw with the
// domain on the left of each edge; every vertex is a corner feature whose
// bisector frame shows both adjacent faces as a slope-1 graph, so balls near
// a corner borrow that frame. Mid-face balls use the flat face frame.
void walk_polygon(const std::vector<VecN>& vtx, const std::vector<VecN>& vtx_out, double gamma,
                  double h, double cap, std::vector<WalkBall>& out) {
  const double cf_flat = kChartMargin * gamma * 2.0 * std::sqrt(1.0 + 0.05 * 0.05);
  const double cf_corner = kChartMargin * gamma * 2.0 * std::sqrt(2.0);
  const double den = std::sqrt(2.0) * std::max(1.0, cf_corner);
  const std::size_t m = vtx.size();
  auto edge_len = [&](std::size_t i) { return (vtx[(i + 1) % m] - vtx[i]).norm(); };
  for (std::size_t i = 0; i < m; ++i) {
    const VecN& a = vtx[i];
    const double ell = edge_len(i);
    const double ell_prev = edge_len((i + m - 1) % m);
    const double ell_next = edge_len((i + 1) % m);
    const VecN tau = (vtx[(i + 1) % m] - a) / ell;
    const VecN nface = vec2(tau[1], -tau[0]);

    double rfeat = std::min(cap, (std::min(0.97 * ell, 0.97 * ell_prev) - 2 * h) / den);
    if (rfeat < 0.5 * h) fail_radius(a);
    out.push_back({a, vtx_out[i], rfeat, 1.0});

    double t = std::max(0.55 * gamma * rfeat / 2.0, 0.25 * h);
    while (t < ell) {
      const double rf = 0.95 * (std::min(t, ell - t) - 2 * h) / std::max(1.0, cf_flat);
      const double rca =
          (std::min(0.97 * ell - t, 0.97 * ell_prev + t) - 2 * h) / den;
      const double rcb =
          (std::min(0.97 * ell - (ell - t), 0.97 * ell_next + (ell - t)) - 2 * h) / den;
      const double r = std::min(cap, std::max({rf, rca, rcb}));
      if (r < 0.5 * h) fail_radius(a + t * tau);
      const VecN pos = a + t * tau;
      if (rf >= rca && rf >= rcb)
        out.push_back({pos, nface, r, 0.05});
      else if (rca >= rcb)
        out.push_back({pos, vtx_out[i], r, 1.0});
      else
        out.push_back({pos, vtx_out[(i + 1) % m], r, 1.0});
      t += std::max(0.55 * gamma * r / 2.0, 0.25 * h);
    }
  }
}

// The half-ball boundary has three smooth pieces (two wedge faces, one
// sphere arc) and three features: the cone apex and the two wedge-sphere
// junctions. At a junction the wedge ray is a radius of the circle, so the
// two boundary tangents are orthogonal for every L and the best graph frame
// (the bisector of the outward normals) starts at slope 1; curvature then
// raises the slope along the arc, which bounds the usable window.
void walk_halfball(const GridDomain& dom, double gamma, double h, std::vector<WalkBall>& out) {
  const double r_dom = dom.size;
  const double lw = dom.lipschitz_L;
  const double s1 = std::sqrt(1.0 + lw * lw);
  const double tj = r_dom / s1;
  const VecN pj[2] = {vec2(tj, lw * tj), vec2(-tj, lw * tj)};
  const VecN apex = vec2(0.0, 0.0);
  const VecN apex_out = vec2(0.0, 1.0);
  const VecN nw[2] = {vec2(-lw, 1.0) / s1, vec2(lw, 1.0) / s1};
  VecN jout[2];
  for (int k = 0; k < 2; ++k) jout[k] = (nw[k] + pj[k] / r_dom).normalized();

  const double cap = 0.25 * r_dom;
  const double l_junc = 2.4;
  const double l_apex = lw + 0.01;
  const double l_sph = 0.5;
  const double arc_budget = 0.95 * (std::atan(l_junc) - 0.25 * 3.14159265358979323846) * r_dom;
  const double cf_flat = kChartMargin * gamma * 2.0 * std::sqrt(1.0 + 0.05 * 0.05);
  const double cf_apex = kChartMargin * gamma * 2.0 * std::sqrt(1.0 + l_apex * l_apex);
  const double cf_junc = kChartMargin * gamma * 2.0 * std::sqrt(1.0 + l_junc * l_junc);
  const double cf_sph = kChartMargin * gamma * 2.0 * std::sqrt(1.0 + l_sph * l_sph);

  // A chart of radius r samples lateral offsets |t| <= cf * r + 2h, reaching
  // boundary length sqrt(1 + l^2) times that from its center. Each radius
  // formula keeps the reach within the distance to where its slope class
  // stops being valid.
  const double s_junc = std::sqrt(1.0 + l_junc * l_junc);
  const double s_sph = std::sqrt(1.0 + l_sph * l_sph);
  const double arc_sph = 0.95 * std::atan(l_sph) * r_dom;

  auto junc_radius = [&](double d) {
    return ((arc_budget - d) / s_junc - 2 * h) / cf_junc;
  };
  auto wedge_ball = [&](int k, double t) {  // t = distance from the apex
    const double dj = r_dom - t;
    const double rf = (0.95 * std::min(t, dj) - 2 * h) / cf_flat;
    const double rap = ((0.95 * r_dom - t) / s1 - 2 * h) / cf_apex;
    const double rj = junc_radius(dj);
    const double r = std::min(cap, std::max({rf, rap, rj}));
    const VecN pos = apex + t * (pj[k] / r_dom);
    if (r < 0.5 * h) fail_radius(pos);
    if (rap >= rf && rap >= rj) return WalkBall{pos, apex_out, r, l_apex};
    if (rf >= rj) return WalkBall{pos, nw[k], r, 0.05};
    return WalkBall{pos, jout[k], r, l_junc};
  };

  const double ra_feat =
      std::min(cap, (0.95 * r_dom - 2 * h) / (s1 * std::max(1.0, cf_apex)));
  if (ra_feat < 0.5 * h) fail_radius(apex);
  out.push_back({apex, apex_out, ra_feat, l_apex});

  double t = std::max(0.55 * gamma * ra_feat / 2.0, 0.25 * h);
  while (t < r_dom) {
    WalkBall wb = wedge_ball(0, t);
    out.push_back(wb);
    t += std::max(0.55 * gamma * wb.radius / 2.0, 0.25 * h);
  }

  const double rj_feat = std::min(cap, junc_radius(0.0));
  if (rj_feat < 0.5 * h) fail_radius(pj[0]);
  out.push_back({pj[0], jout[0], rj_feat, l_junc});

  const double th0 = std::atan2(pj[0][1], pj[0][0]);
  const double arc_len = (3.14159265358979323846 + 2.0 * std::atan(lw)) * r_dom;
  t = std::max(0.55 * gamma * rj_feat / 2.0, 0.25 * h);
  while (t < arc_len) {
    const double dj = std::min(t, arc_len - t);
    const double rs = (std::min(0.95 * dj, arc_sph) / s_sph - 2 * h) / cf_sph;
    const double rj = junc_radius(dj);
    const double r = std::min(cap, std::max(rs, rj));
    const double th = th0 - t / r_dom;
    const VecN pos = vec2(r_dom * std::cos(th), r_dom * std::sin(th));
    if (r < 0.5 * h) fail_radius(pos);
    if (rs >= rj)
      out.push_back({pos, pos / r_dom, r, l_sph});
    else
      out.push_back({pos, jout[t <= 0.5 * arc_len ? 0 : 1], r, l_junc});
    t += std::max(0.55 * gamma * r / 2.0, 0.25 * h);
  }

  out.push_back({pj[1], jout[1], rj_feat, l_junc});
  t = std::max(0.55 * gamma * rj_feat / 2.0, 0.25 * h);
  while (t < r_dom) {
    WalkBall wb = wedge_ball(1, r_dom - t);
    out.push_back(wb);
    t += std::max(0.55 * gamma * wb.radius / 2.0, 0.25 * h);
  }
}

double dist_point_clamped_face(const VecN& x, int fix_axis, double fix_val, int free_axis,
                               double lo, double hi) {
  // Distance to an axis-aligned face strip {x[fix] = val, x[free] in [lo,hi]}
  // (remaining axes unconstrained within the box, valid for inside points).
  double d0 = x[fix_axis] - fix_val;
  double d1 = x[free_axis] - std::clamp(x[free_axis], lo, hi);
  return std::hypot(d0, d1);
}

}  // namespace

bool analytic_inside(const GridDomain& dom, const VecN& x) {
  if (dom.kind == "square" || dom.kind == "lshape") {
    for (int a = 0; a < dom.dim; ++a)
      if (!(x[a] > 0.0 && x[a] < dom.size)) return false;
    if (dom.kind == "lshape" && x[0] > 0.5 * dom.size && x[1] > 0.5 * dom.size) return false;
    return true;
  }
  if (dom.kind == "graph_halfball") {
    if (x.norm() >= dom.size) return false;
    double lat = dom.dim == 2 ? std::abs(x[0]) : std::hypot(x[0], x[1]);
    return x[dom.dim - 1] < dom.lipschitz_L * lat;
  }
  fail_input("analytic geometry unavailable for domain kind '" + dom.kind + "'");
}

double analytic_boundary_distance(const GridDomain& dom, const VecN& x) {
  if (dom.kind == "square" || dom.kind == "lshape") {
    double d = dom.size;
    for (int a = 0; a < dom.dim; ++a) d = std::min({d, x[a], dom.size - x[a]});
    if (dom.kind == "lshape") {
      double m = 0.5 * dom.size;
      d = std::min(d, dist_point_clamped_face(x, 0, m, 1, m, dom.size));
      d = std::min(d, dist_point_clamped_face(x, 1, m, 0, m, dom.size));
    }
    return d;
  }
  if (dom.kind == "graph_halfball") {
    double d = dom.size - x.norm();
    double lat = dom.dim == 2 ? std::abs(x[0]) : std::hypot(x[0], x[1]);
    // cone distance in the (lat, x_n) half-plane; the nearest cone point
    // shares the azimuth, so this is exact in both dimensions
    double px = lat, py = x[dom.dim - 1];
    double s1 = std::sqrt(1.0 + dom.lipschitz_L * dom.lipschitz_L);
    double dirx = 1.0 / s1, diry = dom.lipschitz_L / s1;
    double tproj = std::max(0.0, px * dirx + py * diry);
    d = std::min(d, std::hypot(px - tproj * dirx, py - tproj * diry));
    return d;
  }
  fail_input("analytic geometry unavailable for domain kind '" + dom.kind + "'");
}

std::vector<std::uint32_t> ball_cells(const GridDomain& dom, const VecN& center, double radius) {
  std::vector<std::uint32_t> out;
  int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
  for (int a = 0; a < dom.dim; ++a) {
    lo[a] = std::max(0, static_cast<int>(std::ceil((center[a] - radius - dom.origin[a]) / dom.spacing - 0.5)));
    hi[a] = std::min(dom.shape[a] - 1,
                     static_cast<int>(std::floor((center[a] + radius - dom.origin[a]) / dom.spacing - 0.5)));
  }
  const double r2 = radius * radius;
  for (int i = lo[0]; i <= hi[0]; ++i)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int k = (dom.dim == 3 ? lo[2] : 0); k <= (dom.dim == 3 ? hi[2] : 0); ++k) {
        std::uint32_t c = dom.index(i, j, k);
        if (!dom.inside(c)) continue;
        VecN xc = dom.cell_center(c);
        if ((xc - center).squaredNorm() < r2) out.push_back(c);
      }
  return out;
}

FrameDomain build_frame_domain(const GridDomain& world, const Ball& ball) {
  if (!ball.boundary || !ball.chart) fail_input("frame domain requested for an interior ball");
  const ChartFrame& cf = *ball.chart;
  const double h = world.spacing;
  const double w = cf.chart_radius;
  const MatN rot = cf.rot;
  const MatN rot_t = rot.transpose();
  auto to_world = [&](double t, double s) {
    VecN xi = vec2(t, s);
    return VecN(ball.center + rot_t * xi);
  };

  // Sample the frame graph by bisecting the analytic inside test along the
  // outward axis. Each ray brackets the crossing locally around the previous
  // ray's value (a fixed deep probe would punch through the far side of small
  // domains). Rays beyond 0.9 of the window may miss a clean transition (the
  // window is padded past the validity budget); those samples continue the
  // last reliable slope, which only ever affects cells that the extension
  // never reads.
  const double pitch = 0.5 * h;
  const int nside = static_cast<int>(std::ceil((w + 2 * h) / pitch));
  const int nsamp = 2 * nside + 1;
  std::vector<double> coord(nsamp), phi(nsamp);
  std::vector<char> have(nsamp, 0);
  for (int k = -nside; k <= nside; ++k) coord[k + nside] = k * pitch;
  const double srange = (cf.lipschitz_est + 0.5) * (w + 2 * h) + 4 * h;
  const double step = std::max(h, 1.5 * cf.lipschitz_est * pitch);

  auto bisect = [&](int slot, double seed) {
    double tcoord = coord[slot];
    double lo = seed;
    while (!analytic_inside(world, to_world(tcoord, lo)) && lo > seed - srange) lo -= step;
    double hi = seed;
    while (analytic_inside(world, to_world(tcoord, hi)) && hi < seed + srange) hi += step;
    if (!analytic_inside(world, to_world(tcoord, lo)) ||
        analytic_inside(world, to_world(tcoord, hi)))
      return false;
    for (int it = 0; it < 64; ++it) {
      double mid = 0.5 * (lo + hi);
      if (analytic_inside(world, to_world(tcoord, mid)))
        lo = mid;
      else
        hi = mid;
    }
    phi[slot] = 0.5 * (lo + hi);
    have[slot] = 1;
    return true;
  };
  auto fill_side = [&](int dir) {
    for (int k = 1; k <= nside; ++k) {
      int slot = nside + dir * k;
      if (bisect(slot, phi[slot - dir])) continue;
      if (std::abs(coord[slot]) < 0.9 * w)
        fail_contract("chart ray misses the boundary inside the chart window at offset " +
                      std::to_string(coord[slot]));
      int p1 = slot - dir, p2 = slot - 2 * dir;
      phi[slot] = have[p2] ? 2.0 * phi[p1] - phi[p2] : phi[p1];
      have[slot] = 1;
    }
  };
  if (!bisect(nside, 0.0))
    fail_contract("chart ray misses the boundary at the ball center");
  fill_side(+1);
  fill_side(-1);

  double l_meas = 0.0;
  for (int k = 1; k < nsamp; ++k)
    l_meas = std::max(l_meas, std::abs(phi[k] - phi[k - 1]) / pitch);
  if (l_meas > cf.lipschitz_est + 1e-9)
    fail_contract("chart slope " + std::to_string(l_meas) + " exceeds its catalogue estimate " +
                  std::to_string(cf.lipschitz_est));

  BoundaryGraph graph;
  graph.axis1 = coord;
  graph.values = phi;
  graph.lipschitz = l_meas + 1e-9;
  graph.validate();

  const double r_plan = w / (2.0 * std::sqrt(1.0 + graph.lipschitz * graph.lipschitz));
  const double gamma = gamma_of(world.lipschitz_L);
  if (r_plan < 0.999 * gamma * ball.radius)
    fail_contract("chart window too small: extension ball " + std::to_string(r_plan) +
                  " below gamma * r = " + std::to_string(gamma * ball.radius));

  // Box: data window plus room above the graph for the exterior collar and
  // below for reflected quadrature rays. Flat charts need depth ~3r; kinked
  // ones inflate the regularized distance, so give them more.
  const double c_cap = cf.lipschitz_est <= 0.1 ? 2.5 : 6.0;
  double phimax = *std::max_element(phi.begin(), phi.end());
  double phimin = *std::min_element(phi.begin(), phi.end());
  const double lat = w + 2 * h;
  const double top = phimax + 1.5 * r_plan + 6 * h;
  const double bot = phimin - ((1.0 + 2.0 * c_cap) * r_plan + 6 * h);

  auto dom = std::make_shared<GridDomain>();
  dom->dim = 2;
  dom->spacing = h;
  dom->shape = {static_cast<int>(std::ceil(2 * lat / h)), static_cast<int>(std::ceil((top - bot) / h)), 1};
  dom->origin = {-lat, bot, 0.0};
  dom->kind = "chart";
  dom->size = w;
  dom->lipschitz_L = graph.lipschitz;
  dom->boundary_graph = graph;
  dom->mask.assign(dom->ncells(), 0);
  for (std::uint32_t c = 0; c < dom->ncells(); ++c) {
    VecN xi = dom->cell_center(c);
    if (xi[1] >= graph.eval(xi[0])) continue;
    if (!can_sample(world, to_world(xi[0], xi[1]))) continue;
    dom->mask[c] = 1;
  }
  // The sampleable window can clip the subgraph at a slant, and chart frames
  // rotated against a boundary kink pinch the interior to one-cell columns;
  // neither can support difference stencils.
  trim_stencil_orphans(*dom);

  // The sampled graph must classify the data window the same way as the
  // analytic geometry, except within one interpolation band of the graph.
  const double band = 1.2 * (1.0 + l_meas) * h;
  for (std::uint32_t c = 0; c < dom->ncells(); ++c) {
    VecN xi = dom->cell_center(c);
    if (xi.norm() > w) continue;
    double g = graph.eval(xi[0]);
    if (std::abs(xi[1] - g) <= band) continue;
    bool below = xi[1] < g;
    if (below != analytic_inside(world, to_world(xi[0], xi[1])))
      fail_contract("chart classification disagrees with the domain geometry at frame offset (" +
                    std::to_string(xi[0]) + ", " + std::to_string(xi[1]) + ")");
  }

  FrameDomain fd;
  fd.dom = dom;
  fd.center = ball.center;
  fd.rot = rot;
  fd.chart_radius = w;
  return fd;
}

BallCover build_cover(const std::shared_ptr<const GridDomain>& dom) {
  const GridDomain& d = *dom;
  const double h = d.spacing;
  BallCover cov;
  cov.dom = dom;
  cov.gamma = gamma_of(d.lipschitz_L);

  std::vector<WalkBall> walk;
  bool single_ball = false;
  if (d.kind == "custom") {
    single_ball = true;
  } else if (d.dim != 2) {
    fail_input("cover construction: the boundary chart catalogue is two-dimensional; "
               "higher-dimensional inputs are served by the merge branches only");
  } else if (d.kind == "square") {
    const double s = d.size;
    std::vector<VecN> vtx = {vec2(0, 0), vec2(s, 0), vec2(s, s), vec2(0, s)};
    const double iq = 1.0 / std::sqrt(2.0);
    std::vector<VecN> out = {vec2(-iq, -iq), vec2(iq, -iq), vec2(iq, iq), vec2(-iq, iq)};
    // Cap so extension rays (descending up to (1 + 2 c_upper) r_ext below a
    // chart) stay inside the square for the measured c_upper range.
    walk_polygon(vtx, out, cov.gamma, h, 0.35 * s, walk);
  } else if (d.kind == "lshape") {
    const double s = d.size, m = 0.5 * d.size;
    std::vector<VecN> vtx = {vec2(0, 0), vec2(s, 0), vec2(s, m), vec2(m, m), vec2(m, s), vec2(0, s)};
    const double iq = 1.0 / std::sqrt(2.0);
    std::vector<VecN> out = {vec2(-iq, -iq), vec2(iq, -iq), vec2(iq, iq),
                             vec2(iq, iq),   vec2(iq, iq),  vec2(-iq, iq)};
    // Tighter cap than the square: rays from a chart near the reentrant
    // corner must not cross the opposite notch face.
    walk_polygon(vtx, out, cov.gamma, h, 0.18 * s, walk);
  } else if (d.kind == "graph_halfball") {
    walk_halfball(d, cov.gamma, h, walk);
  } else {
    fail_input("cover construction: unknown domain kind '" + d.kind + "'");
  }

  if (single_ball) {
    auto cells = d.inside_cells();
    if (cells.empty()) fail_input("cover construction: empty mask");
    VecN centroid = VecN::Zero(d.dim);
    for (auto c : cells) centroid += d.cell_center(c);
    centroid /= static_cast<double>(cells.size());
    double rmax = 0.0;
    for (auto c : cells) rmax = std::max(rmax, (d.cell_center(c) - centroid).norm());
    double radius = 2.02 * (rmax + h) / cov.gamma;
    cov.balls.push_back({centroid, radius, false, std::nullopt});
    cov.frames.push_back(nullptr);
  } else {
    for (const WalkBall& wb : walk) {
      Ball b;
      b.center = wb.center;
      b.radius = wb.radius;
      b.boundary = true;
      b.chart = ChartFrame{frame_rot(wb.outward), chart_window(wb.radius, wb.l_est, cov.gamma),
                           wb.l_est};
      if (ball_cells(d, b.center, b.radius).size() < 4)
        fail_input("resolution too coarse for a valid cover: a boundary ball of radius " +
                   std::to_string(b.radius) + " holds fewer than 4 cells");
      cov.balls.push_back(std::move(b));
    }
    cov.boundary_count = cov.balls.size();
    for (std::size_t l = 0; l < cov.balls.size(); ++l)
      cov.frames.push_back(std::make_shared<FrameDomain>(build_frame_domain(d, cov.balls[l])));
  }

  std::vector<std::uint8_t> covered(d.ncells(), 0);
  auto mark = [&](std::size_t l) {
    for (auto c : ball_cells(d, cov.balls[l].center, cov.shrunken_radius(l))) covered[c] = 1;
  };
  for (std::size_t l = 0; l < cov.balls.size(); ++l) mark(l);

  if (!single_ball) {
    for (std::uint32_t c : d.inside_cells()) {
      if (covered[c]) continue;
      VecN x = d.cell_center(c);
      double depth = analytic_boundary_distance(d, x);
      double r = 0.999 * depth;
      auto cells = ball_cells(d, x, r);
      if (cells.size() < 4)
        fail_input("resolution too coarse for a valid cover: an interior ball of radius " +
                   std::to_string(r) + " at (" + std::to_string(x[0]) + ", " +
                   std::to_string(x[1]) + ") holds fewer than 4 cells");
      // strict interior: every lattice cell the ball touches must be masked
      int lattice = 0;
      {
        int lo[2], hi[2];
        for (int a = 0; a < 2; ++a) {
          lo[a] = std::max(0, static_cast<int>(std::ceil((x[a] - r - d.origin[a]) / h - 0.5)));
          hi[a] = std::min(d.shape[a] - 1,
                           static_cast<int>(std::floor((x[a] + r - d.origin[a]) / h - 0.5)));
        }
        for (int i = lo[0]; i <= hi[0]; ++i)
          for (int j = lo[1]; j <= hi[1]; ++j) {
            VecN xc = d.cell_center(d.index(i, j));
            if ((xc - x).squaredNorm() < r * r) ++lattice;
          }
      }
      if (lattice != static_cast<int>(cells.size()))
        fail_contract("interior ball escapes the mask at cell " + std::to_string(c));
      cov.balls.push_back({x, r, false, std::nullopt});
      cov.frames.push_back(nullptr);
      mark(cov.balls.size() - 1);
    }
  }

  // Ownership in ball order: the first shrunken ball that holds a cell owns
  // it. Everything downstream patches decompositions in this order.
  cov.owner.assign(d.ncells(), -1);
  cov.owned.resize(cov.balls.size());
  std::vector<std::vector<std::int32_t>> at_cell(d.ncells());
  for (std::size_t l = 0; l < cov.balls.size(); ++l) {
    for (auto c : ball_cells(d, cov.balls[l].center, cov.shrunken_radius(l))) {
      if (cov.owner[c] < 0) cov.owner[c] = static_cast<std::int32_t>(l);
      at_cell[c].push_back(static_cast<std::int32_t>(l));
    }
  }
  for (std::uint32_t c = 0; c < d.ncells(); ++c) {
    if (!d.inside(c)) continue;
    if (cov.owner[c] < 0)
      fail_contract("cover gap: cell " + std::to_string(c) + " is not covered");
    cov.owned[cov.owner[c]].push_back(c);
  }

  // Overlap statistics and connectivity run on the full radii: ownership
  // partitions by the shrunken balls, but constants chain across full-ball
  // intersections, and the patching estimates divide by their measure.
  std::vector<std::vector<std::int32_t>> at_full(d.ncells());
  for (std::size_t l = 0; l < cov.balls.size(); ++l)
    for (auto c : ball_cells(d, cov.balls[l].center, cov.balls[l].radius))
      at_full[c].push_back(static_cast<std::int32_t>(l));

  std::unordered_map<std::uint64_t, std::uint32_t> pair_count;
  for (std::uint32_t c = 0; c < d.ncells(); ++c) {
    const auto& lst = at_full[c];
    for (std::size_t i = 0; i < lst.size(); ++i)
      for (std::size_t j = i; j < lst.size(); ++j) {
        std::uint64_t key = (static_cast<std::uint64_t>(lst[i]) << 32) |
                            static_cast<std::uint32_t>(lst[j]);
        ++pair_count[key];
      }
  }
  std::uint32_t min_cells = 0;
  bool first = true;
  for (const auto& kv : pair_count) {
    if (first || kv.second < min_cells) min_cells = kv.second;
    first = false;
  }
  if (first) fail_contract("cover has no occupied balls");
  cov.alpha = min_cells * d.cell_measure();

  // The overlap graph of occupied balls must be connected so constants can
  // chain from ball 0 to everywhere.
  std::vector<std::int32_t> parent(cov.balls.size());
  for (std::size_t l = 0; l < parent.size(); ++l) parent[l] = static_cast<std::int32_t>(l);
  std::function<std::int32_t(std::int32_t)> find = [&](std::int32_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  for (std::uint32_t c = 0; c < d.ncells(); ++c) {
    const auto& lst = at_full[c];
    for (std::size_t i = 1; i < lst.size(); ++i) parent[find(lst[i])] = find(lst[0]);
  }
  std::int32_t root = -1;
  for (std::size_t l = 0; l < cov.balls.size(); ++l) {
    bool occupied = false;
    for (auto c : ball_cells(d, cov.balls[l].center, cov.balls[l].radius)) {
      (void)c;
      occupied = true;
      break;
    }
    if (!occupied) continue;
    std::int32_t r = find(static_cast<std::int32_t>(l));
    if (root < 0) root = r;
    if (r != root) fail_contract("cover overlap graph is disconnected");
  }

  return cov;
}

}  // namespace rigidlab
