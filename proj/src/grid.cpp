#include "rigidlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace rigidlab {

double BoundaryGraph::eval(double x1, double x2) const {
  auto interp1 = [](const std::vector<double>& xs, double x, std::size_t& lo, double& t) {
    if (xs.size() < 2) {
      lo = 0;
      t = 0.0;
      return;
    }
    double xc = std::clamp(x, xs.front(), xs.back());
    auto it = std::upper_bound(xs.begin(), xs.end(), xc);
    std::size_t hi = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - xs.begin(), 1), xs.size() - 1);
    lo = hi - 1;
    double w = xs[hi] - xs[lo];
    t = w > 0 ? (xc - xs[lo]) / w : 0.0;
  };
  std::size_t i;
  double t;
  interp1(axis1, x1, i, t);
  if (axis2.empty()) {
    if (axis1.size() < 2) return values.empty() ? 0.0 : values[0];
    return (1 - t) * values[i] + t * values[i + 1];
  }
  std::size_t j;
  double s;
  interp1(axis2, x2, j, s);
  std::size_t n2 = axis2.size();
  auto v = [&](std::size_t a, std::size_t b) { return values[a * n2 + b]; };
  return (1 - t) * ((1 - s) * v(i, j) + s * v(i, j + 1)) +
         t * ((1 - s) * v(i + 1, j) + s * v(i + 1, j + 1));
}

void BoundaryGraph::validate() const {
  std::size_t n2 = axis2.empty() ? 1 : axis2.size();
  if (values.size() != axis1.size() * n2) fail_input("boundary graph: sample count mismatch");
  const double tol = 1e-9;
  for (std::size_t i = 0; i + 1 < axis1.size(); ++i) {
    if (axis1[i + 1] <= axis1[i]) fail_input("boundary graph: axis1 not increasing");
    for (std::size_t j = 0; j < n2; ++j) {
      double slope = std::abs(values[(i + 1) * n2 + j] - values[i * n2 + j]) /
                     (axis1[i + 1] - axis1[i]);
      if (slope > lipschitz + tol) fail_input("boundary graph: samples exceed Lipschitz bound");
    }
  }
  for (std::size_t j = 0; j + 1 < axis2.size(); ++j) {
    if (axis2[j + 1] <= axis2[j]) fail_input("boundary graph: axis2 not increasing");
    for (std::size_t i = 0; i < axis1.size(); ++i) {
      double slope = std::abs(values[i * n2 + j + 1] - values[i * n2 + j]) /
                     (axis2[j + 1] - axis2[j]);
      if (slope > lipschitz + tol) fail_input("boundary graph: samples exceed Lipschitz bound");
    }
  }
}

std::int64_t GridDomain::locate(const VecN& x) const {
  int ijk[3] = {0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    double t = (x[a] - origin[a]) / spacing;
    int i = static_cast<int>(std::floor(t));
    if (i < 0 || i >= shape[a]) return -1;
    ijk[a] = i;
  }
  return index(ijk[0], ijk[1], ijk[2]);
}

std::size_t GridDomain::inside_count() const {
  std::size_t n = 0;
  for (auto m : mask) n += (m != 0);
  return n;
}

std::vector<std::uint32_t> GridDomain::inside_cells() const {
  std::vector<std::uint32_t> out;
  out.reserve(inside_count());
  for (std::uint32_t c = 0; c < mask.size(); ++c)
    if (mask[c]) out.push_back(c);
  return out;
}

double GridDomain::cell_measure() const { return std::pow(spacing, dim); }

double GridDomain::bounding_diameter() const {
  double s2 = 0;
  for (int a = 0; a < dim; ++a) {
    double e = shape[a] * spacing;
    s2 += e * e;
  }
  return std::sqrt(s2);
}

double GridDomain::min_extent() const {
  double m = shape[0] * spacing;
  for (int a = 1; a < dim; ++a) m = std::min(m, shape[a] * spacing);
  return m;
}

void GridDomain::validate() const {
  if (dim != 2 && dim != 3) fail_input("domain: dim must be 2 or 3");
  if (spacing <= 0 || !std::isfinite(spacing)) fail_input("domain: bad spacing");
  if (mask.size() != ncells()) fail_input("domain: mask size mismatch");
  std::size_t in = inside_count();
  if (in == 0) fail_input("domain: empty mask");

  // Connectivity over face neighbors (BFS).
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::deque<std::uint32_t> queue;
  std::uint32_t start = 0;
  while (!mask[start]) ++start;
  queue.push_back(start);
  seen[start] = 1;
  std::size_t reached = 0;
  while (!queue.empty()) {
    std::uint32_t c = queue.front();
    queue.pop_front();
    ++reached;
    auto ijk = unpack(c);
    for (int a = 0; a < dim; ++a) {
      for (int d : {-1, 1}) {
        int p[3] = {ijk[0], ijk[1], ijk[2]};
        p[a] += d;
        if (!in_bounds(p[0], p[1], p[2])) continue;
        std::uint32_t nb = index(p[0], p[1], p[2]);
        if (mask[nb] && !seen[nb]) {
          seen[nb] = 1;
          queue.push_back(nb);
        }
      }
    }
  }
  if (reached != in) fail_input("domain: mask is not connected");
  if (boundary_graph) boundary_graph->validate();
}

void trim_stencil_orphans(GridDomain& dom) {
  for (bool changed = true; changed;) {
    changed = false;
    for (std::uint32_t c = 0; c < dom.ncells(); ++c) {
      if (!dom.mask[c]) continue;
      auto ijk = dom.unpack(c);
      for (int a = 0; a < dom.dim; ++a) {
        bool ok = false;
        for (int dir = -1; dir <= 1 && !ok; dir += 2) {
          int p[3] = {ijk[0], ijk[1], ijk[2]};
          p[a] += dir;
          if (dom.in_bounds(p[0], p[1], p[2]) && dom.mask[dom.index(p[0], p[1], p[2])]) ok = true;
        }
        if (!ok) {
          dom.mask[c] = 0;
          changed = true;
          break;
        }
      }
    }
  }
}

std::shared_ptr<GridDomain> make_domain(const std::string& kind, double size, int resolution,
                                        double lipschitz_L, int dim) {
  if (resolution < 8) fail_input("make_domain: resolution must be at least 8");
  if (size <= 0) fail_input("make_domain: size must be positive");
  if (lipschitz_L < 0) fail_input("make_domain: Lipschitz constant must be nonnegative");
  if (dim != 2 && dim != 3) fail_input("make_domain: dim must be 2 or 3");

  auto dom = std::make_shared<GridDomain>();
  dom->dim = dim;
  dom->kind = kind;
  dom->size = size;
  dom->lipschitz_L = lipschitz_L;
  dom->shape = {resolution, resolution, dim == 3 ? resolution : 1};

  if (kind == "square" || kind == "lshape") {
    dom->spacing = size / resolution;
    dom->origin = {0.0, 0.0, 0.0};
    dom->mask.assign(dom->ncells(), 1);
    if (kind == "lshape") {
      // Remove the upper-right quadrant in the (x1,x2) plane; in 3D this cuts
      // a prism and leaves a reentrant edge.
      for (std::uint32_t c = 0; c < dom->mask.size(); ++c) {
        VecN x = dom->cell_center(c);
        if (x[0] > size / 2 && x[1] > size / 2) dom->mask[c] = 0;
      }
    }
  } else if (kind == "graph_halfball") {
    double R = size;
    dom->spacing = 2 * R / resolution;
    dom->origin = {-R, -R, -R};
    dom->mask.assign(dom->ncells(), 0);
    auto phi = [&](const VecN& xp) {
      double r = 0;
      for (int a = 0; a < dim - 1; ++a) r += xp[a] * xp[a];
      return lipschitz_L * std::sqrt(r);
    };
    for (std::uint32_t c = 0; c < dom->mask.size(); ++c) {
      VecN x = dom->cell_center(c);
      VecN xp = x.head(dim - 1);
      if (x.norm() < R && x[dim - 1] < phi(xp)) dom->mask[c] = 1;
    }
    BoundaryGraph g;
    g.lipschitz = lipschitz_L;
    // Samples at half-cell pitch, with 0 in the set so the wedge kink is
    // represented exactly by the piecewise-linear interpolant.
    int half = resolution;  // => 2*resolution+1 samples over [-R, R]
    for (int i = -half; i <= half; ++i) g.axis1.push_back(R * i / half);
    if (dim == 2) {
      for (double x1 : g.axis1) g.values.push_back(lipschitz_L * std::abs(x1));
    } else {
      g.axis2 = g.axis1;
      for (double x1 : g.axis1)
        for (double x2 : g.axis2)
          g.values.push_back(lipschitz_L * std::hypot(x1, x2));
      // Bilinear interpolation overshoots the cone between diagonal samples;
      // widen the declared constant accordingly rather than pretending.
      g.lipschitz = lipschitz_L * std::sqrt(2.0);
    }
    dom->boundary_graph = std::move(g);
  } else {
    fail_input("make_domain: unknown kind '" + kind + "'");
  }

  trim_stencil_orphans(*dom);
  dom->validate();
  return dom;
}

}  // namespace rigidlab
