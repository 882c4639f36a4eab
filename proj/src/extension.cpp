#include "rigidlab/extension.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace rigidlab {

std::vector<std::pair<double, double>> gauss_legendre(int n) {
  if (n < 1) fail_input("gauss_legendre: n must be >= 1");
  std::vector<std::pair<double, double>> out(n);
  int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 1;
    for (int it = 0; it < 64; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) <= 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    out[i] = {-x, w};  // seeds descend from +1, store ascending
    out[n - 1 - i] = {x, w};
  }
  return out;
}

double MomentWeight::eval(double lambda) const {
  if (lambda < 1.0 || lambda > 2.0) return 0.0;
  if (!blended) return a + b * lambda;
  double s = std::sin(M_PI * (lambda - 1.0));
  return (c1 + c2 * lambda) * s * s;
}

MomentWeight moment_weight(bool blended) {
  MomentWeight w;
  w.blended = blended;
  auto gl = gauss_legendre(16);
  auto integrate = [&](auto&& fn) {
    double acc = 0;
    for (auto [xi, wt] : gl) acc += 0.5 * wt * fn(1.5 + 0.5 * xi);
    return acc;
  };
  if (blended) {
    auto bump = [](double lam) {
      double s = std::sin(M_PI * (lam - 1.0));
      return s * s;
    };
    double a00 = integrate([&](double l) { return bump(l); });
    double a01 = integrate([&](double l) { return l * bump(l); });
    double a11 = integrate([&](double l) { return l * l * bump(l); });
    double det = a00 * a11 - a01 * a01;
    w.c1 = a11 / det;  // [a00 a01; a01 a11] (c1, c2) = (1, 0)
    w.c2 = -a01 / det;
  }
  w.m0 = integrate([&](double l) { return w.eval(l); });
  w.m1 = integrate([&](double l) { return l * w.eval(l); });
  w.m2 = integrate([&](double l) { return l * l * w.eval(l); });
  return w;
}

namespace {

// Inclusive index window of cells whose centers cover [-extent, extent] per
// axis; input error when the parent lattice does not reach that far.
struct CropWindow {
  int lo[3] = {0, 0, 0};
  int hi[3] = {0, 0, 0};
};

CropWindow crop_window(const GridDomain& dom, double extent, const char* what) {
  CropWindow cw;
  for (int a = 0; a < dom.dim; ++a) {
    double h = dom.spacing;
    cw.lo[a] = static_cast<int>(std::ceil((-extent - dom.origin[a]) / h - 0.5 - 1e-9));
    cw.hi[a] = static_cast<int>(std::floor((extent - dom.origin[a]) / h - 0.5 + 1e-9));
    if (cw.lo[a] < 0 || cw.hi[a] >= dom.shape[a] || cw.lo[a] > cw.hi[a])
      fail_input(std::string(what) + ": required extent " + std::to_string(extent) +
                 " is not covered by the sampled lattice along axis " + std::to_string(a));
  }
  return cw;
}

std::shared_ptr<GridDomain> make_cropped(const GridDomain& parent, const CropWindow& cw,
                                         const std::string& kind) {
  auto d = std::make_shared<GridDomain>();
  d->dim = parent.dim;
  d->spacing = parent.spacing;
  d->kind = kind;
  d->lipschitz_L = parent.lipschitz_L;
  for (int a = 0; a < parent.dim; ++a) {
    d->shape[a] = cw.hi[a] - cw.lo[a] + 1;
    d->origin[a] = parent.origin[a] + cw.lo[a] * parent.spacing;
  }
  if (parent.dim == 2) d->shape[2] = 1;
  d->mask.assign(d->ncells(), 1);
  return d;
}

// Vertical signed distance to the sampled graph: x_n - phi(x'), positive
// above, negative below. Vertical matches the reflection direction, so
// delta >= 2 dist drops x - lambda delta e_n below the graph for every
// lambda in [1, 2] with a margin of one gap. Comparable to the euclidean
// distance within sqrt(1 + L^2).
double signed_graph_distance(const BoundaryGraph& bg, int dim, const VecN& x) {
  double phi = dim == 2 ? bg.eval(x[0]) : bg.eval(x[0], x[1]);
  return x[dim - 1] - phi;
}

}  // namespace

RegularizedDistance regularized_distance(const GridDomain& dom, double R) {
  if (!dom.boundary_graph) fail_input("regularized_distance: domain has no boundary graph");
  if (!(R > 0)) fail_input("regularized_distance: R must be positive");
  const BoundaryGraph& bg = *dom.boundary_graph;
  const double L = bg.lipschitz;
  const double r = R / (2.0 * std::sqrt(1.0 + L * L));
  const double h = dom.spacing;
  const double rho_max = std::max(h, 0.25 * r);
  const double extent = r + 2 * h + rho_max;

  if (-extent < bg.axis1.front() || extent > bg.axis1.back() ||
      (dom.dim == 3 && (-extent < bg.axis2.front() || extent > bg.axis2.back())))
    fail_input("regularized_distance: graph samples do not cover the extension box");

  CropWindow cw = crop_window(dom, extent, "regularized_distance");
  auto box = make_cropped(dom, cw, "box");
  box->validate();

  RegularizedDistance rd;
  rd.box = box;
  rd.dist_exact = ScalarField(box);
  for (std::uint32_t c = 0; c < box->ncells(); ++c)
    rd.dist_exact[c] = signed_graph_distance(bg, box->dim, box->cell_center(c));

  // Mollify with a window proportional to the local distance (capped at
  // rho_max so stencils stay in the box). Cells with |d| <= 4h get the
  // one-cell window, hence m = d exactly there.
  rd.delta = ScalarField(box);
  const double inner = r + 2 * h;
  double min_ratio = 1.0;
  std::vector<double> m_field(box->ncells(), 0.0);
  for (std::uint32_t c = 0; c < box->ncells(); ++c) {
    VecN x = box->cell_center(c);
    double far = 0;
    for (int a = 0; a < box->dim; ++a) far = std::max(far, std::abs(x[a]));
    double d = rd.dist_exact[c];
    if (far > inner + 1e-12) {
      m_field[c] = d;  // rim cells never enter stencils of formula cells
      continue;
    }
    double rho = std::max(h, std::min(0.25 * std::abs(d), rho_max));
    if (rho <= h) {
      m_field[c] = d;
      continue;
    }
    int reach = static_cast<int>(std::ceil(rho / h));
    auto ijk = box->unpack(c);
    double acc = 0;
    int cnt = 0;
    for (int di = -reach; di <= reach; ++di)
      for (int dj = -reach; dj <= reach; ++dj) {
        int kmax = box->dim == 3 ? reach : 0;
        for (int dk = -kmax; dk <= kmax; ++dk) {
          double rr = h * std::sqrt(double(di) * di + double(dj) * dj + double(dk) * dk);
          if (rr >= rho) continue;
          int pi = ijk[0] + di, pj = ijk[1] + dj, pk = ijk[2] + dk;
          if (!box->in_bounds(pi, pj, pk))
            fail_contract("regularized_distance: mollifier window left the box");
          acc += rd.dist_exact[box->index(pi, pj, pk)];
          ++cnt;
        }
      }
    m_field[c] = acc / cnt;
    if (d > 4 * h) min_ratio = std::min(min_ratio, m_field[c] / d);
  }
  rd.beta = 2.0 / min_ratio;
  for (std::uint32_t c = 0; c < box->ncells(); ++c) rd.delta[c] = rd.beta * m_field[c];

  // Central derivative fields wherever the one-cell stencil stays in the box.
  rd.grad = VectorField(box);
  rd.hess = MatrixField(box);
  for (std::uint32_t c = 0; c < box->ncells(); ++c) {
    auto ijk = box->unpack(c);
    bool interior = true;
    for (int a = 0; a < box->dim; ++a)
      if (ijk[a] < 1 || ijk[a] > box->shape[a] - 2) interior = false;
    if (!interior) continue;
    auto at = [&](int di, int dj, int dk) {
      return rd.delta[box->index(ijk[0] + di, ijk[1] + dj, ijk[2] + dk)];
    };
    int off[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (int a = 0; a < box->dim; ++a) {
      rd.grad.comp(c, a) = (at(off[a][0], off[a][1], off[a][2]) -
                            at(-off[a][0], -off[a][1], -off[a][2])) /
                           (2 * h);
      rd.hess.comp(c, a, a) =
          (at(off[a][0], off[a][1], off[a][2]) - 2 * rd.delta[c] +
           at(-off[a][0], -off[a][1], -off[a][2])) /
          (h * h);
      for (int b = a + 1; b < box->dim; ++b) {
        int pp[3] = {off[a][0] + off[b][0], off[a][1] + off[b][1], off[a][2] + off[b][2]};
        double mixed = (at(pp[0], pp[1], pp[2]) - at(pp[0] - 2 * off[b][0], pp[1] - 2 * off[b][1],
                                                     pp[2] - 2 * off[b][2]) -
                        at(pp[0] - 2 * off[a][0], pp[1] - 2 * off[a][1], pp[2] - 2 * off[a][2]) +
                        at(-pp[0], -pp[1], -pp[2])) /
                       (4 * h * h);
        rd.hess.comp(c, a, b) = mixed;
        rd.hess.comp(c, b, a) = mixed;
      }
    }
  }

  // Record the two-sided bound and the derivative growth on exterior cells.
  for (std::uint32_t c = 0; c < box->ncells(); ++c) {
    double d = rd.dist_exact[c];
    VecN x = box->cell_center(c);
    if (d <= 0 || x.norm() >= r) continue;
    double ratio = rd.delta[c] / d;
    if (ratio < 2.0 - 1e-9)
      fail_contract("regularized_distance: delta fell below 2 dist at a cell");
    rd.c_upper = std::max(rd.c_upper, ratio);
    rd.c_grad = std::max(rd.c_grad, rd.grad.get(c).norm());
    rd.c_hess = std::max(rd.c_hess, rd.hess.get(c).norm() * rd.delta[c]);
  }
  return rd;
}

ExtensionResult extend(const VectorField& u, const MatrixField& f, const MatrixField& g,
                       double p, double q, double R, const MomentWeight& psi,
                       double precheck_tol) {
  const auto& dom = u.domain();
  if (f.domain_ptr() != u.domain_ptr() || g.domain_ptr() != u.domain_ptr())
    fail_input("extend: u, f, g must share one domain");
  if (!dom.boundary_graph) fail_input("extend: domain has no boundary graph");
  if (!(R > 0)) fail_input("extend: R must be positive");
  const int n = dom.dim;
  const double L = dom.boundary_graph->lipschitz;
  const double r = R / (2.0 * std::sqrt(1.0 + L * L));
  const double h = dom.spacing;
  if (r < 3 * h) fail_input("extend: output radius spans fewer than three cells; refine the grid");

  // Data region and precondition Eu = f + g there.
  std::vector<std::uint32_t> data_cells;
  for (std::uint32_t c = 0; c < dom.ncells(); ++c)
    if (dom.inside(c) && dom.cell_center(c).norm() <= R) data_cells.push_back(c);
  if (data_cells.empty()) fail_input("extend: no data cells within B(0,R)");
  {
    MatrixField eu = sym_grad(u);
    double worst = 0;
    for (auto c : data_cells) worst = std::max(worst, (eu.get(c) - f.get(c) - g.get(c)).norm());
    if (worst > precheck_tol)
      fail_input("extend: Eu deviates from f + g by " + std::to_string(worst) +
                 " on the data region (tolerance " + std::to_string(precheck_tol) + ")");
  }

  ExtensionResult res;
  res.r = r;
  res.dist = regularized_distance(dom, R);
  const auto& box = *res.dist.box;
  if (std::getenv("RIGIDLAB_TRACE_EXTEND"))
    std::fprintf(stderr, "[extend] L=%g R=%g r=%g beta=%g c_upper=%g\n", L, R, r, res.dist.beta,
                 res.dist.c_upper);

  CropWindow cw = crop_window(dom, r + h, "extend");
  auto ball = make_cropped(dom, cw, "ball");
  ball->size = r;

  // Integer offsets into the parent and distance-box lattices.
  int off_p[3] = {0, 0, 0}, off_b[3] = {0, 0, 0};
  for (int a = 0; a < n; ++a) {
    off_p[a] = static_cast<int>(std::lround((ball->origin[a] - dom.origin[a]) / h));
    off_b[a] = static_cast<int>(std::lround((ball->origin[a] - box.origin[a]) / h));
  }

  for (std::uint32_t c = 0; c < ball->ncells(); ++c) {
    ball->mask[c] = ball->cell_center(c).norm() < r ? 1 : 0;
    if (!ball->mask[c]) continue;
    // Below-graph cells the parent never sampled (one-cell whiskers under a
    // graph kink) carry no data; the identity branch cannot serve them.
    auto ijk = ball->unpack(c);
    std::uint32_t pc = dom.index(ijk[0] + off_p[0], ijk[1] + off_p[1], ijk[2] + off_p[2]);
    std::uint32_t xc = box.index(ijk[0] + off_b[0], ijk[1] + off_b[1], ijk[2] + off_b[2]);
    if (res.dist.dist_exact[xc] <= 0 && !dom.inside(pc)) ball->mask[c] = 0;
  }
  // Clip single-cell slivers at the discrete ball's poles so difference
  // stencils stay defined on every retained cell.
  trim_stencil_orphans(*ball);
  ball->validate();
  res.ball = ball;

  res.w = VectorField(ball);
  res.f_ext = MatrixField(ball);
  res.g_ext = MatrixField(ball);
  auto gl16 = gauss_legendre(16);
  auto gl8 = gauss_legendre(8);

  for (std::uint32_t bc = 0; bc < ball->ncells(); ++bc) {
    if (!ball->inside(bc)) continue;
    auto ijk = ball->unpack(bc);
    std::uint32_t pc = dom.index(ijk[0] + off_p[0], ijk[1] + off_p[1], ijk[2] + off_p[2]);
    std::uint32_t xc = box.index(ijk[0] + off_b[0], ijk[1] + off_b[1], ijk[2] + off_b[2]);

    if (res.dist.dist_exact[xc] <= 0) {
      if (!dom.inside(pc)) {
        VecN bad = ball->cell_center(bc);
        fail_input("extend geometry: cell below the graph lies outside the sampled region at (" +
                   std::to_string(bad[0]) + ", " + std::to_string(bad[1]) +
                   "), dist = " + std::to_string(res.dist.dist_exact[xc]));
      }
      res.w.set(bc, u.get(pc));
      res.f_ext.set(bc, f.get(pc));
      res.g_ext.set(bc, g.get(pc));
      continue;
    }

    const double del = res.dist.delta[xc];
    const VecN gd = res.dist.grad.get(xc);
    const MatN hd = res.dist.hess.get(xc);
    const VecN x = dom.cell_center(pc);

    VecN wacc = VecN::Zero(n);
    MatN facc = MatN::Zero(n, n), gacc = MatN::Zero(n, n);
    double finner = 0, ginner = 0;
    for (auto [xi, wt] : gl16) {
      double lam = 1.5 + 0.5 * xi;
      double wl = 0.5 * wt * psi.eval(lam);
      VecN y = x;
      y[n - 1] -= lam * del;
      VecN uv = sample_vector(u, y);
      MatN fm = sample_matrix(f, y);
      MatN gm = sample_matrix(g, y);

      wacc += wl * (uv - lam * uv[n - 1] * gd);
      VecN fv = fm.col(n - 1);
      VecN gv = gm.col(n - 1);
      facc += wl * (fm - lam * (fv * gd.transpose() + gd * fv.transpose()) +
                    lam * lam * fm(n - 1, n - 1) * (gd * gd.transpose()));
      gacc += wl * (gm - lam * (gv * gd.transpose() + gd * gv.transpose()) +
                    lam * lam * gm(n - 1, n - 1) * (gd * gd.transpose()));

      // Inner integral over s in [1, lambda] of the nn component.
      double fs = 0, gs = 0;
      double half = 0.5 * (lam - 1.0);
      if (half > 0) {
        for (auto [sxi, swt] : gl8) {
          double s = 1.0 + half * (sxi + 1.0);
          VecN ys = x;
          ys[n - 1] -= s * del;
          fs += half * swt * sample_matrix_comp(f, n - 1, n - 1, ys);
          gs += half * swt * sample_matrix_comp(g, n - 1, n - 1, ys);
        }
      }
      finner += wl * lam * fs;
      ginner += wl * lam * gs;
    }
    res.w.set(bc, wacc);
    res.f_ext.set(bc, MatN(facc + finner * del * hd));
    res.g_ext.set(bc, MatN(gacc + ginner * del * hd));
  }

  // Residual of the defining identity on formula cells, and norm ratios.
  MatrixField ew = sym_grad(res.w);
  for (std::uint32_t bc = 0; bc < ball->ncells(); ++bc) {
    if (!ball->inside(bc)) continue;
    auto ijk = ball->unpack(bc);
    std::uint32_t xc = box.index(ijk[0] + off_b[0], ijk[1] + off_b[1], ijk[2] + off_b[2]);
    if (res.dist.dist_exact[xc] <= 0) continue;
    double dev = (ew.get(bc) - res.f_ext.get(bc) - res.g_ext.get(bc)).norm();
    res.residual_sup = std::max(res.residual_sup, dev);
  }
  double num_p = lp_norm(res.f_ext, p);
  double num_q = lp_norm(res.g_ext, q);
  double den_p = lp_norm_region(f, p, data_cells);
  double den_q = lp_norm_region(g, q, data_cells);
  res.ratio_p = num_p == 0 ? 0 : (den_p > 0 ? num_p / den_p : kInf);
  res.ratio_q = num_q == 0 ? 0 : (den_q > 0 ? num_q / den_q : kInf);
  return res;
}

}  // namespace rigidlab
