#include "rigidlab/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rigidlab {

namespace {

// Derivative of a per-cell accessor along axis `a` at inside cell c.
template <typename Get>
double diff_axis(const GridDomain& dom, std::uint32_t c, int a, Get&& get) {
  auto ijk = dom.unpack(c);
  int pm[3] = {ijk[0], ijk[1], ijk[2]};
  pm[a] += 1;
  bool has_plus = dom.in_bounds(pm[0], pm[1], pm[2]) && dom.inside(dom.index(pm[0], pm[1], pm[2]));
  std::uint32_t cp = has_plus ? dom.index(pm[0], pm[1], pm[2]) : 0;
  pm[a] -= 2;
  bool has_minus = dom.in_bounds(pm[0], pm[1], pm[2]) && dom.inside(dom.index(pm[0], pm[1], pm[2]));
  std::uint32_t cm = has_minus ? dom.index(pm[0], pm[1], pm[2]) : 0;

  double h = dom.spacing;
  if (has_plus && has_minus) return (get(cp) - get(cm)) / (2 * h);
  if (has_plus) return (get(cp) - get(c)) / h;
  if (has_minus) return (get(c) - get(cm)) / h;
  fail_input("stencil error: cell " + std::to_string(c) + " has no inside neighbor along axis " +
             std::to_string(a));
}

}  // namespace

MatrixField gradient(const VectorField& u) {
  const auto& dom = u.domain();
  MatrixField out(u.domain_ptr());
  for (std::uint32_t c = 0; c < dom.ncells(); ++c) {
    if (!dom.inside(c)) continue;
    for (int i = 0; i < dom.dim; ++i)
      for (int j = 0; j < dom.dim; ++j)
        out.comp(c, i, j) = diff_axis(dom, c, j, [&](std::uint32_t cc) { return u.comp(cc, i); });
  }
  return out;
}

VectorField gradient(const ScalarField& s) {
  const auto& dom = s.domain();
  VectorField out(s.domain_ptr());
  for (std::uint32_t c = 0; c < dom.ncells(); ++c) {
    if (!dom.inside(c)) continue;
    for (int a = 0; a < dom.dim; ++a)
      out.comp(c, a) = diff_axis(dom, c, a, [&](std::uint32_t cc) { return s[cc]; });
  }
  return out;
}

MatrixField sym_grad(const VectorField& u) {
  MatrixField g = gradient(u);
  const auto& dom = u.domain();
  for (std::uint32_t c = 0; c < dom.ncells(); ++c) {
    if (!dom.inside(c)) continue;
    for (int i = 0; i < dom.dim; ++i)
      for (int j = i + 1; j < dom.dim; ++j) {
        double s = 0.5 * (g.comp(c, i, j) + g.comp(c, j, i));
        g.comp(c, i, j) = s;
        g.comp(c, j, i) = s;
      }
  }
  return g;
}

ScalarField frobenius_field(const MatrixField& a) {
  const auto& dom = a.domain();
  ScalarField out(a.domain_ptr());
  int nn = dom.dim * dom.dim;
  for (std::uint32_t c = 0; c < dom.ncells(); ++c) {
    if (!dom.inside(c)) continue;
    const double* p = a.raw().data() + static_cast<std::size_t>(c) * nn;
    double s = 0;
    for (int e = 0; e < nn; ++e) s += p[e] * p[e];
    out[c] = std::sqrt(s);
  }
  return out;
}

namespace {

template <typename Abs>
double lp_generic(const GridDomain& dom, double p, const std::vector<std::uint32_t>& cells,
                  Abs&& cell_abs) {
  if (!(p >= 1.0)) fail_input("lp_norm: p must be >= 1");
  if (p == kInf) {
    double m = 0;
    for (auto c : cells) m = std::max(m, cell_abs(c));
    return m;
  }
  double meas = dom.cell_measure();
  double acc = 0;
  for (auto c : cells) acc += std::pow(cell_abs(c), p) * meas;
  return std::pow(acc, 1.0 / p);
}

}  // namespace

double lp_norm(const ScalarField& s, double p) {
  return lp_generic(s.domain(), p, s.domain().inside_cells(),
                    [&](std::uint32_t c) { return std::abs(s[c]); });
}

double lp_norm(const VectorField& u, double p) {
  const int n = u.domain().dim;
  return lp_generic(u.domain(), p, u.domain().inside_cells(), [&](std::uint32_t c) {
    double s2 = 0;
    for (int a = 0; a < n; ++a) s2 += u.comp(c, a) * u.comp(c, a);
    return std::sqrt(s2);
  });
}

double lp_norm(const MatrixField& a, double p) {
  const int nn = a.domain().dim * a.domain().dim;
  return lp_generic(a.domain(), p, a.domain().inside_cells(), [&](std::uint32_t c) {
    const double* q = a.raw().data() + static_cast<std::size_t>(c) * nn;
    double s2 = 0;
    for (int e = 0; e < nn; ++e) s2 += q[e] * q[e];
    return std::sqrt(s2);
  });
}

double lp_norm_region(const ScalarField& s, double p, const std::vector<std::uint32_t>& cells) {
  return lp_generic(s.domain(), p, cells, [&](std::uint32_t c) { return std::abs(s[c]); });
}

double lp_norm_region(const MatrixField& a, double p, const std::vector<std::uint32_t>& cells) {
  const int nn = a.domain().dim * a.domain().dim;
  return lp_generic(a.domain(), p, cells, [&](std::uint32_t c) {
    const double* q = a.raw().data() + static_cast<std::size_t>(c) * nn;
    double s2 = 0;
    for (int e = 0; e < nn; ++e) s2 += q[e] * q[e];
    return std::sqrt(s2);
  });
}

InterpSample interp_sample(const GridDomain& dom, const VecN& x) {
  const int n = dom.dim;
  int base[3] = {0, 0, 0};
  double frac[3] = {0, 0, 0};
  for (int a = 0; a < n; ++a) {
    double s = (x[a] - dom.origin[a]) / dom.spacing - 0.5;
    base[a] = static_cast<int>(std::floor(s));
    frac[a] = s - base[a];
  }
  InterpSample out;
  double total = 0;
  int corners = 1 << n;
  for (int k = 0; k < corners; ++k) {
    int idx[3] = {base[0], base[1], base[2]};
    double w = 1;
    for (int a = 0; a < n; ++a) {
      if (k & (1 << a)) {
        idx[a] += 1;
        w *= frac[a];
      } else {
        w *= 1 - frac[a];
      }
    }
    if (w <= 0) continue;
    if (!dom.in_bounds(idx[0], idx[1], idx[2])) continue;
    std::uint32_t c = dom.index(idx[0], idx[1], idx[2]);
    if (!dom.inside(c)) continue;
    out.cells[out.count] = c;
    out.weights[out.count] = w;
    ++out.count;
    total += w;
  }
  if (out.count == 0 || total <= 1e-12) {
    // The interpolation footprint can die next to a boundary kink, where the
    // interior thins to single-cell slivers the mask cannot carry. Fall back
    // to the nearest inside cell within two cells of the footprint.
    double best = kInf;
    std::int64_t best_cell = -1;
    for (int di = -1; di <= 2; ++di)
      for (int dj = -1; dj <= 2; ++dj) {
        int kmax = n == 3 ? 2 : 0;
        for (int dk = n == 3 ? -1 : 0; dk <= kmax; ++dk) {
          int pi = base[0] + di, pj = base[1] + dj, pk = n == 3 ? base[2] + dk : base[2];
          if (!dom.in_bounds(pi, pj, pk)) continue;
          std::uint32_t c = dom.index(pi, pj, pk);
          if (!dom.inside(c)) continue;
          double d2 = (dom.cell_center(c) - x).squaredNorm();
          if (d2 < best) {
            best = d2;
            best_cell = c;
          }
        }
      }
    if (best_cell < 0)
      fail_input("sample geometry: point (" + std::to_string(x[0]) + ", " + std::to_string(x[1]) +
                 (n == 3 ? ", " + std::to_string(x[2]) : std::string()) +
                 ") has no inside interpolation corner");
    out.count = 1;
    out.cells[0] = static_cast<std::uint32_t>(best_cell);
    out.weights[0] = 1.0;
    return out;
  }
  for (int k = 0; k < out.count; ++k) out.weights[k] /= total;
  return out;
}

bool can_sample(const GridDomain& dom, const VecN& x) {
  const int n = dom.dim;
  int base[3] = {0, 0, 0};
  double frac[3] = {0, 0, 0};
  for (int a = 0; a < n; ++a) {
    double s = (x[a] - dom.origin[a]) / dom.spacing - 0.5;
    base[a] = static_cast<int>(std::floor(s));
    frac[a] = s - base[a];
  }
  double total = 0;
  int corners = 1 << n;
  for (int k = 0; k < corners; ++k) {
    int idx[3] = {base[0], base[1], base[2]};
    double w = 1;
    for (int a = 0; a < n; ++a) {
      if (k & (1 << a)) {
        idx[a] += 1;
        w *= frac[a];
      } else {
        w *= 1 - frac[a];
      }
    }
    if (w <= 0) continue;
    if (!dom.in_bounds(idx[0], idx[1], idx[2])) continue;
    if (!dom.inside(dom.index(idx[0], idx[1], idx[2]))) continue;
    total += w;
  }
  return total > 1e-12;
}

double sample_scalar(const ScalarField& s, const VecN& x) {
  InterpSample is = interp_sample(s.domain(), x);
  double acc = 0;
  for (int k = 0; k < is.count; ++k) acc += is.weights[k] * s[is.cells[k]];
  return acc;
}

VecN sample_vector(const VectorField& u, const VecN& x) {
  InterpSample is = interp_sample(u.domain(), x);
  VecN acc = VecN::Zero(u.domain().dim);
  for (int k = 0; k < is.count; ++k) acc += is.weights[k] * u.get(is.cells[k]);
  return acc;
}

MatN sample_matrix(const MatrixField& a, const VecN& x) {
  InterpSample is = interp_sample(a.domain(), x);
  int n = a.domain().dim;
  MatN acc = MatN::Zero(n, n);
  for (int k = 0; k < is.count; ++k) acc += is.weights[k] * a.get(is.cells[k]);
  return acc;
}

double sample_matrix_comp(const MatrixField& a, int i, int j, const VecN& x) {
  InterpSample is = interp_sample(a.domain(), x);
  double acc = 0;
  for (int k = 0; k < is.count; ++k) acc += is.weights[k] * a.comp(is.cells[k], i, j);
  return acc;
}

std::vector<MatrixField> split_by_majorants(const MatrixField& a,
                                            const std::vector<const ScalarField*>& majorants) {
  const auto& dom = a.domain();
  const double tol = 1e-10;
  std::vector<MatrixField> parts;
  parts.reserve(majorants.size());
  for (std::size_t k = 0; k < majorants.size(); ++k) parts.emplace_back(a.domain_ptr());

  for (std::uint32_t c = 0; c < dom.ncells(); ++c) {
    if (!dom.inside(c)) continue;
    MatN m = a.get(c);
    double amag = m.norm();
    double total = 0;
    for (auto* f : majorants) total += std::abs((*f)[c]);
    if (amag > total + tol)
      fail_contract("split_by_majorants: |A| exceeds majorant sum at cell " + std::to_string(c) +
                    " (|A| = " + std::to_string(amag) + ", sum = " + std::to_string(total) + ")");
    if (total <= 0) continue;  // |A| <= tol there; leave all parts zero
    // Proportional split: part_alpha = (|f_alpha| / sum) * A, so each part is
    // bounded by its own majorant whenever |A| <= sum.
    for (std::size_t k = 0; k < majorants.size(); ++k) {
      double w = std::abs((*majorants[k])[c]) / total;
      if (w > 0) parts[k].set(c, MatN(w * m));
    }
  }
  return parts;
}

std::pair<MatrixField, MatrixField> split_by_majorants(const MatrixField& a, const ScalarField& f,
                                                       const ScalarField& g) {
  auto parts = split_by_majorants(a, {&f, &g});
  return {std::move(parts[0]), std::move(parts[1])};
}

}  // namespace rigidlab
