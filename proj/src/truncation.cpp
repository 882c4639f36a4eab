#include "rigidlab/truncation.hpp"

#include <algorithm>
#include <cmath>

namespace rigidlab {

ScalarField maximal_function(const ScalarField& s) {
  const auto& dom = s.domain();
  const int n = dom.dim;
  const double h = dom.spacing;
  auto cells = dom.inside_cells();

  ScalarField out(s.domain_ptr());
  double diam = dom.bounding_diameter();

  // Offsets per dyadic radius, reused across cells.
  for (double r = h; r / 2 < diam; r *= 2) {
    int reach = static_cast<int>(std::ceil(r / h));
    std::vector<std::array<int, 3>> offs;
    for (int di = -reach; di <= reach; ++di)
      for (int dj = -reach; dj <= reach; ++dj) {
        if (n == 2) {
          if (h * std::hypot(di, dj) < r) offs.push_back({di, dj, 0});
        } else {
          for (int dk = -reach; dk <= reach; ++dk)
            if (h * std::sqrt(double(di) * di + double(dj) * dj + double(dk) * dk) < r)
              offs.push_back({di, dj, dk});
        }
      }
    for (auto c : cells) {
      auto ijk = dom.unpack(c);
      double acc = 0;
      int cnt = 0;
      for (const auto& o : offs) {
        int p[3] = {ijk[0] + o[0], ijk[1] + o[1], ijk[2] + o[2]};
        if (!dom.in_bounds(p[0], p[1], p[2])) continue;
        std::uint32_t cc = dom.index(p[0], p[1], p[2]);
        if (!dom.inside(cc)) continue;
        acc += std::abs(s[cc]);
        ++cnt;
      }
      if (cnt > 0) out[c] = std::max(out[c], acc / cnt);
    }
  }
  return out;
}

GoodSet good_set(const VectorField& u, double lambda, std::uint64_t sample_seed) {
  if (!(lambda > 0)) fail_input("good_set: lambda must be positive");
  const auto& dom = u.domain();
  ScalarField mag = frobenius_field(gradient(u));
  ScalarField m = maximal_function(mag);

  GoodSet gs;
  gs.e_mask.assign(dom.ncells(), 0);
  std::vector<std::uint32_t> e_cells;
  for (std::uint32_t c = 0; c < dom.ncells(); ++c) {
    if (!dom.inside(c)) continue;
    if (m[c] <= lambda) {
      gs.e_mask[c] = 1;
      e_cells.push_back(c);
    }
  }
  gs.e_count = e_cells.size();
  gs.excess_measure = (dom.inside_count() - gs.e_count) * dom.cell_measure();

  // Sampled Lipschitz ratio on E (diagnostic; truncate() re-verifies).
  if (e_cells.size() >= 2) {
    Rng rng(sample_seed, "good-set-pairs");
    double worst = 0;
    for (int trial = 0; trial < 10000; ++trial) {
      std::uint32_t a = e_cells[rng.uniform_int(0, static_cast<int>(e_cells.size()) - 1)];
      std::uint32_t b = e_cells[rng.uniform_int(0, static_cast<int>(e_cells.size()) - 1)];
      if (a == b) continue;
      double d = (dom.cell_center(a) - dom.cell_center(b)).norm();
      double v = (u.get(a) - u.get(b)).norm();
      worst = std::max(worst, v / (lambda * d));
    }
    gs.c_e_sampled = worst;
  }
  return gs;
}

VectorField lipschitz_extend(const VectorField& u, const std::vector<std::uint8_t>& e_mask,
                             double m) {
  const auto& dom = u.domain();
  const int n = dom.dim;
  std::vector<std::uint32_t> e_cells;
  for (std::uint32_t c = 0; c < dom.ncells(); ++c)
    if (e_mask[c]) e_cells.push_back(c);
  if (e_cells.empty()) fail_input("lipschitz_extend: empty good set");

  std::vector<double> ex, ev;  // flattened centers and values of E
  ex.reserve(e_cells.size() * n);
  ev.reserve(e_cells.size() * n);
  for (auto c : e_cells) {
    VecN x = dom.cell_center(c);
    for (int a = 0; a < n; ++a) {
      ex.push_back(x[a]);
      ev.push_back(u.comp(c, a));
    }
  }

  VectorField out(u.domain_ptr());
  for (std::uint32_t c = 0; c < dom.ncells(); ++c) {
    if (!dom.inside(c)) continue;
    if (e_mask[c]) {  // McShane attains u(x) at y = x; skip the scan
      out.set(c, u.get(c));
      continue;
    }
    VecN x = dom.cell_center(c);
    double best[3] = {kInf, kInf, kInf};
    for (std::size_t s = 0; s < e_cells.size(); ++s) {
      double d2 = 0;
      for (int a = 0; a < n; ++a) {
        double t = x[a] - ex[s * n + a];
        d2 += t * t;
      }
      double reach = m * std::sqrt(d2);
      for (int a = 0; a < n; ++a) best[a] = std::min(best[a], ev[s * n + a] + reach);
    }
    for (int a = 0; a < n; ++a) out.comp(c, a) = best[a];
  }
  return out;
}

TruncationResult truncate(const VectorField& u, double lambda) {
  const auto& dom = u.domain();
  const int n = dom.dim;
  GoodSet gs = good_set(u, lambda);
  if (gs.e_count == 0)
    fail_input("truncate: empty good set at lambda = " + std::to_string(lambda) +
               " (truncation degenerate: raise lambda)");

  std::vector<std::uint32_t> e_cells;
  for (std::uint32_t c = 0; c < dom.ncells(); ++c)
    if (gs.e_mask[c]) e_cells.push_back(c);

  std::vector<double> ex, ev;
  ex.reserve(e_cells.size() * n);
  ev.reserve(e_cells.size() * n);
  for (auto c : e_cells) {
    VecN x = dom.cell_center(c);
    for (int a = 0; a < n; ++a) {
      ex.push_back(x[a]);
      ev.push_back(u.comp(c, a));
    }
  }

  // Exact componentwise Lipschitz constant over E. The pair scan guarantees
  // the McShane minimum reproduces u on E; the sampled estimate from
  // good_set() can undershoot and is kept only as a diagnostic.
  double exact = 0;
  for (std::size_t a = 0; a < e_cells.size(); ++a)
    for (std::size_t b = a + 1; b < e_cells.size(); ++b) {
      double d2 = 0;
      for (int k = 0; k < n; ++k) {
        double t = ex[a * n + k] - ex[b * n + k];
        d2 += t * t;
      }
      double inv = 1.0 / std::sqrt(d2);
      for (int k = 0; k < n; ++k)
        exact = std::max(exact, std::abs(ev[a * n + k] - ev[b * n + k]) * inv);
    }
  double m = std::max({gs.c_e_sampled * lambda, exact, 1e-12});

  TruncationResult res;
  res.u_m = lipschitz_extend(u, gs.e_mask, m);
  res.e_mask = gs.e_mask;
  res.e_count = gs.e_count;
  res.lambda = lambda;
  res.m = m;
  res.c_e = m / lambda;
  res.lipschitz_m = std::sqrt(double(n)) * m;
  res.excess_measure = gs.excess_measure;

  ScalarField mag = frobenius_field(gradient(u));
  double acc = 0;
  for (std::uint32_t c = 0; c < dom.ncells(); ++c)
    if (dom.inside(c) && mag[c] > lambda) acc += mag[c] * dom.cell_measure();
  res.bound_rhs = acc / lambda;
  return res;
}

}  // namespace rigidlab
