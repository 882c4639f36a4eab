#include "rigidlab/korn.hpp"

#include "rigidlab/calculus.hpp"
#include "rigidlab/extension.hpp"
#include "rigidlab/newtonian.hpp"
#include "rigidlab/rotations.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace rigidlab {

namespace {

double safe_ratio(double num, double den) {
  if (num == 0.0) return 0.0;
  return den > 0.0 ? num / den : kInf;
}

bool same_geometry(const GridDomain& a, const GridDomain& b) {
  if (a.dim != b.dim || a.shape != b.shape || a.spacing != b.spacing) return false;
  for (int i = 0; i < 3; ++i)
    if (a.origin[i] != b.origin[i]) return false;
  return a.mask == b.mask;
}

// One cover per domain object, built on first use. The cover keeps the
// domain alive, so a cached address cannot be recycled under us.
std::shared_ptr<const BallCover> cover_for(const std::shared_ptr<const GridDomain>& dom) {
  static std::mutex mu;
  static std::map<const GridDomain*, std::shared_ptr<const BallCover>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[dom.get()];
  if (!slot) slot = std::make_shared<BallCover>(build_cover(dom));
  return slot;
}

struct SkewFit {
  MatN s;
  double ratio = 0.0;
};

// Mean-skew fit of an assembled derivative field over a region; the ratio is
// ||Dw - S||_p / ||sym Dw||_p with 0/0 -> 0.
SkewFit skew_fit(const MatrixField& dw, const std::vector<std::uint32_t>& region, double p) {
  MatN s = skew_mean(dw, region);
  MatrixField dev(dw.domain_ptr());
  MatrixField symp(dw.domain_ptr());
  for (auto c : region) {
    MatN m = dw.get(c);
    MatN e = 0.5 * (m + m.transpose());
    dev.set(c, MatN(m - s));
    symp.set(c, e);
  }
  double num = lp_norm_region(dev, p, region);
  double den = lp_norm_region(symp, p, region);
  return {s, safe_ratio(num, den)};
}

// Sup of the discrete vector Laplacian over region cells whose full stencil
// is present. Diagnostic only: the patch residuals are measured where they
// matter, in the skew fit.
double laplacian_sup(const VectorField& w, const std::vector<std::uint32_t>& region) {
  const GridDomain& dom = w.domain();
  const double h2 = dom.spacing * dom.spacing;
  double sup = 0.0;
  for (auto c : region) {
    auto ijk = dom.unpack(c);
    bool ok = true;
    VecN acc = VecN::Zero(dom.dim);
    for (int a = 0; a < dom.dim && ok; ++a) {
      int pm[3] = {ijk[0], ijk[1], ijk[2]};
      pm[a] += 1;
      bool hp = dom.in_bounds(pm[0], pm[1], pm[2]) && dom.inside(dom.index(pm[0], pm[1], pm[2]));
      std::uint32_t cp = hp ? dom.index(pm[0], pm[1], pm[2]) : 0;
      pm[a] -= 2;
      bool hm = dom.in_bounds(pm[0], pm[1], pm[2]) && dom.inside(dom.index(pm[0], pm[1], pm[2]));
      std::uint32_t cm = hm ? dom.index(pm[0], pm[1], pm[2]) : 0;
      if (!hp || !hm) {
        ok = false;
        break;
      }
      acc += (w.get(cp) - 2.0 * w.get(c) + w.get(cm)) / h2;
    }
    if (ok) sup = std::max(sup, acc.norm());
  }
  return sup;
}

struct TopGroups {
  std::vector<std::vector<std::size_t>> members;  // ascending input slots per group
  std::vector<ScalarField> sums;
  std::vector<double> exps;  // exponent of the group's first member
  nlohmann::json trace = nlohmann::json::array();
};

// Adjacent-pair elimination on unpowered norms: whenever a majorant already
// dominates its successor, the successor is folded into it and the group
// keeps the smaller exponent. Ties merge; both branches are valid there, so
// the cheap one wins. Rescan from the front after every merge.
TopGroups merge_top(const std::vector<ScalarField>& fs, const ExponentList& exps) {
  TopGroups g;
  std::vector<double> norms;
  for (std::size_t a = 0; a < fs.size(); ++a) {
    g.members.push_back({a});
    g.sums.push_back(fs[a]);
    g.exps.push_back(exps[a]);
    norms.push_back(lp_norm(fs[a], exps[a]));
  }
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t k = 0; k + 1 < g.sums.size(); ++k) {
      if (norms[k] >= norms[k + 1]) {
        g.trace.push_back(nlohmann::json::array(
            {static_cast<int>(g.members[k].front()), static_cast<int>(g.members[k + 1].front())}));
        auto& dst = g.sums[k].raw();
        const auto& src = g.sums[k + 1].raw();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        g.members[k].insert(g.members[k].end(), g.members[k + 1].begin(), g.members[k + 1].end());
        g.sums.erase(g.sums.begin() + k + 1);
        g.members.erase(g.members.begin() + k + 1);
        g.exps.erase(g.exps.begin() + k + 1);
        norms.erase(norms.begin() + k + 1);
        norms[k] = lp_norm(g.sums[k], g.exps[k]);
        merged = true;
        break;
      }
    }
  }
  return g;
}

// Window of the parent lattice around one interior ball, mask copied from
// the parent. Potentials are solved on this crop instead of the full box.
struct Crop {
  std::shared_ptr<GridDomain> dom;
  std::array<int, 3> lo{0, 0, 0};

  std::uint32_t of_parent(const GridDomain& parent, std::uint32_t pc) const {
    auto ijk = parent.unpack(pc);
    return dom->index(ijk[0] - lo[0], ijk[1] - lo[1], ijk[2] - lo[2]);
  }
  std::uint32_t to_parent(const GridDomain& parent, std::uint32_t cc) const {
    auto ijk = dom->unpack(cc);
    return parent.index(ijk[0] + lo[0], ijk[1] + lo[1], ijk[2] + lo[2]);
  }
};

Crop make_crop(const GridDomain& dom, const VecN& center, double radius) {
  Crop crop;
  crop.dom = std::make_shared<GridDomain>();
  GridDomain& c = *crop.dom;
  c.dim = dom.dim;
  c.spacing = dom.spacing;
  c.kind = "custom";
  c.size = dom.size;
  std::array<int, 3> hi{0, 0, 0};
  for (int a = 0; a < dom.dim; ++a) {
    double m0 = center[a] - radius - 2.5 * dom.spacing;
    double m1 = center[a] + radius + 2.5 * dom.spacing;
    crop.lo[a] = std::max(0, static_cast<int>(std::floor((m0 - dom.origin[a]) / dom.spacing)));
    hi[a] = std::min(dom.shape[a] - 1,
                     static_cast<int>(std::ceil((m1 - dom.origin[a]) / dom.spacing)));
    c.shape[a] = hi[a] - crop.lo[a] + 1;
    c.origin[a] = dom.origin[a] + crop.lo[a] * dom.spacing;
  }
  c.mask.assign(c.ncells(), 0);
  for (std::uint32_t cc = 0; cc < c.ncells(); ++cc)
    c.mask[cc] = dom.mask[crop.to_parent(dom, cc)];
  return crop;
}

// Fit region: cells within half the ball radius, grown by 25% steps if the
// lattice is too coarse to put a cell center that deep.
std::vector<std::uint32_t> fit_region(const GridDomain& dom, const VecN& center, double radius,
                                      std::size_t ball_index) {
  double rr = 0.5 * radius;
  auto cells = ball_cells(dom, center, rr);
  while (cells.empty() && rr < radius) {
    rr = std::min(radius, 1.25 * rr);
    cells = ball_cells(dom, center, rr);
  }
  if (cells.empty())
    fail_contract("korn: local fit region is empty for ball " + std::to_string(ball_index));
  return cells;
}

MixedDecomposition korn_engine(const VectorField& u, const std::vector<ScalarField>& fs,
                               const ExponentList& exps) {
  const auto dom_sp = u.domain_ptr();
  if (!dom_sp) fail_input("korn: displacement field has no domain");
  const GridDomain& dom = *dom_sp;
  const int n = dom.dim;
  if (fs.size() != exps.size()) fail_input("korn: majorant count must match exponent count");
  for (const auto& f : fs) {
    if (!f.domain_ptr()) fail_input("korn: majorant field has no domain");
    if (f.domain_ptr().get() != dom_sp.get() && !same_geometry(dom, f.domain()))
      fail_input("korn: majorant lives on a different grid");
  }

  const auto cells = dom.inside_cells();
  MatrixField du = gradient(u);
  MatrixField eu(dom_sp);
  for (auto c : cells) {
    MatN m = du.get(c);
    MatN e = 0.5 * (m + m.transpose());
    eu.set(c, e);
  }

  // Majorant contract: finite, nonnegative, and |Eu| <= sum f_alpha + tol.
  double worst = 0.0;
  std::uint32_t worst_cell = 0;
  for (auto c : cells) {
    double tot = 0.0;
    for (const auto& f : fs) {
      double v = f[c];
      if (!std::isfinite(v) || v < 0.0)
        fail_input("korn: majorant not finite and nonnegative at cell " + std::to_string(c));
      tot += v;
    }
    double dev = eu.get(c).norm() - tot;
    if (dev > worst) {
      worst = dev;
      worst_cell = c;
    }
  }
  if (worst > 1e-10)
    fail_contract("korn: |Eu| exceeds the majorant sum by " + std::to_string(worst) +
                  " at cell " + std::to_string(worst_cell));

  TopGroups grp = merge_top(fs, exps);
  const std::size_t kg = grp.sums.size();

  MixedDecomposition out{zero_mat(n), {}, exps, {}, {}, {}, nlohmann::json::object()};
  out.parts.reserve(fs.size());
  for (std::size_t a = 0; a < fs.size(); ++a) out.parts.emplace_back(dom_sp);

  nlohmann::json tel;
  tel["merges"] = grp.trace;
  {
    nlohmann::json jg = nlohmann::json::array();
    for (std::size_t k = 0; k < kg; ++k) {
      nlohmann::json mem = nlohmann::json::array();
      for (auto a : grp.members[k]) mem.push_back(static_cast<int>(a));
      jg.push_back({{"slot", static_cast<int>(grp.members[k].front())},
                    {"exponent", grp.exps[k]},
                    {"members", mem}});
    }
    tel["groups"] = jg;
  }

  if (kg == 1) {
    // Everything is controlled at the smallest exponent: plain Korn fit.
    tel["branch"] = "direct";
    SkewFit fit = skew_fit(du, cells, grp.exps[0]);
    out.constant = fit.s;
    MatrixField& fpart = out.parts[grp.members[0].front()];
    for (auto c : cells) fpart.set(c, MatN(du.get(c) - fit.s));
    tel["classical_ratio"] = fit.ratio;
  } else {
    tel["branch"] = "cover";
    const double p_top = grp.exps.back();

    std::vector<const ScalarField*> mp;
    mp.reserve(kg);
    for (const auto& s : grp.sums) mp.push_back(&s);
    std::vector<MatrixField> fmats = split_by_majorants(eu, mp);

    auto cov_sp = cover_for(dom_sp);
    const BallCover& cov = *cov_sp;
    tel["cover"] = {{"balls", cov.balls.size()},
                    {"extra_balls", cov.balls.size() - 1},
                    {"boundary", cov.boundary_count},
                    {"gamma", cov.gamma},
                    {"alpha", cov.alpha}};

    bool have_s0 = false;
    MatN s0 = zero_mat(n);
    double patch_sup = 0.0;
    double ext_residual = 0.0;
    double harmonic = 0.0;
    nlohmann::json local_ratios = nlohmann::json::array();

    for (std::size_t l = 0; l < cov.balls.size(); ++l) {
      if (cov.owned[l].empty()) continue;
      const Ball& ball = cov.balls[l];
      MatN s_l = zero_mat(n);
      double lratio = 0.0;

      if (!ball.boundary) {
        Crop crop = make_crop(dom, ball.center, ball.radius);
        auto psup = ball_cells(dom, ball.center, ball.radius);
        std::vector<std::uint32_t> support;
        support.reserve(psup.size());
        for (auto pc : psup) support.push_back(crop.of_parent(dom, pc));

        MultiplierPlan plan(crop.dom);
        std::vector<PotentialResult> pots;
        pots.reserve(kg);
        for (std::size_t k = 0; k < kg; ++k) {
          MatrixField src(crop.dom);
          for (std::size_t i = 0; i < psup.size(); ++i)
            src.set(support[i], fmats[k].get(psup[i]));
          pots.push_back(potential_field(src, support, grp.exps[k], plan));
        }

        // Residual derivative Dw = Du - sum Du_k; the potentials carry the
        // majorized content, w is the nearly rigid remainder.
        MatrixField dw(crop.dom);
        VectorField wres(crop.dom);
        for (std::uint32_t cc = 0; cc < crop.dom->ncells(); ++cc) {
          if (!crop.dom->inside(cc)) continue;
          std::uint32_t pc = crop.to_parent(dom, cc);
          MatN m = du.get(pc);
          VecN wv = u.get(pc);
          for (const auto& pr : pots) {
            m -= pr.du.get(cc);
            wv -= pr.u.get(cc);
          }
          dw.set(cc, m);
          wres.set(cc, wv);
        }
        auto half = fit_region(*crop.dom, ball.center, ball.radius, l);
        SkewFit fit = skew_fit(dw, half, p_top);
        s_l = fit.s;
        lratio = fit.ratio;
        harmonic = std::max(harmonic, laplacian_sup(wres, half));

        for (auto pc : cov.owned[l])
          for (std::size_t k = 0; k + 1 < kg; ++k)
            out.parts[grp.members[k].front()].set(pc, pots[k].du.get(crop.of_parent(dom, pc)));
      } else {
        const FrameDomain& fr = *cov.frames[l];
        const auto& fdom_sp = fr.dom;
        const GridDomain& fdom = *fdom_sp;
        const MatN rot = fr.rot;
        const MatN rot_t = rot.transpose();

        auto fcells = fdom.inside_cells();
        VectorField uf(fdom_sp);
        std::vector<MatrixField> ffr;
        for (std::size_t k = 0; k + 1 < kg; ++k) ffr.emplace_back(fdom_sp);
        for (auto fc : fcells) {
          VecN w = fr.to_world(fdom.cell_center(fc));
          uf.set(fc, VecN(rot * sample_vector(u, w)));
          for (std::size_t k = 0; k + 1 < kg; ++k)
            ffr[k].set(fc, MatN(rot * sample_matrix(fmats[k], w) * rot_t));
        }
        MatrixField euf = sym_grad(uf);

        // One extension per lower group; the top group's extension is the
        // remainder T(Eu) - sum_k T(f_k), exact because the ray formula is
        // linear in the extended matrix field.
        std::shared_ptr<const GridDomain> bdom_sp;
        VectorField wext;
        double rext = 0.0;
        std::vector<MatrixField> ftil;
        MatrixField tail;
        for (std::size_t k = 0; k + 1 < kg; ++k) {
          MatrixField gk(fdom_sp);
          for (auto fc : fcells) gk.set(fc, MatN(euf.get(fc) - ffr[k].get(fc)));
          ExtensionResult ext = extend(uf, ffr[k], gk, grp.exps[k], p_top, fr.chart_radius);
          ext_residual = std::max(ext_residual, ext.residual_sup);
          if (k == 0) {
            bdom_sp = ext.ball;
            wext = ext.w;
            rext = ext.r;
            ftil.push_back(ext.f_ext);
            tail = ext.g_ext;
          } else {
            if (!same_geometry(*bdom_sp, *ext.ball))
              fail_contract("korn: extension balls disagree for ball " + std::to_string(l));
            MatrixField fk(bdom_sp);
            fk.raw() = ext.f_ext.raw();
            ftil.push_back(fk);
            auto& tr = tail.raw();
            const auto& fe = ext.f_ext.raw();
            for (std::size_t i = 0; i < tr.size(); ++i) tr[i] -= fe[i];
          }
        }
        ftil.push_back(tail);

        const GridDomain& bdom = *bdom_sp;
        auto bcells = bdom.inside_cells();
        MultiplierPlan bplan(bdom_sp);
        std::vector<PotentialResult> pots;
        pots.reserve(kg);
        for (std::size_t k = 0; k < kg; ++k)
          pots.push_back(potential_field(ftil[k], bcells, grp.exps[k], bplan));

        MatrixField dwb = gradient(wext);
        VectorField wres(bdom_sp);
        for (auto bc : bcells) {
          MatN m = dwb.get(bc);
          VecN wv = wext.get(bc);
          for (const auto& pr : pots) {
            m -= pr.du.get(bc);
            wv -= pr.u.get(bc);
          }
          dwb.set(bc, m);
          wres.set(bc, wv);
        }
        VecN zero = VecN::Zero(n);
        auto half = fit_region(bdom, zero, rext, l);
        SkewFit fit = skew_fit(dwb, half, p_top);
        s_l = MatN(rot_t * fit.s * rot);
        lratio = fit.ratio;
        harmonic = std::max(harmonic, laplacian_sup(wres, half));

        for (auto pc : cov.owned[l]) {
          VecN xi = fr.to_frame(dom.cell_center(pc));
          for (std::size_t k = 0; k + 1 < kg; ++k) {
            MatN m = sample_matrix(pots[k].du, xi);
            out.parts[grp.members[k].front()].set(pc, MatN(rot_t * m * rot));
          }
        }
      }

      if (!have_s0) {
        s0 = s_l;
        have_s0 = true;
      }
      patch_sup = std::max(patch_sup, (s_l - s0).norm());
      local_ratios.push_back(lratio);
    }
    if (!have_s0) fail_contract("korn: cover owns no cells");
    out.constant = s0;

    // The top part closes the sum exactly, absorbing the patch jumps
    // S_l - S_0 and all potential tails.
    MatrixField& ftop = out.parts[grp.members.back().front()];
    for (auto c : cells) {
      MatN m = du.get(c) - s0;
      for (std::size_t k = 0; k + 1 < kg; ++k) m -= out.parts[grp.members[k].front()].get(c);
      ftop.set(c, m);
    }

    tel["patch_sup"] = patch_sup;
    tel["local_ratios"] = local_ratios;
    tel["extension_residual_sup"] = ext_residual;
    tel["harmonic_sup"] = harmonic;
  }

  for (std::size_t a = 0; a < fs.size(); ++a) {
    out.part_norms.push_back(lp_norm(out.parts[a], exps[a]));
    out.majorant_norms.push_back(lp_norm(fs[a], exps[a]));
    out.ratios.push_back(safe_ratio(out.part_norms[a], out.majorant_norms[a]));
  }

  double rec = 0.0;
  for (auto c : cells) {
    MatN m = du.get(c) - out.constant;
    for (std::size_t a = 0; a < fs.size(); ++a) m -= out.parts[a].get(c);
    rec = std::max(rec, m.norm());
  }
  if (rec > 1e-10)
    fail_contract("korn: reconstruction drifts by " + std::to_string(rec));
  tel["reconstruction_sup"] = rec;
  out.telemetry = tel;
  return out;
}

}  // namespace

KornClassicalResult korn_classical(const VectorField& u, const std::vector<std::uint32_t>& region,
                                   double p) {
  if (region.empty()) fail_input("korn_classical: empty region");
  if (!(p > 1.0) || !std::isfinite(p)) fail_input("korn_classical: p must lie in (1, inf)");
  const GridDomain& dom = u.domain();
  for (auto c : region)
    if (c >= dom.ncells() || !dom.inside(c))
      fail_input("korn_classical: region cell " + std::to_string(c) + " is off the mask");
  MatrixField du = gradient(u);
  SkewFit fit = skew_fit(du, region, p);
  return {fit.s, fit.ratio};
}

MixedDecomposition korn_mixed(const VectorField& u, const ScalarField& f, const ScalarField& g,
                              double p, double q) {
  return korn_multi(u, {f, g}, ExponentList({p, q}));
}

MixedDecomposition korn_multi(const VectorField& u, const std::vector<ScalarField>& majorants,
                              const ExponentList& exponents) {
  return korn_engine(u, majorants, exponents);
}

}  // namespace rigidlab
