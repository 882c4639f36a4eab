#include "rigidlab/rigidity.hpp"

#include "rigidlab/calculus.hpp"
#include "rigidlab/korn.hpp"
#include "rigidlab/rotations.hpp"
#include "rigidlab/truncation.hpp"

#include <algorithm>
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

MatN random_rotation(Rng& rng, int n) {
  if (n == 2) {
    double t = rng.uniform(0.0, 6.283185307179586);
    MatN q(2, 2);
    q << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    return q;
  }
  MatN g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  return nearest_rotation_svd(g).q;
}

double taylor_ratio(const MatN& a, int n) {
  MatN sym = 0.5 * (a + a.transpose());
  double lhs = (sym - identity_mat(n)).norm();
  double den = nearest_rotation(a).distance + (a - identity_mat(n)).squaredNorm();
  return den > 1e-14 ? lhs / den : 0.0;
}

// ---------------------------------------------------------------------------
// Majorant reduction shared with the Korn engine: fold a successor into its
// predecessor whenever the predecessor's unpowered norm already dominates.
// The surviving group keeps the smaller exponent and the smallest slot.

struct TopGroups {
  std::vector<std::vector<std::size_t>> members;
  std::vector<ScalarField> sums;
  std::vector<double> exps;
  nlohmann::json trace = nlohmann::json::array();
};

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

// ---------------------------------------------------------------------------
// Lipschitz-regime engine. One level = entry reduction, then the direct
// rigidity fit, the single linearization pass, or the exponent-halving
// recursion. Parts are written into the caller's global slot vector; every
// level keeps the closure Du = Q + sum F exact, including after clipping.

struct LipContext {
  std::shared_ptr<const GridDomain> dom;
  const std::vector<std::uint32_t>& cells;
  const VectorField& u;
  const MatrixField& du;
  double m = 0.0;       // certified sup |Du|
  double c_used = 0.0;  // Taylor constant with margin
  std::size_t nslots = 0;
};

// Uniform bound |F_alpha| <= m + sqrt(n): a violating cell hands its whole
// budget Du - Q to the first violating slot and zeroes the others, which
// keeps the cellwise sum intact.
int clip_parts(const LipContext& ctx, const std::vector<std::size_t>& slots, const MatN& q,
               std::vector<MatrixField>& parts) {
  const int n = ctx.dom->dim;
  const double bound = ctx.m + std::sqrt(static_cast<double>(n));
  int clipped = 0;
  for (auto c : ctx.cells) {
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (parts[slots[k]].get(c).norm() > bound) {
        MatN rep = ctx.du.get(c) - q;
        for (std::size_t j = 0; j < slots.size(); ++j)
          parts[slots[j]].set(c, j == k ? rep : zero_mat(n));
        ++clipped;
        break;
      }
    }
  }
  return clipped;
}

// Factor out q_frame, bound the symmetric part through the Taylor envelope,
// run the Korn engine on the linearized field, and rotate the decomposition
// back. sq[k] is the squared charge added to majorant k (null = none).
MatN korn_core(const LipContext& ctx, const std::vector<ScalarField>& f,
               const std::vector<double>& p, const std::vector<std::size_t>& slots,
               const MatN& q_frame, const std::vector<const ScalarField*>& sq,
               std::vector<MatrixField>& parts, nlohmann::json& entry) {
  const int n = ctx.dom->dim;
  const MatN qt = q_frame.transpose();

  for (auto c : ctx.cells) {
    MatN a = qt * ctx.du.get(c);
    TaylorCheck tc = taylor_check(a, ctx.c_used);
    if (!tc.ok)
      fail_contract("rigidity: Taylor envelope fails at cell " + std::to_string(c) + " (lhs " +
                    std::to_string(tc.lhs) + ", rhs " + std::to_string(tc.rhs) + ")");
  }

  std::vector<ScalarField> fhat;
  fhat.reserve(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    ScalarField fh(ctx.dom);
    for (auto c : ctx.cells) fh[c] = ctx.c_used * (f[k][c] + (sq[k] ? (*sq[k])[c] : 0.0));
    fhat.push_back(std::move(fh));
  }

  // The frame change is affine on the same lattice, so differencing u~
  // inside the Korn engine reproduces Q^T Du - Id up to roundoff.
  VectorField ut(ctx.dom);
  for (auto c : ctx.cells) {
    VecN x = ctx.dom->cell_center(c);
    ut.set(c, VecN(qt * ctx.u.get(c) - x));
  }
  MixedDecomposition kd = korn_multi(ut, fhat, ExponentList(p));

  RotationResult q2 = nearest_rotation(identity_mat(n) + kd.constant);
  MatN c0 = identity_mat(n) + kd.constant - q2.q;

  // The rotation defect Id + S - Q2 is charged to the strongest majorant;
  // on ties the later slot takes it.
  std::size_t astar = 0;
  double best = -1.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    double nn = lp_norm(f[k], p[k]);
    if (nn >= best) {
      best = nn;
      astar = k;
    }
  }

  for (std::size_t k = 0; k < f.size(); ++k) {
    MatrixField& dst = parts[slots[k]];
    for (auto c : ctx.cells) {
      MatN m = kd.parts[k].get(c);
      if (k == astar) m += c0;
      dst.set(c, MatN(q_frame * m));
    }
  }
  entry["alpha_star"] = static_cast<int>(slots[astar]);
  entry["rotation_defect"] = c0.norm();
  entry["korn_branch"] = kd.telemetry.value("branch", std::string());
  return MatN(q_frame * q2.q);
}

MatN lip_level(const LipContext& ctx, std::vector<ScalarField> f, std::vector<double> p,
               std::vector<std::size_t> slots, int depth, std::vector<MatrixField>& parts,
               nlohmann::json& trace) {
  const int n = ctx.dom->dim;

  // Entry reduction on powered norms: a majorant not exceeding its successor
  // folds upward into the larger exponent (ties fold; the sup bound 2m keeps
  // the embedding onto the larger exponent affordable).
  nlohmann::json merges = nlohmann::json::array();
  std::vector<double> pw(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) pw[k] = std::pow(lp_norm(f[k], p[k]), p[k]);
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t k = 0; k + 1 < f.size(); ++k) {
      if (pw[k] <= pw[k + 1]) {
        merges.push_back(
            nlohmann::json::array({static_cast<int>(slots[k]), static_cast<int>(slots[k + 1])}));
        auto& dst = f[k + 1].raw();
        const auto& src = f[k].raw();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        f.erase(f.begin() + k);
        p.erase(p.begin() + k);
        slots.erase(slots.begin() + k);
        pw.erase(pw.begin() + k);
        pw[k] = std::pow(lp_norm(f[k], p[k]), p[k]);
        merged = true;
        break;
      }
    }
  }

  nlohmann::json entry;
  entry["depth"] = depth;
  entry["merges"] = merges;
  entry["exponents"] = p;

  MatN q;
  if (f.size() == 1) {
    // Single majorant left: the plain rigidity fit in its exponent.
    entry["branch"] = "direct";
    q = procrustes_mean(ctx.du);
    MatrixField& dst = parts[slots[0]];
    for (auto c : ctx.cells) dst.set(c, MatN(ctx.du.get(c) - q));
  } else if (p.back() <= 2.0 * p.front()) {
    entry["branch"] = "small-q";
    MatN q1 = procrustes_mean(ctx.du);
    MatN q1t = q1.transpose();
    ScalarField sq(ctx.dom);
    for (auto c : ctx.cells)
      sq[c] = (MatN(q1t * ctx.du.get(c)) - identity_mat(n)).squaredNorm();
    std::vector<const ScalarField*> sqp(f.size(), nullptr);
    sqp[0] = &sq;
    q = korn_core(ctx, f, p, slots, q1, sqp, parts, entry);
  } else {
    entry["branch"] = "recurse";
    // Exponent map: the lowest doubles, the rest cap at the top exponent.
    // Capped slots coalesce into the top slot for the recursive call (their
    // doubled exponents would collide there anyway).
    const double ptop = p.back();
    std::size_t cut = p.size() - 1;
    while (cut > 0 && 2.0 * p[cut - 1] >= ptop) --cut;
    std::vector<ScalarField> fr(f.begin(), f.begin() + cut);
    std::vector<double> pr;
    std::vector<std::size_t> sr(slots.begin(), slots.begin() + cut);
    for (std::size_t k = 0; k < cut; ++k) pr.push_back(2.0 * p[k]);
    ScalarField tailf = f[cut];
    for (std::size_t k = cut + 1; k < f.size(); ++k) {
      auto& dst = tailf.raw();
      const auto& src = f[k].raw();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    fr.push_back(std::move(tailf));
    pr.push_back(ptop);
    sr.push_back(slots.back());
    entry["recursion_exponents"] = pr;
    entry["coalesced"] = static_cast<int>(p.size() - 1 - cut);

    std::vector<MatrixField> rec(ctx.nslots);
    for (auto& mfield : rec) mfield = MatrixField(ctx.dom);
    MatN qrec = lip_level(ctx, std::move(fr), std::move(pr), sr, depth + 1, rec, trace);

    // Squared recursion parts feed the Taylor envelope at this level:
    // |Q^T Du - Id|^2 <= nf * sum |F_rec|^2 cellwise.
    const double nf = static_cast<double>(f.size());
    std::vector<ScalarField> sqs;
    sqs.reserve(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
      ScalarField s(ctx.dom);
      for (auto c : ctx.cells) s[c] = nf * rec[slots[k]].get(c).squaredNorm();
      sqs.push_back(std::move(s));
    }
    std::vector<const ScalarField*> sqp;
    for (auto& s : sqs) sqp.push_back(&s);
    q = korn_core(ctx, f, p, slots, qrec, sqp, parts, entry);
  }

  entry["clipped_cells"] = clip_parts(ctx, slots, q, parts);
  trace.push_back(entry);
  return q;
}

int lambda_level(const nlohmann::json& trace) {
  int k = 0;
  for (const auto& e : trace)
    if (e.value("branch", std::string()) == "recurse") ++k;
  return k;
}

void finish_result(RigidityResult& out, const std::vector<ScalarField>& fs,
                   const ExponentList& exps, const std::vector<std::uint32_t>& cells,
                   const MatrixField& du) {
  for (std::size_t a = 0; a < fs.size(); ++a) {
    out.part_norms.push_back(lp_norm(out.parts[a], exps[a]));
    out.majorant_norms.push_back(lp_norm(fs[a], exps[a]));
    out.ratios.push_back(safe_ratio(out.part_norms[a], out.majorant_norms[a]));
  }
  double rec = 0.0;
  for (auto c : cells) {
    MatN m = du.get(c) - out.q;
    for (const auto& part : out.parts) m -= part.get(c);
    rec = std::max(rec, m.norm());
  }
  if (rec > 1e-10) fail_contract("rigidity: reconstruction drifts by " + std::to_string(rec));
  out.telemetry["reconstruction_sup"] = rec;
}

RigidityResult engine_nonlinear(const VectorField& u, const std::vector<ScalarField>& fs,
                                const ExponentList& exps, bool beta_smallest_tie) {
  const auto dom_sp = u.domain_ptr();
  if (!dom_sp) fail_input("rigidity: displacement field has no domain");
  const GridDomain& dom = *dom_sp;
  const int n = dom.dim;
  if (fs.size() != exps.size()) fail_input("rigidity: majorant count must match exponent count");
  for (const auto& f : fs) {
    if (!f.domain_ptr()) fail_input("rigidity: majorant field has no domain");
    if (f.domain_ptr().get() != dom_sp.get() && !same_geometry(dom, f.domain()))
      fail_input("rigidity: majorant lives on a different grid");
  }

  const auto cells = dom.inside_cells();
  MatrixField du = gradient(u);
  ScalarField distf = dist_field(du);
  for (auto c : cells) {
    double tot = 0.0;
    for (const auto& f : fs) {
      double v = f[c];
      if (!std::isfinite(v) || v < 0.0)
        fail_input("rigidity: majorant not finite and nonnegative at cell " + std::to_string(c));
      tot += v;
    }
    if (distf[c] > tot + 1e-10)
      fail_input("rigidity: dist(Du, SO) exceeds the majorant sum at cell " + std::to_string(c));
  }

  TopGroups grp = merge_top(fs, exps);
  const std::size_t kg = grp.sums.size();

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

  MatN qq = identity_mat(n);
  std::vector<MatrixField> parts;
  parts.reserve(fs.size());
  for (std::size_t a = 0; a < fs.size(); ++a) parts.emplace_back(dom_sp);

  if (kg == 1) {
    // The first majorant dominates the rest: single-exponent rigidity.
    tel["branch"] = "order-shortcut";
    qq = procrustes_mean(du);
    MatrixField& dst = parts[grp.members[0].front()];
    for (auto c : cells) dst.set(c, MatN(du.get(c) - qq));
  } else {
    tel["branch"] = "truncate";
    const double lambda = 2.0 * n;
    TruncationResult tr = truncate(u, lambda);
    MatrixField dum = gradient(tr.u_m);
    double sup_dum = 0.0;
    for (auto c : cells) sup_dum = std::max(sup_dum, dum.get(c).norm());
    const double mrun = std::max({tr.lipschitz_m, sup_dum, static_cast<double>(n + 1)});

    // Cells whose truncated gradient can differ from Du: the excess set plus
    // one face ring (the difference stencils bleed one cell inward).
    std::vector<std::uint8_t> ring(dom.ncells(), 0);
    std::size_t boost_cells = 0;
    for (auto c : cells) {
      bool touched = tr.e_mask[c] == 0;
      if (!touched) {
        auto ijk = dom.unpack(c);
        for (int a = 0; a < n && !touched; ++a) {
          for (int s = -1; s <= 1 && !touched; s += 2) {
            int pm[3] = {ijk[0], ijk[1], ijk[2]};
            pm[a] += s;
            if (dom.in_bounds(pm[0], pm[1], pm[2])) {
              std::uint32_t cc = dom.index(pm[0], pm[1], pm[2]);
              if (dom.inside(cc) && tr.e_mask[cc] == 0) touched = true;
            }
          }
        }
      }
      if (touched) {
        ring[c] = 1;
        ++boost_cells;
      }
    }

    // The dominant majorant absorbs the truncation error 2m on the ring.
    std::size_t beta = 0;
    double best = -1.0;
    for (std::size_t k = 0; k < kg; ++k) {
      double pwk = std::pow(lp_norm(grp.sums[k], grp.exps[k]), grp.exps[k]);
      bool take = beta_smallest_tie ? (pwk > best) : (pwk >= best);
      if (take) {
        best = pwk;
        beta = k;
      }
    }
    std::vector<ScalarField> fm = grp.sums;
    for (auto c : cells)
      if (ring[c]) fm[beta][c] += 2.0 * mrun;

    // The truncated field must stay majorized before linearization.
    ScalarField distm = dist_field(dum);
    double worst = 0.0;
    std::uint32_t worst_cell = 0;
    for (auto c : cells) {
      double tot = 0.0;
      for (std::size_t k = 0; k < kg; ++k) tot += fm[k][c];
      double dev = distm[c] - tot;
      if (dev > worst) {
        worst = dev;
        worst_cell = c;
      }
    }
    if (worst > 1e-9)
      fail_contract("rigidity: truncated distance escapes the modified majorants by " +
                    std::to_string(worst) + " at cell " + std::to_string(worst_cell));

    std::vector<ScalarField> fcl = fm;
    for (auto& s : fcl)
      for (auto c : cells) s[c] = std::min(s[c], 2.0 * mrun);

    const double c_taylor = taylor_constant(n);
    const double c_used = 1.05 * c_taylor;
    LipContext ctx{dom_sp, cells, tr.u_m, dum, mrun, c_used, fs.size()};
    std::vector<MatrixField> lparts;
    lparts.reserve(fs.size());
    for (std::size_t a = 0; a < fs.size(); ++a) lparts.emplace_back(dom_sp);
    nlohmann::json trace = nlohmann::json::array();
    std::vector<std::size_t> gslots;
    for (std::size_t k = 0; k < kg; ++k) gslots.push_back(grp.members[k].front());
    qq = lip_level(ctx, fcl, grp.exps, gslots, 0, lparts, trace);

    // Final assembly: everything u picked up through truncation and
    // linearization is redistributed by the boosted majorants plus the
    // Lipschitz-regime parts.
    std::vector<ScalarField> phi;
    phi.reserve(kg);
    for (std::size_t k = 0; k < kg; ++k) {
      ScalarField ph(dom_sp);
      for (auto c : cells) ph[c] = fm[k][c] + lparts[gslots[k]].get(c).norm();
      phi.push_back(std::move(ph));
    }
    MatrixField amat(dom_sp);
    for (auto c : cells) amat.set(c, MatN(du.get(c) - qq));
    std::vector<const ScalarField*> pp;
    for (const auto& ph : phi) pp.push_back(&ph);
    std::vector<MatrixField> sparts = split_by_majorants(amat, pp);
    for (std::size_t k = 0; k < kg; ++k) parts[gslots[k]] = std::move(sparts[k]);

    tel["levels"] = trace;
    tel["lambda_level"] = lambda_level(trace);
    tel["beta_slot"] = static_cast<int>(gslots[beta]);
    tel["taylor_c"] = c_taylor;
    tel["taylor_c_used"] = c_used;
    tel["truncation"] = {{"lambda", lambda},          {"m", tr.m},
                         {"lipschitz_m", tr.lipschitz_m}, {"m_run", mrun},
                         {"e_count", tr.e_count},     {"excess_measure", tr.excess_measure},
                         {"c_e", tr.c_e},             {"bound_rhs", tr.bound_rhs},
                         {"boost_cells", boost_cells}};
  }

  RigidityResult out{qq, std::move(parts), exps, {}, {}, {}, tel};
  finish_result(out, fs, exps, cells, du);
  return out;
}

}  // namespace

TaylorCheck taylor_check(const MatN& a, double c) {
  if (!(c > 0.0)) fail_input("taylor_check: c must be positive");
  const int n = static_cast<int>(a.rows());
  MatN sym = 0.5 * (a + a.transpose());
  double lhs = (sym - identity_mat(n)).norm();
  double rhs = c * nearest_rotation(a).distance + c * (a - identity_mat(n)).squaredNorm();
  return {lhs, rhs, lhs <= rhs};
}

double taylor_constant(int dim) {
  static std::mutex mu;
  static std::map<int, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(dim);
  if (it != cache.end()) return it->second;
  if (dim != 2 && dim != 3) fail_input("taylor_constant: dimension must be 2 or 3");

  const int n = dim;
  const double span = 2.0 * n + 1.0;
  Rng rng(997101, "taylor-sweep-" + std::to_string(dim));
  double c = 0.0;
  auto visit = [&](const MatN& a) { c = std::max(c, taylor_ratio(a, n)); };

  // Box stratum: the full clipping range |A| <= 2n + 1.
  for (int i = 0; i < 400000; ++i) {
    MatN a(n, n);
    for (int r = 0; r < n; ++r)
      for (int s = 0; s < n; ++s) a(r, s) = rng.uniform(-span / n, span / n);
    visit(a);
  }
  // Rotation-perturbed stratum: Q (Id + eps B), log-spaced amplitudes.
  for (int i = 0; i < 400000; ++i) {
    MatN q = random_rotation(rng, n);
    MatN b(n, n);
    for (int r = 0; r < n; ++r)
      for (int s = 0; s < n; ++s) b(r, s) = rng.normal();
    double bn = b.norm();
    if (bn < 1e-12) continue;
    double eps = std::pow(10.0, rng.uniform(-4.0, 0.3));
    MatN a = q * (identity_mat(n) + (eps / bn) * b);
    if (a.norm() <= span) visit(a);
  }
  // Near-identity stratum, where the ratio climbs toward its supremum.
  for (int i = 0; i < 200000; ++i) {
    MatN b(n, n);
    for (int r = 0; r < n; ++r)
      for (int s = 0; s < n; ++s) b(r, s) = rng.normal();
    double bn = b.norm();
    if (bn < 1e-12) continue;
    double eps = std::pow(10.0, rng.uniform(-6.0, -1.0));
    MatN a = identity_mat(n) + (eps / bn) * b;
    visit(a);
  }

  cache[dim] = c;
  return c;
}

RigidityLpResult rigidity_lp(const VectorField& u, double p) {
  if (!(p > 1.0) || !std::isfinite(p)) fail_input("rigidity_lp: p must lie in (1, inf)");
  if (!u.domain_ptr()) fail_input("rigidity_lp: field has no domain");
  const GridDomain& dom = u.domain();
  MatrixField du = gradient(u);
  MatN q = procrustes_mean(du);
  auto cells = dom.inside_cells();
  MatrixField dev(u.domain_ptr());
  for (auto c : cells) dev.set(c, MatN(du.get(c) - q));
  double num = lp_norm_region(dev, p, cells);
  double den = lp_norm(dist_field(du), p);
  return {q, safe_ratio(num, den)};
}

RigidityResult rigidity_lipschitz(const VectorField& u, const ScalarField& f,
                                  const ScalarField& g, double p, double q, double m) {
  ExponentList exps({p, q});
  const auto dom_sp = u.domain_ptr();
  if (!dom_sp) fail_input("rigidity_lipschitz: displacement field has no domain");
  const GridDomain& dom = *dom_sp;
  const int n = dom.dim;
  if (!(m > 0.0) || !std::isfinite(m))
    fail_input("rigidity_lipschitz: m must be positive and finite");
  for (const ScalarField* s : {&f, &g}) {
    if (!s->domain_ptr()) fail_input("rigidity_lipschitz: majorant field has no domain");
    if (s->domain_ptr().get() != dom_sp.get() && !same_geometry(dom, s->domain()))
      fail_input("rigidity_lipschitz: majorant lives on a different grid");
  }

  const auto cells = dom.inside_cells();
  MatrixField du = gradient(u);
  ScalarField distf = dist_field(du);
  for (auto c : cells) {
    double fv = f[c];
    double gv = g[c];
    if (!std::isfinite(fv) || fv < 0.0 || !std::isfinite(gv) || gv < 0.0)
      fail_input("rigidity_lipschitz: majorant not finite and nonnegative at cell " +
                 std::to_string(c));
    if (du.get(c).norm() > m + 1e-9)
      fail_input("rigidity_lipschitz: |Du| exceeds m at cell " + std::to_string(c));
    if (distf[c] > fv + gv + 1e-10)
      fail_input("rigidity_lipschitz: dist(Du, SO) exceeds f + g at cell " + std::to_string(c));
  }

  std::vector<ScalarField> fcl{f, g};
  for (auto& s : fcl)
    for (auto c : cells) s[c] = std::min(s[c], 2.0 * m);

  const double c_taylor = taylor_constant(n);
  const double c_used = 1.05 * c_taylor;
  LipContext ctx{dom_sp, cells, u, du, m, c_used, 2};
  std::vector<MatrixField> parts;
  parts.emplace_back(dom_sp);
  parts.emplace_back(dom_sp);
  nlohmann::json trace = nlohmann::json::array();
  MatN qq = lip_level(ctx, std::move(fcl), {p, q}, {0, 1}, 0, parts, trace);

  nlohmann::json tel;
  tel["branch"] = "lipschitz";
  tel["levels"] = trace;
  tel["lambda_level"] = lambda_level(trace);
  tel["taylor_c"] = c_taylor;
  tel["taylor_c_used"] = c_used;
  tel["m"] = m;

  RigidityResult out{qq, std::move(parts), exps, {}, {}, {}, tel};
  finish_result(out, {f, g}, exps, cells, du);
  return out;
}

RigidityResult rigidity_mixed(const VectorField& u, const ScalarField& f, const ScalarField& g,
                              double p, double q) {
  return engine_nonlinear(u, {f, g}, ExponentList({p, q}), false);
}

RigidityResult rigidity_multi(const VectorField& u, const std::vector<ScalarField>& majorants,
                              const ExponentList& exponents) {
  return engine_nonlinear(u, majorants, exponents, true);
}

}  // namespace rigidlab
