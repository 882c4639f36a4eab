#include "rigidlab/lorentz.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rigidlab/rigidity.hpp"

namespace rigidlab {

namespace {

double lp_pairs(const std::vector<double>& v, const std::vector<double>& mu, double p) {
  if (v.empty()) return 0;
  if (p == kInf) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  double acc = 0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]), p) * mu[i];
  return std::pow(acc, 1.0 / p);
}

// || f + t g || for the threshold split at tau.
double split_value(const std::vector<double>& v, const std::vector<double>& mu, double vmax,
                   double tau, double t, double p1, double p2) {
  double facc = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double ex = std::abs(v[i]) - tau;
    if (ex > 0) facc += std::pow(ex, p1) * mu[i];
  }
  double fnorm = facc > 0 ? std::pow(facc, 1.0 / p1) : 0.0;
  double gnorm;
  if (p2 == kInf) {
    gnorm = std::min(vmax, tau);
  } else {
    double gacc = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      double g = std::min(std::abs(v[i]), tau);
      if (g > 0) gacc += std::pow(g, p2) * mu[i];
    }
    gnorm = gacc > 0 ? std::pow(gacc, 1.0 / p2) : 0.0;
  }
  return fnorm + t * gnorm;
}

double tail_power(const ScalarField& d, double p, double level) {
  const auto& dom = d.domain();
  double acc = 0;
  for (std::uint32_t c = 0; c < dom.ncells(); ++c)
    if (dom.inside(c) && d[c] > level) acc += std::pow(d[c], p) * dom.cell_measure();
  return acc;
}

}  // namespace

Rearrangement rearrange(const ScalarField& w) {
  const auto& dom = w.domain();
  std::vector<double> vals;
  vals.reserve(dom.inside_count());
  for (std::uint32_t c = 0; c < dom.ncells(); ++c)
    if (dom.inside(c)) vals.push_back(std::abs(w[c]));
  std::sort(vals.begin(), vals.end(), std::greater<double>());

  Rearrangement r;
  double meas = dom.cell_measure();
  std::size_t i = 0;
  while (i < vals.size()) {
    std::size_t j = i;
    while (j < vals.size() && vals[j] == vals[i]) ++j;
    r.values.push_back(vals[i]);
    r.measures.push_back(double(j - i) * meas);
    i = j;
  }
  r.cumulative.resize(r.values.size());
  double run = 0;
  for (std::size_t k = 0; k < r.values.size(); ++k) {
    run += r.measures[k];
    r.cumulative[k] = run;
  }
  r.total_measure = double(vals.size()) * meas;
  return r;
}

LorentzSpec LorentzSpec::make(double p, double q) {
  if (!(p > 1) || !std::isfinite(p)) fail_input("LorentzSpec: p must lie in (1, inf)");
  double d = 0.5 * std::min(1.0 / p, 1.0 - 1.0 / p);
  LorentzSpec s;
  s.p = p;
  s.q = q;
  s.theta = 0.5;
  s.p1 = 1.0 / (1.0 / p + d);
  s.p2 = 1.0 / (1.0 / p - d);
  s.validate();
  return s;
}

LorentzSpec LorentzSpec::with_triple(double p, double q, double theta, double p1, double p2) {
  LorentzSpec s;
  s.p = p;
  s.q = q;
  s.theta = theta;
  s.p1 = p1;
  s.p2 = p2;
  s.validate();
  return s;
}

void LorentzSpec::validate() const {
  if (!(p > 1) || !std::isfinite(p)) fail_input("LorentzSpec: p must lie in (1, inf)");
  if (!(q >= 1)) fail_input("LorentzSpec: q must lie in [1, inf]");
  if (!(theta > 0) || !(theta < 1)) fail_input("LorentzSpec: theta must lie in (0, 1)");
  if (!(p1 >= 1) || !std::isfinite(p1) || !(p2 > p1))
    fail_input("LorentzSpec: need 1 <= p1 < p2 <= inf");
  double rhs = (1.0 - theta) / p1 + (p2 == kInf ? 0.0 : theta / p2);
  if (std::abs(1.0 / p - rhs) > 1e-12)
    fail_input("LorentzSpec: interpolation identity 1/p = (1-theta)/p1 + theta/p2 violated");
}

double k_functional(const std::vector<double>& values, const std::vector<double>& measures,
                    double t, double p1, double p2) {
  if (!(t > 0)) fail_input("k_functional: t must be positive");
  if (!(p1 >= 1) || !std::isfinite(p1) || !(p2 > p1))
    fail_input("k_functional: need 1 <= p1 < p2 <= inf");
  if (values.size() != measures.size()) fail_input("k_functional: values/measures size mismatch");
  double vmax = 0;
  for (double v : values) vmax = std::max(vmax, std::abs(v));
  if (vmax == 0) return 0;

  auto phi = [&](double tau) { return split_value(values, measures, vmax, tau, t, p1, p2); };

  // phi need not be convex in tau; endpoints (all-f and all-g splits) are
  // always kept as candidates, so K <= min(||w||_{p1}, t ||w||_{p2}).
  double a = 0, b = vmax;
  double best = std::min(phi(a), phi(b));
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = phi(c), fd = phi(d);
  for (int it = 0; it < 50; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = phi(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = phi(d);
    }
    best = std::min({best, fc, fd});
  }
  return best;
}

double k_functional(const ScalarField& w, double t, double p1, double p2) {
  Rearrangement r = rearrange(w);
  return k_functional(r.values, r.measures, t, p1, p2);
}

namespace {

double lorentz_norm_rearranged(const Rearrangement& r, double p, double q) {
  if (q == kInf) {
    double m = 0;
    for (std::size_t i = 0; i < r.values.size(); ++i)
      if (r.values[i] > 0) m = std::max(m, r.values[i] * std::pow(r.cumulative[i], 1.0 / p));
    return m;
  }
  double acc = 0, prev = 0;
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    double cur = r.cumulative[i];
    if (r.values[i] > 0)
      acc += std::pow(r.values[i], q) * (p / q) * (std::pow(cur, q / p) - std::pow(prev, q / p));
    prev = cur;
  }
  return std::pow(acc, 1.0 / q);
}

double lorentz_norm_kform(const Rearrangement& r, const LorentzSpec& spec) {
  if (r.values.empty() || r.values.front() == 0) return 0;
  double vmax = r.values.front();
  double np1 = lp_pairs(r.values, r.measures, spec.p1);
  double np2 = spec.p2 == kInf ? vmax : lp_pairs(r.values, r.measures, spec.p2);
  double t_star = np1 / np2;  // where the two trivial splits cross

  const int per_decade = 64;
  const double ds = std::log(10.0) / per_decade;
  const double s0 = std::log(t_star);
  std::map<int, double> cache;  // node index -> integrand at s = s0 + j ds
  auto kv = [&](int j) {
    auto it = cache.find(j);
    if (it != cache.end()) return it->second;
    double t = std::exp(s0 + j * ds);
    double k = k_functional(r.values, r.measures, t, spec.p1, spec.p2);
    double val = std::pow(t, -spec.theta) * k;
    cache.emplace(j, val);
    return val;
  };

  int j_lo = -3 * per_decade, j_hi = 3 * per_decade;
  if (spec.q == kInf) {
    // sup_t t^{-theta} K; grow the window while the max sits near an edge.
    for (int round = 0; round < 40; ++round) {
      double m = 0;
      int arg = j_lo;
      for (int j = j_lo; j <= j_hi; ++j) {
        double v = kv(j);
        if (v > m) {
          m = v;
          arg = j;
        }
      }
      bool low_edge = arg <= j_lo + per_decade;
      bool high_edge = arg >= j_hi - per_decade;
      if (!low_edge && !high_edge) return m;
      if (low_edge) j_lo -= per_decade;
      if (high_edge) j_hi += per_decade;
    }
    fail_contract("lorentz_norm: q = inf window failed to localize the supremum");
  }

  for (int round = 0; round < 40; ++round) {
    double quad = 0;
    for (int j = j_lo; j <= j_hi; ++j) {
      double h = std::pow(kv(j), spec.q);
      quad += (j == j_lo || j == j_hi) ? 0.5 * h : h;
    }
    quad *= ds;
    double t_min = std::exp(s0 + j_lo * ds);
    double t_max = std::exp(s0 + j_hi * ds);
    // Below t_min, K <= t * np2 (all-g split); above t_max, K <= np1.
    double tail_low =
        std::pow(np2, spec.q) * std::pow(t_min, (1 - spec.theta) * spec.q) / ((1 - spec.theta) * spec.q);
    double tail_high = std::pow(np1, spec.q) * std::pow(t_max, -spec.theta * spec.q) / (spec.theta * spec.q);
    double total = quad + tail_low + tail_high;
    bool low_ok = tail_low <= 1e-6 * total;
    bool high_ok = tail_high <= 1e-6 * total;
    if (low_ok && high_ok) return std::pow(total, 1.0 / spec.q);
    if (!low_ok) j_lo -= per_decade;
    if (!high_ok) j_hi += per_decade;
  }
  fail_contract("lorentz_norm: K-form window failed to capture the integral");
}

}  // namespace

double lorentz_norm(const ScalarField& w, const LorentzSpec& spec, LorentzForm form) {
  spec.validate();
  Rearrangement r = rearrange(w);
  if (form == LorentzForm::rearrangement) return lorentz_norm_rearranged(r, spec.p, spec.q);
  return lorentz_norm_kform(r, spec);
}

LorentzRigidityResult lorentz_rigidity(const VectorField& u, const LorentzSpec& spec) {
  spec.validate();
  MatrixField du = gradient(u);
  const auto& dom = du.domain();

  MatN rot = procrustes_mean(du);
  ScalarField dev(du.domain_ptr());
  for (std::uint32_t c = 0; c < dom.ncells(); ++c)
    if (dom.inside(c)) dev[c] = (du.get(c) - rot).norm();

  LorentzRigidityResult out;
  out.q = rot;
  out.norm_deviation = lorentz_norm(dev, spec, LorentzForm::rearrangement);
  out.norm_distance = lorentz_norm(dist_field(du), spec, LorentzForm::rearrangement);
  if (out.norm_deviation == 0)
    out.ratio = 0;
  else
    out.ratio = out.norm_distance > 0 ? out.norm_deviation / out.norm_distance : kInf;
  return out;
}

std::vector<EquiProfilePoint> equi_profile(const std::vector<ScalarField>& d, double p,
                                           const std::vector<double>& levels) {
  if (d.empty()) fail_input("equi_profile: empty sequence");
  if (!(p >= 1)) fail_input("equi_profile: p must be >= 1");
  std::vector<EquiProfilePoint> out;
  out.reserve(levels.size());
  for (double T : levels) {
    double sup = 0;
    for (const auto& dk : d) sup = std::max(sup, tail_power(dk, p, T));
    out.push_back({T, sup});
  }
  return out;
}

EquiChainResult equi_chain(const std::vector<VectorField>& us, const std::vector<double>& etas,
                           double p, double eps) {
  if (us.empty()) fail_input("equi_chain: empty sequence");
  if (us.size() != etas.size()) fail_input("equi_chain: one eta per field required");
  if (!(p > 1) || !std::isfinite(p)) fail_input("equi_chain: p must lie in (1, inf)");
  if (!(eps > 0)) fail_input("equi_chain: eps must be positive");
  for (double e : etas)
    if (!(e > 0)) fail_input("equi_chain: etas must be positive");

  std::vector<MatrixField> grads;
  std::vector<ScalarField> dists, ds;
  grads.reserve(us.size());
  for (std::size_t k = 0; k < us.size(); ++k) {
    grads.push_back(gradient(us[k]));
    dists.push_back(dist_field(grads.back()));
    ScalarField dk(dists.back().domain_ptr());
    const auto& dom = dk.domain();
    for (std::uint32_t c = 0; c < dom.ncells(); ++c)
      if (dom.inside(c)) dk[c] = etas[k] * dists.back()[c];
    ds.push_back(std::move(dk));
  }

  EquiChainResult res;
  res.p = p;
  res.q = p + 1;
  res.eps = eps;
  for (const auto& dk : ds) res.m = std::max(res.m, std::pow(lp_norm(dk, p), p));

  // Smallest pooled level with sup_k tail <= eps. The tail is nonincreasing
  // in T, so a binary search over the sorted pooled values suffices; T = 0 is
  // kept as a candidate for already-small sequences.
  std::vector<double> pool{0.0};
  for (const auto& dk : ds) {
    const auto& dom = dk.domain();
    for (std::uint32_t c = 0; c < dom.ncells(); ++c)
      if (dom.inside(c)) pool.push_back(dk[c]);
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  auto sup_tail_at = [&](double T) {
    double sup = 0;
    for (const auto& dk : ds) sup = std::max(sup, tail_power(dk, p, T));
    return sup;
  };
  std::size_t lo = 0, hi = pool.size() - 1;  // tail at the max value is 0
  if (sup_tail_at(pool[0]) <= eps) {
    hi = 0;
  } else {
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      if (sup_tail_at(pool[mid]) <= eps)
        hi = mid;
      else
        lo = mid;
    }
  }
  res.t_eps = pool[hi];
  res.l_eps = res.t_eps / std::pow(eps, 1.0 / (res.q - p));

  for (std::size_t k = 0; k < us.size(); ++k) {
    const auto& dom = grads[k].domain();
    ScalarField f(grads[k].domain_ptr()), g(grads[k].domain_ptr());
    for (std::uint32_t c = 0; c < dom.ncells(); ++c) {
      if (!dom.inside(c)) continue;
      if (ds[k][c] > res.t_eps)
        f[c] = dists[k][c];
      else
        g[c] = dists[k][c];
    }
    RigidityResult rig = rigidity_mixed(us[k], f, g, p, res.q);
    ScalarField zmag(grads[k].domain_ptr());
    for (std::uint32_t c = 0; c < dom.ncells(); ++c)
      if (dom.inside(c)) zmag[c] = etas[k] * (grads[k].get(c) - rig.q).norm();
    double tail = tail_power(zmag, p, 2 * res.l_eps);
    res.z_tails.push_back(tail);
    res.sup_tail = std::max(res.sup_tail, tail);
  }
  return res;
}

}  // namespace rigidlab
