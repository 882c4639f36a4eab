#include "rigidlab/newtonian.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace rigidlab {

namespace {

// FFTW plan creation is not thread-safe; executions on distinct buffers are.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

int next_fast_size(int n) {
  // smallest 5-smooth integer >= n, a sweet spot for FFTW
  for (int k = n;; ++k) {
    int r = k;
    for (int f : {2, 3, 5})
      while (r % f == 0) r /= f;
    if (r == 1) return k;
  }
}

using cplx = std::complex<double>;

}  // namespace

MultiplierPlan::MultiplierPlan(std::shared_ptr<const GridDomain> dom, double pad_factor)
    : dom_(std::move(dom)) {
  const auto& d = *dom_;
  double diam_cells = 0;
  for (int a = 0; a < d.dim; ++a) diam_cells += static_cast<double>(d.shape[a]) * d.shape[a];
  int margin = static_cast<int>(std::ceil(pad_factor * std::sqrt(diam_cells))) + 2;
  for (int a = 0; a < d.dim; ++a)
    pshape_[a] = next_fast_size(std::max(2 * d.shape[a], d.shape[a] + margin));

  std::lock_guard<std::mutex> lock(plan_mutex());
  std::vector<cplx> a(padded_size()), b(padded_size());
  auto* pa = reinterpret_cast<fftw_complex*>(a.data());
  auto* pb = reinterpret_cast<fftw_complex*>(b.data());
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  if (d.dim == 2) {
    fwd_ = fftw_plan_dft_2d(pshape_[0], pshape_[1], pa, pb, FFTW_FORWARD, flags);
    bwd_ = fftw_plan_dft_2d(pshape_[0], pshape_[1], pa, pb, FFTW_BACKWARD, flags);
  } else {
    fwd_ = fftw_plan_dft_3d(pshape_[0], pshape_[1], pshape_[2], pa, pb, FFTW_FORWARD, flags);
    bwd_ = fftw_plan_dft_3d(pshape_[0], pshape_[1], pshape_[2], pa, pb, FFTW_BACKWARD, flags);
  }
}

MultiplierPlan::~MultiplierPlan() {
  std::lock_guard<std::mutex> lock(plan_mutex());
  if (fwd_) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  if (bwd_) fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

std::size_t MultiplierPlan::padded_size() const {
  return static_cast<std::size_t>(pshape_[0]) * pshape_[1] * pshape_[2];
}

std::size_t MultiplierPlan::padded_index(std::uint32_t cell) const {
  auto ijk = dom_->unpack(cell);
  return (static_cast<std::size_t>(ijk[0]) * pshape_[1] + ijk[1]) * pshape_[2] + ijk[2];
}

std::vector<double> MultiplierPlan::pack(const ScalarField& s) const {
  std::vector<double> out(padded_size(), 0.0);
  for (std::uint32_t c = 0; c < dom_->ncells(); ++c)
    if (dom_->inside(c)) out[padded_index(c)] = s[c];
  return out;
}

double MultiplierPlan::frequency(int axis, int m) const {
  int p = pshape_[axis];
  int f = (m <= p / 2) ? m : m - p;
  return 2.0 * M_PI * f / (p * dom_->spacing);
}

void MultiplierPlan::forward(const std::vector<double>& in, std::vector<cplx>& spec) const {
  std::vector<cplx> buf(padded_size());
  for (std::size_t k = 0; k < in.size(); ++k) buf[k] = in[k];
  spec.assign(padded_size(), cplx{});
  fftw_execute_dft(static_cast<fftw_plan>(fwd_), reinterpret_cast<fftw_complex*>(buf.data()),
                   reinterpret_cast<fftw_complex*>(spec.data()));
}

void MultiplierPlan::inverse(const std::vector<cplx>& spec, std::vector<double>& out) const {
  std::vector<cplx> buf(padded_size()), res(padded_size());
  buf = spec;
  fftw_execute_dft(static_cast<fftw_plan>(bwd_), reinterpret_cast<fftw_complex*>(buf.data()),
                   reinterpret_cast<fftw_complex*>(res.data()));
  double scale = 1.0 / static_cast<double>(padded_size());
  out.resize(padded_size());
  for (std::size_t k = 0; k < res.size(); ++k) out[k] = res[k].real() * scale;
}

void MultiplierPlan::apply_riesz_pair(const std::vector<double>& in, int i, int j,
                                      std::vector<double>& out) const {
  std::vector<cplx> spec;
  forward(in, spec);
  const int n = dom_->dim;
  if (i < 0 || i >= n || j < 0 || j >= n) fail_input("riesz pair: component out of range");
  std::size_t idx = 0;
  for (int a = 0; a < pshape_[0]; ++a) {
    double xa = frequency(0, a);
    for (int b = 0; b < pshape_[1]; ++b) {
      double xb = frequency(1, b);
      for (int c = 0; c < pshape_[2]; ++c, ++idx) {
        double xc = n == 3 ? frequency(2, c) : 0.0;
        double xi[3] = {xa, xb, xc};
        double norm2 = xa * xa + xb * xb + xc * xc;
        double m = norm2 > 0 ? xi[i] * xi[j] / norm2 : 0.0;
        spec[idx] *= m;
      }
    }
  }
  inverse(spec, out);
}

ScalarField riesz_second(const ScalarField& psi, int i, int j, const MultiplierPlan& plan) {
  std::vector<double> padded = plan.pack(psi), out;
  plan.apply_riesz_pair(padded, i, j, out);
  const auto& dom = psi.domain();
  ScalarField res(psi.domain_ptr());
  for (std::uint32_t c = 0; c < dom.ncells(); ++c)
    if (dom.inside(c)) res[c] = out[plan.padded_index(c)];
  return res;
}

MatN PotentialGradient::at(std::uint32_t cell) const {
  MatN m(dim_, dim_);
  std::size_t idx = plan_->padded_index(cell);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) m(i, j) = comp_[i * dim_ + j][idx];
  return m;
}

PotentialGradient potential_gradient(const PotentialPatch& src, const MultiplierPlan& plan) {
  const auto& dom = plan.domain();
  const int n = dom.dim;
  const auto& ps = plan.padded_shape();

  // h_ik = 2 f_ik - delta_ik tr f on the source cells, zero elsewhere.
  std::vector<std::vector<cplx>> hspec(n * n);
  {
    std::vector<double> buf(plan.padded_size());
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        std::fill(buf.begin(), buf.end(), 0.0);
        for (std::size_t s = 0; s < src.cells.size(); ++s) {
          const MatN& f = src.values[s];
          double v = 2.0 * f(i, k) - (i == k ? f.trace() : 0.0);
          buf[plan.padded_index(src.cells[s])] = v;
        }
        plan.forward(buf, hspec[i * n + k]);
      }
  }

  // (Du)_ij = sum_k (xi_j xi_k / |xi|^2) h_ik with the sign such that
  // u^(i) = -sum_k D_kN * h_ik; assembled directly in spectrum space.
  std::vector<std::vector<double>> comp(n * n);
  std::vector<cplx> acc(plan.padded_size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      std::fill(acc.begin(), acc.end(), cplx{});
      std::size_t idx = 0;
      for (int a = 0; a < ps[0]; ++a) {
        double xa = plan.frequency(0, a);
        for (int b = 0; b < ps[1]; ++b) {
          double xb = plan.frequency(1, b);
          for (int c = 0; c < ps[2]; ++c, ++idx) {
            double xc = n == 3 ? plan.frequency(2, c) : 0.0;
            double xi[3] = {xa, xb, xc};
            double norm2 = xa * xa + xb * xb + xc * xc;
            if (norm2 <= 0) continue;
            double xj = xi[j];
            for (int k = 0; k < n; ++k)
              acc[idx] += (xj * xi[k] / norm2) * hspec[i * n + k][idx];
          }
        }
      }
      plan.inverse(acc, comp[i * n + j]);
    }
  return PotentialGradient(n, ps, std::move(comp), &plan);
}

PotentialResult potential_field(const MatrixField& f, const std::vector<std::uint32_t>& support,
                                double p, const MultiplierPlan& plan) {
  const auto& dom = f.domain();
  const int n = dom.dim;
  PotentialPatch patch;
  patch.cells = support;
  patch.values.reserve(support.size());
  for (auto c : support) patch.values.push_back(f.get(c));

  PotentialGradient g = potential_gradient(patch, plan);

  // u itself via the -i xi_k / |xi|^2 multiplier on the same sources.
  VectorField u(f.domain_ptr());
  {
    const auto& ps = plan.padded_shape();
    std::vector<double> buf(plan.padded_size());
    std::vector<std::vector<cplx>> hspec(n);
    for (int i = 0; i < n; ++i) {
      std::vector<cplx> acc(plan.padded_size(), cplx{});
      for (int k = 0; k < n; ++k) {
        std::fill(buf.begin(), buf.end(), 0.0);
        for (std::size_t s = 0; s < patch.cells.size(); ++s) {
          const MatN& m = patch.values[s];
          buf[plan.padded_index(patch.cells[s])] = 2.0 * m(i, k) - (i == k ? m.trace() : 0.0);
        }
        std::vector<cplx> spec;
        plan.forward(buf, spec);
        std::size_t idx = 0;
        for (int a = 0; a < ps[0]; ++a) {
          double xa = plan.frequency(0, a);
          for (int b = 0; b < ps[1]; ++b) {
            double xb = plan.frequency(1, b);
            for (int c = 0; c < ps[2]; ++c, ++idx) {
              double xc = n == 3 ? plan.frequency(2, c) : 0.0;
              double xi[3] = {xa, xb, xc};
              double norm2 = xa * xa + xb * xb + xc * xc;
              if (norm2 <= 0) continue;
              acc[idx] += cplx(0.0, -xi[k] / norm2) * spec[idx];
            }
          }
        }
      }
      std::vector<double> ui;
      plan.inverse(acc, ui);
      for (std::uint32_t c = 0; c < dom.ncells(); ++c)
        if (dom.inside(c)) u.comp(c, i) = ui[plan.padded_index(c)];
    }
  }

  MatrixField du(f.domain_ptr());
  for (std::uint32_t c = 0; c < dom.ncells(); ++c)
    if (dom.inside(c)) du.set(c, g.at(c));

  double num = lp_norm_region(du, p, dom.inside_cells());
  double den = lp_norm_region(f, p, support);
  double ratio = den > 0 ? num / den : (num > 0 ? kInf : 0.0);
  return {std::move(u), std::move(du), ratio};
}

DivIdentityReport verify_div_identity(const VectorField& u) {
  const auto& dom = u.domain();
  const int n = dom.dim;
  const double h = dom.spacing;

  auto inside_at = [&](std::array<int, 3> p) {
    return dom.in_bounds(p[0], p[1], p[2]) && dom.inside(dom.index(p[0], p[1], p[2]));
  };

  // Eu by pure central differences at cells with all +-1 neighbors inside.
  MatrixField eu(u.domain_ptr());
  std::vector<std::uint8_t> has_eu(dom.ncells(), 0);
  for (std::uint32_t c = 0; c < dom.ncells(); ++c) {
    if (!dom.inside(c)) continue;
    auto ijk = dom.unpack(c);
    bool ok = true;
    for (int a = 0; a < n && ok; ++a)
      for (int d : {-1, 1}) {
        auto p = ijk;
        p[a] += d;
        if (!inside_at(p)) {
          ok = false;
          break;
        }
      }
    if (!ok) continue;
    MatN g(n, n);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < n; ++a) {
        auto pp = ijk, pm = ijk;
        pp[a] += 1;
        pm[a] -= 1;
        g(i, a) = (u.comp(dom.index(pp[0], pp[1], pp[2]), i) -
                   u.comp(dom.index(pm[0], pm[1], pm[2]), i)) /
                  (2 * h);
      }
    eu.set(c, MatN(0.5 * (g + g.transpose())));
    has_eu[c] = 1;
  }

  DivIdentityReport rep;
  for (std::uint32_t c = 0; c < dom.ncells(); ++c) {
    if (!dom.inside(c)) continue;
    auto ijk = dom.unpack(c);
    bool ok = true;
    for (int a = 0; a < n && ok; ++a)
      for (int d : {-1, 1}) {
        auto p = ijk;
        p[a] += d;
        if (!inside_at(p) || !has_eu[dom.index(p[0], p[1], p[2])]) {
          ok = false;
          break;
        }
      }
    if (!ok || !has_eu[c]) continue;

    double res2 = 0;
    for (int i = 0; i < n; ++i) {
      double lap = 0, div2e = 0, dtr = 0;
      for (int a = 0; a < n; ++a) {
        auto pp = ijk, pm = ijk;
        pp[a] += 1;
        pm[a] -= 1;
        std::uint32_t cp = dom.index(pp[0], pp[1], pp[2]);
        std::uint32_t cm = dom.index(pm[0], pm[1], pm[2]);
        lap += (u.comp(cp, i) - 2 * u.comp(c, i) + u.comp(cm, i)) / (h * h);
        div2e += (eu.comp(cp, i, a) - eu.comp(cm, i, a)) / (2 * h);
      }
      {
        auto pp = ijk, pm = ijk;
        pp[i] += 1;
        pm[i] -= 1;
        std::uint32_t cp = dom.index(pp[0], pp[1], pp[2]);
        std::uint32_t cm = dom.index(pm[0], pm[1], pm[2]);
        double trp = 0, trm = 0;
        for (int a = 0; a < n; ++a) {
          trp += eu.comp(cp, a, a);
          trm += eu.comp(cm, a, a);
        }
        dtr = (trp - trm) / (2 * h);
      }
      double r = lap - 2 * div2e + dtr;
      res2 += r * r;
    }
    rep.max_residual = std::max(rep.max_residual, std::sqrt(res2));
    ++rep.cells_checked;
  }
  return rep;
}

}  // namespace rigidlab
