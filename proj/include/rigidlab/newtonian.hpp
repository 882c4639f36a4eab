#pragma once

// Newtonian-potential calculus on a padded torus. One MultiplierPlan per
// domain owns the FFT plans; sources supported in the domain box are
// zero-padded far enough that the periodized kernel acts like the free-space
// one. Symbols: riesz_second applies xi_i xi_j / |xi|^2 (the local delta/n
// term is part of that symbol, not added separately); the potential gradient
// assembles D(u_f) for u_f^(i) = -sum_j D_jN * ((2f_ij - delta_ij tr f) chi).

#include "rigidlab/calculus.hpp"

#include <complex>
#include <memory>
#include <vector>

namespace rigidlab {

class MultiplierPlan {
 public:
  // pad_factor scales the margin (1 = margin >= bounding diameter, and never
  // below 2x the shape per axis); tests use 2 for the padding-sufficiency
  // property.
  explicit MultiplierPlan(std::shared_ptr<const GridDomain> dom, double pad_factor = 1.0);
  ~MultiplierPlan();
  MultiplierPlan(const MultiplierPlan&) = delete;
  MultiplierPlan& operator=(const MultiplierPlan&) = delete;

  const GridDomain& domain() const { return *dom_; }
  const std::array<int, 3>& padded_shape() const { return pshape_; }
  std::size_t padded_size() const;

  // Domain cell (by its grid coordinates) sits at the low corner of the
  // padded box; this maps a grid cell id to its padded flat index.
  std::size_t padded_index(std::uint32_t cell) const;

  std::vector<double> pack(const ScalarField& s) const;  // zero-fill + copy mask cells

  // out = Re IFFT( m(xi) FFT(in) ), m = xi_i xi_j / |xi|^2, m(0) = 0.
  void apply_riesz_pair(const std::vector<double>& in, int i, int j,
                        std::vector<double>& out) const;

  // Forward transform of a padded real array (for callers combining several
  // symbol applications on one spectrum).
  void forward(const std::vector<double>& in, std::vector<std::complex<double>>& spec) const;
  void inverse(const std::vector<std::complex<double>>& spec, std::vector<double>& out) const;

  double frequency(int axis, int m) const;  // 2 pi f / (P h), signed

 private:
  std::shared_ptr<const GridDomain> dom_;
  std::array<int, 3> pshape_{1, 1, 1};
  void* fwd_ = nullptr;  // fftw_plan, kept opaque here
  void* bwd_ = nullptr;
};

// Spec operation: the symbol applied on a mask field, restricted back to it.
ScalarField riesz_second(const ScalarField& psi, int i, int j, const MultiplierPlan& plan);

// Matrix sources on explicit grid cells (which may include extension collars
// outside the mask).
struct PotentialPatch {
  std::vector<std::uint32_t> cells;
  std::vector<MatN> values;
};

// D(u_f) on the padded grid, evaluable at any grid cell.
class PotentialGradient {
 public:
  PotentialGradient(int dim, std::array<int, 3> pshape, std::vector<std::vector<double>> comp,
                    const MultiplierPlan* plan)
      : dim_(dim), pshape_(pshape), comp_(std::move(comp)), plan_(plan) {}
  MatN at(std::uint32_t cell) const;

 private:
  int dim_;
  std::array<int, 3> pshape_;
  std::vector<std::vector<double>> comp_;  // dim*dim padded arrays, row-major (i,j)
  const MultiplierPlan* plan_;
};

PotentialGradient potential_gradient(const PotentialPatch& src, const MultiplierPlan& plan);

struct PotentialResult {
  VectorField u;    // u_f restricted to the mask
  MatrixField du;   // D u_f restricted to the mask
  double ratio_p;   // ||Du_f||_p / ||f||_p over the support
};

// Support given as mask cells; f is taken as (2 f - tr f Id) chi_support.
PotentialResult potential_field(const MatrixField& f, const std::vector<std::uint32_t>& support,
                                double p, const MultiplierPlan& plan);

struct DivIdentityReport {
  double max_residual = 0.0;  // sup over checked cells of |Lap u - 2 div Eu + D tr Eu|
  std::size_t cells_checked = 0;
};

// Discrete check of the vector identity Lap u = 2 div Eu - D(tr Eu) at cells
// whose full second-order stencil stays inside the mask.
DivIdentityReport verify_div_identity(const VectorField& u);

}  // namespace rigidlab
