#pragma once

// Cell-centered fields over a GridDomain. Values are stored for the full
// bounding box (simpler indexing); only mask-true cells are meaningful and
// only those are serialized or enter norms.

#include "rigidlab/grid.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

namespace rigidlab {

constexpr double kInf = std::numeric_limits<double>::infinity();

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(std::shared_ptr<const GridDomain> dom, double fill = 0.0)
      : dom_(std::move(dom)), v_(dom_->ncells(), fill) {}

  double operator[](std::uint32_t c) const { return v_[c]; }
  double& operator[](std::uint32_t c) { return v_[c]; }
  const GridDomain& domain() const { return *dom_; }
  const std::shared_ptr<const GridDomain>& domain_ptr() const { return dom_; }
  const std::vector<double>& raw() const { return v_; }
  std::vector<double>& raw() { return v_; }

 private:
  std::shared_ptr<const GridDomain> dom_;
  std::vector<double> v_;
};

class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(std::shared_ptr<const GridDomain> dom)
      : dom_(std::move(dom)), v_(dom_->ncells() * dom_->dim, 0.0) {}

  VecN get(std::uint32_t c) const {
    int n = dom_->dim;
    VecN out(n);
    for (int a = 0; a < n; ++a) out[a] = v_[static_cast<std::size_t>(c) * n + a];
    return out;
  }
  void set(std::uint32_t c, const VecN& x) {
    int n = dom_->dim;
    for (int a = 0; a < n; ++a) v_[static_cast<std::size_t>(c) * n + a] = x[a];
  }
  double comp(std::uint32_t c, int a) const {
    return v_[static_cast<std::size_t>(c) * dom_->dim + a];
  }
  double& comp(std::uint32_t c, int a) { return v_[static_cast<std::size_t>(c) * dom_->dim + a]; }
  const GridDomain& domain() const { return *dom_; }
  const std::shared_ptr<const GridDomain>& domain_ptr() const { return dom_; }
  const std::vector<double>& raw() const { return v_; }
  std::vector<double>& raw() { return v_; }

 private:
  std::shared_ptr<const GridDomain> dom_;
  std::vector<double> v_;
};

class MatrixField {
 public:
  MatrixField() = default;
  explicit MatrixField(std::shared_ptr<const GridDomain> dom)
      : dom_(std::move(dom)), v_(dom_->ncells() * dom_->dim * dom_->dim, 0.0) {}

  MatN get(std::uint32_t c) const {
    int n = dom_->dim;
    MatN out(n, n);
    const double* p = v_.data() + static_cast<std::size_t>(c) * n * n;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(i, j) = p[i * n + j];
    return out;
  }
  void set(std::uint32_t c, const MatN& m) {
    int n = dom_->dim;
    double* p = v_.data() + static_cast<std::size_t>(c) * n * n;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) p[i * n + j] = m(i, j);
  }
  double comp(std::uint32_t c, int i, int j) const {
    int n = dom_->dim;
    return v_[static_cast<std::size_t>(c) * n * n + i * n + j];
  }
  double& comp(std::uint32_t c, int i, int j) {
    int n = dom_->dim;
    return v_[static_cast<std::size_t>(c) * n * n + i * n + j];
  }
  const GridDomain& domain() const { return *dom_; }
  const std::shared_ptr<const GridDomain>& domain_ptr() const { return dom_; }
  const std::vector<double>& raw() const { return v_; }
  std::vector<double>& raw() { return v_; }

 private:
  std::shared_ptr<const GridDomain> dom_;
  std::vector<double> v_;
};

// Strictly increasing exponents, all > 1 (the pipelines also need the last
// one finite; infinity is rejected here).
struct ExponentList {
  std::vector<double> p;

  explicit ExponentList(std::vector<double> exps) : p(std::move(exps)) {
    if (p.empty()) fail_input("exponent list: empty");
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!(p[i] > 1.0) || !std::isfinite(p[i])) fail_input("exponent list: entries must be finite and > 1");
      if (i > 0 && !(p[i] > p[i - 1])) fail_input("exponent list: must be strictly increasing");
    }
  }
  std::size_t size() const { return p.size(); }
  double operator[](std::size_t i) const { return p[i]; }
};

}  // namespace rigidlab
