#pragma once

// Lorentz spaces: decreasing rearrangements, K-functionals between an L^{p1}
// and an L^{p2} piece, the L^{p,q} norm in both the K-functional and the
// rearrangement form, rigidity measured in those norms, and equiintegrability
// diagnostics for sequences.

#include "rigidlab/calculus.hpp"
#include "rigidlab/rotations.hpp"

namespace rigidlab {

// Sorted value/measure pairs of |w| with exact ties merged. Piecewise
// constant representation of the decreasing rearrangement w*; a zero level
// is kept so the measures add up to |Omega|.
struct Rearrangement {
  std::vector<double> values;      // strictly decreasing
  std::vector<double> measures;    // per value, cells * h^n
  std::vector<double> cumulative;  // prefix sums of measures
  double total_measure = 0.0;      // |Omega|
};

Rearrangement rearrange(const ScalarField& w);

// Exponent bundle for L^{p,q}. The interpolation triple (theta, p1, p2) obeys
// 1/p = (1-theta)/p1 + theta/p2; make() picks the symmetric harmonic split
// theta = 1/2, 1/p1 = 1/p + d, 1/p2 = 1/p - d with d = min(1/p, 1-1/p)/2.
struct LorentzSpec {
  double p = 2.0;
  double q = 2.0;  // kInf for q = infinity
  double theta = 0.5;
  double p1 = 1.0;
  double p2 = kInf;

  static LorentzSpec make(double p, double q);
  static LorentzSpec with_triple(double p, double q, double theta, double p1, double p2);
  void validate() const;
};

// K(w,t) = inf { ||f||_{p1} + t ||g||_{p2} : w = f + g }. Minimized over the
// truncation family f = sign(w)(|w|-tau)_+, g = sign(w) min(|w|,tau) by
// golden-section search in tau with the interval endpoints as candidates.
// For p2 = infinity the family contains the exact optimizer.
double k_functional(const ScalarField& w, double t, double p1, double p2);

// Same search on explicit value/measure pairs (rearrangement order not
// required); this is the kernel the field overload reduces to.
double k_functional(const std::vector<double>& values, const std::vector<double>& measures,
                    double t, double p1, double p2);

enum class LorentzForm { k_functional, rearrangement };

// Rearrangement form: (int_0^inf (t^{1/p} w*(t))^q dt/t)^{1/q}, evaluated
// exactly on the piecewise constant w*. K form: (int (t^{-theta}K(w,t))^q
// dt/t)^{1/q} by log-grid trapezoid with analytic asymptote tails, window
// expanded until the tail contribution is below 1e-6 relative.
double lorentz_norm(const ScalarField& w, const LorentzSpec& spec, LorentzForm form);

struct LorentzRigidityResult {
  MatN q;                      // nearest rotation to the mean of Du
  double norm_deviation = 0;   // || |Du - Q| ||_{p,q}
  double norm_distance = 0;    // || dist(Du, SO(n)) ||_{p,q}
  double ratio = 0;            // deviation / distance, 0 when both vanish
};

LorentzRigidityResult lorentz_rigidity(const VectorField& u, const LorentzSpec& spec);

struct EquiProfilePoint {
  double level = 0;  // threshold T
  double tail = 0;   // sup over k of int_{d_k > T} d_k^p
};

std::vector<EquiProfilePoint> equi_profile(const std::vector<ScalarField>& d, double p,
                                           const std::vector<double>& levels);

// One pass of the equiintegrability transfer: from d_k = eta_k dist(Du_k,
// SO(n)) pick the smallest pooled level T_eps with sup_k tail <= eps, set
// q = p + 1 and L_eps = T_eps / eps^{1/(q-p)}, decompose each u_k with the
// majorant split at T_eps, and measure the tail of z_k = eta_k (Du_k - Q_k)
// at level 2 L_eps.
struct EquiChainResult {
  double p = 0;
  double q = 0;  // p + 1
  double eps = 0;
  double t_eps = 0;
  double l_eps = 0;
  double m = 0;  // sup_k ||d_k||_p^p
  std::vector<double> z_tails;
  double sup_tail = 0;
};

EquiChainResult equi_chain(const std::vector<VectorField>& us, const std::vector<double>& etas,
                           double p, double eps);

}  // namespace rigidlab
