#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pmviab/grid.hpp"

namespace pmv {

/// A control value: a point of the finite control set U.
struct Control {
  std::vector<double> v;

  double at(std::size_t i) const { return i < v.size() ? v[i] : 0.0; }
};

/// Finite control set; every infimum over controls in this artifact is a
/// minimum over these points.
struct ControlSet {
  std::vector<Control> points;

  std::size_t size() const { return points.size(); }
  const Control& operator[](std::size_t i) const { return points.at(i); }
};

/// Scalar nonlinearity beta with certified Lipschitz constant `lip` and
/// strong-monotonicity constant `mono`:
///   |beta(r)-beta(s)| <= lip |r-s|,
///   (beta(r)-beta(s))(r-s) >= mono (r-s)^2.
class Nonlinearity {
 public:
  double operator()(double r) const { return fn_(r); }

  /// Pointwise application to a grid function.
  Field apply(const Field& phi) const;

  const std::string& family() const { return family_; }
  double lip() const { return lip_; }
  double mono() const { return mono_; }
  bool may_be_zero() const { return may_be_zero_; }
  bool is_zero() const { return family_ == "zero"; }

  /// Unchecked constructor for validator probes; make_beta is the validated
  /// entry point.
  static Nonlinearity probe(std::string name, std::function<double(double)> fn,
                            double declared_lip, double declared_mono);

 private:
  friend Nonlinearity make_beta(const std::string&, const std::map<std::string, double>&, bool);

  std::string family_;
  std::function<double(double)> fn_;
  double lip_ = 0.0;
  double mono_ = 0.0;
  bool may_be_zero_ = false;
};

/// Families:
///   "linear"           beta(r) = a r, a > 0
///   "sin_perturbed"    beta(r) = a r + b sin r, a - |b| > 0
///   "saturated_power"  beta(r) = alpha r + (L-alpha)/(m R^{m-1}) sgn(r) min(|r|,R)^m,
///                      secant slopes certified in [alpha, L] on the clamp range
///   "zero"             beta = 0, legal only with may_be_zero (second component)
/// Rejects families whose strong monotonicity is not positive unless
/// may_be_zero is set.
Nonlinearity make_beta(const std::string& family, const std::map<std::string, double>& params,
                       bool may_be_zero = false);

struct AssumptionCertificate {
  double lip_est = 0.0;
  double mono_est = 0.0;
  bool pass = false;
};

/// Empirical secant-slope sweep over `budget` sampled pairs (budget >= 1e4):
/// pass iff mono_est >= declared mono - 1e-9 and lip_est <= declared lip + 1e-9.
AssumptionCertificate validate_assumptions(const Nonlinearity& beta, int budget,
                                           std::uint64_t seed = 7u, double range = 8.0);

/// Second argument of a coupling map: a field in the coupled-PDE mode or a
/// scalar in the reduced mode where the second component lives in R.
struct YArg {
  bool is_scalar = true;
  double scalar = 0.0;
  const Field* field = nullptr;

  static YArg of(double s) { return YArg{true, s, nullptr}; }
  static YArg of(const Field& f) { return YArg{false, 0.0, &f}; }
};

/// Mode-indexed field coefficient: amp * e_{jk}.
struct ModeAmp {
  int j = 1;
  int k = 1;
  double amp = 0.0;
};

/// Coupling map f(x, y, u) with certified Lipschitz constant in the product
/// H^{-1} metric and finite sup_u ||f(0,0,u)||.
///
/// Families:
///   "zero"     f = 0
///   "decay"    f = -c y (scalar-valued in reduced mode, field-valued otherwise)
///   "affine"   f = ax x + ay y + u[0] gu + g0, gu/g0 eigenmode fields
///   "damping"  f = -u[0] x (controlled damping; ignores y)
class CouplingMap {
 public:
  /// Field-valued evaluation (first-component maps, or second in field mode).
  Field eval(const Field& x, const YArg& y, const Control& u) const;

  /// Scalar-valued evaluation for the reduced second component.
  double eval_scalar(const Field& x, double y, const Control& u) const;

  const std::string& family() const { return family_; }
  double lip() const { return lip_; }
  double sup0() const { return sup0_; }
  bool state_independent() const { return family_ == "zero" || (family_ == "affine" && ax_ == 0.0 && ay_ == 0.0); }

  /// True when the map is scalar-valued given a scalar second component.
  bool scalar_valued(bool scalar_mode) const {
    return scalar_mode && (family_ == "zero" || family_ == "decay");
  }

 private:
  friend CouplingMap make_coupling(const std::string&, const std::map<std::string, double>&,
                                   const ControlSet&, const GridPtr&);

  std::string family_;
  GridPtr grid_;  // output-space grid
  double lip_ = 0.0;
  double sup0_ = 0.0;
  double c_ = 0.0;
  double ax_ = 0.0;
  double ay_ = 0.0;
  Field g0_;  // empty when unused
  Field gu_;
};

/// Builds and certifies a coupling map; `grid` is the output-space grid used
/// to materialize eigenmode forcings and to certify sup0. Rejects families
/// whose L2 restriction is unbounded under refinement (Ass. (iv) probe
/// family "laplacian_probe").
CouplingMap make_coupling(const std::string& family, const std::map<std::string, double>& params,
                          const ControlSet& controls, const GridPtr& grid);

/// Empirical Lipschitz ratio max ||f(x,y,u)-f(x',y',u)|| / (||x-x'||+||y-y'||)
/// over seeded random probes; certifies lip from below.
double certify_coupling_lipschitz(const CouplingMap& f, const GridPtr& grid, bool scalar_mode,
                                  const ControlSet& controls, int n_probes, std::uint64_t seed);

}  // namespace pmv
