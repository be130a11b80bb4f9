#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "pmviab/grid.hpp"

namespace pmv {

/// Named stream function on the closed unit square. The drift field is its
/// rotated gradient b = (d psi / dy, -d psi / dx), which is divergence free
/// and tangent to the boundary whenever psi vanishes there.
///
/// Families:
///   "zero"      psi = 0
///   "sine"      psi = amplitude * sin(mode_x pi x) * sin(mode_y pi y)
///   "bilinear"  psi = amplitude * x * y   (does NOT vanish on the boundary;
///               exists as a rejection probe for build_drift)
struct StreamSpec {
  std::string name = "zero";
  double amplitude = 1.0;
  int mode_x = 1;
  int mode_y = 1;

  double psi(double x, double y) const;
  double bx(double x, double y) const;  //  d psi / dy
  double by(double x, double y) const;  // -d psi / dx
};

/// Divergence-free coefficient field sampled on the closed grid
/// (n+2)x(n+2) including boundary nodes; entry (i,j) sits at (i*h, j*h).
class DriftField {
 public:
  DriftField(GridPtr grid, Eigen::MatrixXd bx, Eigen::MatrixXd by);

  const GridPtr& grid() const { return grid_; }
  const Eigen::MatrixXd& bx() const { return bx_; }
  const Eigen::MatrixXd& by() const { return by_; }

  bool is_zero() const;

  /// Max norm of the centered-difference divergence over interior nodes.
  double max_abs_divergence() const;

  /// Max |normal component| over boundary nodes (0 for admissible fields).
  double max_boundary_normal() const;

 private:
  GridPtr grid_;
  Eigen::MatrixXd bx_, by_;
};

/// Samples the stream function's analytic rotated gradient on the grid.
/// Throws std::invalid_argument if psi does not vanish on the boundary.
DriftField build_drift(const GridPtr& grid, const StreamSpec& stream);

/// The operator B = b . grad (-Delta)^{-1}, antisymmetrized in the discrete
/// H^{-1} metric, together with a cached real spectral factorization of its
/// exponential group e^{sB}.
///
/// The raw discretization B0 = D_b A^{-1} (centered differences) is only
/// skew up to O(h^2); B = (B0 - B0#)/2 with # the H^{-1} adjoint is exactly
/// skew, so e^{sB} is an exact discrete H^{-1} isometry.
///
/// Immutable after build; apply() is pure and safe to call concurrently.
class DriftGroup {
 public:
  DriftGroup() = default;  // inert until built

  static DriftGroup build(const GridPtr& grid, const DriftField& b);

  /// Identity group (b = 0); apply returns its argument bitwise.
  static DriftGroup identity(const GridPtr& grid);

  const GridPtr& grid() const { return grid_; }
  bool is_identity() const { return identity_; }

  /// e^{sB} phi.
  Field apply(double s, const Field& phi) const;

  /// Euclidean transpose of e^{sB} applied to v (norm estimation helper).
  Eigen::VectorXd apply_transpose(double s, const Eigen::VectorXd& v) const;

  /// Dense generator B (zero matrix for the identity group).
  const Eigen::MatrixXd& generator() const { return b_; }

  /// Dense e^{sB}; intended for operator-norm checks at desk scale.
  Eigen::MatrixXd dense_exp(double s) const;

  /// Operator norm of B as a map H^{-1} -> L2 (power iteration on B A^{1/2}).
  double op_norm() const { return op_norm_; }

 private:
  GridPtr grid_;
  bool identity_ = false;
  Eigen::MatrixXd b_;
  // e^{sB} = fwd_ * G(s) * bwd_ where G(s) rotates coordinate pairs
  // (2p, 2p+1) by angle s*theta_[p] and fixes the kernel block.
  Eigen::MatrixXd fwd_, bwd_;
  Eigen::VectorXd theta_;  // one angle per pair
  int n_pairs_ = 0;
  double op_norm_ = 0.0;

  Eigen::VectorXd rotate_coords(double s, Eigen::VectorXd c) const;
};

class BrownianPath;

/// Monte Carlo estimate of E || Gamma(t,s) zeta - zeta ||^2_{L2} with
/// W(s)-W(t) ~ N(0, gap); requires n_samples >= 1000.
double gamma_l2_defect_mc(const DriftGroup& group, const Field& zeta, double gap,
                          int n_samples, std::uint64_t seed);

}  // namespace pmv
