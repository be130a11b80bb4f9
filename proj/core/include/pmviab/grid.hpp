#pragma once

#include <Eigen/Dense>

#include <memory>
#include <utility>
#include <vector>

namespace pmv {

class GridDomain;
using GridPtr = std::shared_ptr<const GridDomain>;

/// Metric selector for inner products and norms on a grid.
///
/// L2 carries the h^2 quadrature weight. Hminus1 is <A^{-1} phi, psi>_{L2}
/// and H10 is <A phi, psi>_{L2}, with A the (positive) 5-point Dirichlet
/// Laplacian, so the discrete norm chain mirrors the continuum one.
enum class Metric { L2, Hminus1, H10 };

/// A grid function on the interior nodes of a GridDomain.
///
/// values[ix + n*iy] is the sample at ((ix+1)h, (iy+1)h), ix,iy in [0,n).
struct Field {
  GridPtr domain;
  Eigen::VectorXd values;

  static Field zero(const GridPtr& grid);

  int size() const { return static_cast<int>(values.size()); }
};

/// Uniform interior grid on the unit square with homogeneous Dirichlet
/// boundary, its 5-point Laplacian A = -Delta_h, and the analytic sine
/// eigenbasis used for A^{-1}, A^{+-1/2} and all spectral bookkeeping.
///
/// Immutable after construction; safe to share read-only across threads.
class GridDomain : public std::enable_shared_from_this<GridDomain> {
 public:
  /// Builds the grid with n interior points per dimension (n >= 2).
  /// Throws std::invalid_argument for degenerate sizes.
  static GridPtr build(int n_per_dim);

  int n() const { return n_; }
  int size() const { return n_ * n_; }
  double spacing() const { return h_; }

  /// Interior coordinate of index i in [0,n): (i+1)*h.
  double coord(int i) const { return h_ * (i + 1); }

  /// Eigenvalue of mode (j,k), 1-based, of A: (4/h^2)(sin^2(j pi h/2)+sin^2(k pi h/2)).
  double eigenvalue(int j, int k) const { return lambda_[mode_index(j, k)]; }
  double lambda_min() const { return lambda_[sorted_modes_[0]]; }
  double lambda_max() const { return lambda_max_; }

  /// Flat eigenvalue vector; entry p corresponds to mode p = (j-1) + n*(k-1).
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }

  /// L2-normalized eigenfield e_{jk}(x,y) = 2 sin(j pi x) sin(k pi y).
  Field eigenfield(int j, int k) const;

  /// Flat mode indices sorted by increasing eigenvalue (ties by (j,k)).
  const std::vector<int>& modes_by_eigenvalue() const { return sorted_modes_; }
  std::pair<int, int> mode_of(int p) const { return {p % n_ + 1, p / n_ + 1}; }
  int mode_index(int j, int k) const { return (j - 1) + n_ * (k - 1); }

  /// A phi via the 5-point stencil with zero Dirichlet extension.
  Field laplacian_apply(const Field& phi) const;

  /// A^{-1} phi via the sine eigenbasis transform.
  Field laplacian_solve(const Field& phi) const;

  /// Applies f(A) for a scalar spectral multiplier f(lambda).
  template <typename F>
  Field apply_spectral(const Field& phi, F&& f) const {
    Eigen::MatrixXd coeff = to_modes(phi);
    for (int k = 0; k < n_; ++k)
      for (int j = 0; j < n_; ++j)
        coeff(j, k) *= f(lambda_[j + n_ * k]);
    return from_modes(coeff);
  }

  /// Coefficients c_{jk} = <phi, e_{jk}>_{L2} as an n x n matrix (row j-1, col k-1).
  Eigen::MatrixXd to_modes(const Field& phi) const;
  Field from_modes(const Eigen::MatrixXd& coeff) const;

  double inner(const Field& a, const Field& b, Metric metric) const;
  double norm(const Field& a, Metric metric) const;

  /// Dense L2-orthonormal eigenvector matrix, column p = e_p on the grid.
  const Eigen::MatrixXd& eigenvector_matrix() const { return phi_; }

  /// Dense A^p for p in {-1, -1/2, 1/2, 1}; assembled from the eigenbasis.
  Eigen::MatrixXd dense_power(double p) const;

 private:
  explicit GridDomain(int n_per_dim);

  int n_;
  double h_;
  Eigen::VectorXd lambda_;
  double lambda_max_;
  Eigen::MatrixXd sine_;  // sine_(j, i) = sqrt(2) sin((j+1) pi (i+1) h)
  Eigen::MatrixXd phi_;
  std::vector<int> sorted_modes_;
};

/// Builds the discrete Dirichlet domain; see GridDomain::build.
GridPtr build_grid(int n_per_dim);

}  // namespace pmv
