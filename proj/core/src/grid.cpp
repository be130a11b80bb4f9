#include "pmviab/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pmv {

namespace {
constexpr double kPi = std::numbers::pi;
}

Field Field::zero(const GridPtr& grid) {
  return Field{grid, Eigen::VectorXd::Zero(grid->size())};
}

GridDomain::GridDomain(int n_per_dim) : n_(n_per_dim), h_(1.0 / (n_per_dim + 1)) {
  const int n = n_;
  lambda_.resize(n * n);
  for (int k = 1; k <= n; ++k) {
    for (int j = 1; j <= n; ++j) {
      const double sj = std::sin(j * kPi * h_ / 2.0);
      const double sk = std::sin(k * kPi * h_ / 2.0);
      lambda_[(j - 1) + n * (k - 1)] = 4.0 / (h_ * h_) * (sj * sj + sk * sk);
    }
  }
  lambda_max_ = lambda_.maxCoeff();

  sine_.resize(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      sine_(j, i) = std::sqrt(2.0) * std::sin((j + 1) * kPi * (i + 1) * h_);

  // Column p of phi_ = e_{jk} on the grid; tensor product of the 1-D basis.
  phi_.resize(n * n, n * n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      const int p = j + n * k;
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
          phi_(ix + n * iy, p) = sine_(j, ix) * sine_(k, iy);
    }

  sorted_modes_.resize(n * n);
  for (int p = 0; p < n * n; ++p) sorted_modes_[p] = p;
  std::sort(sorted_modes_.begin(), sorted_modes_.end(), [&](int a, int b) {
    if (lambda_[a] != lambda_[b]) return lambda_[a] < lambda_[b];
    return mode_of(a) < mode_of(b);
  });
}

GridPtr GridDomain::build(int n_per_dim) {
  if (n_per_dim < 2)
    throw std::invalid_argument("GridDomain: n_per_dim must be >= 2, got " +
                                std::to_string(n_per_dim));
  return GridPtr(new GridDomain(n_per_dim));
}

GridPtr build_grid(int n_per_dim) { return GridDomain::build(n_per_dim); }

Field GridDomain::eigenfield(int j, int k) const {
  Field out{shared_from_this(), phi_.col(mode_index(j, k))};
  return out;
}

Field GridDomain::laplacian_apply(const Field& phi) const {
  const int n = n_;
  if (phi.size() != n * n) throw std::invalid_argument("laplacian_apply: size mismatch");
  Field out{phi.domain, Eigen::VectorXd(n * n)};
  const double inv_h2 = 1.0 / (h_ * h_);
  const auto& v = phi.values;
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const int p = ix + n * iy;
      double acc = 4.0 * v[p];
      if (ix > 0) acc -= v[p - 1];
      if (ix + 1 < n) acc -= v[p + 1];
      if (iy > 0) acc -= v[p - n];
      if (iy + 1 < n) acc -= v[p + n];
      out.values[p] = acc * inv_h2;
    }
  }
  return out;
}

Field GridDomain::laplacian_solve(const Field& phi) const {
  return apply_spectral(phi, [](double lam) { return 1.0 / lam; });
}

Eigen::MatrixXd GridDomain::to_modes(const Field& phi) const {
  if (phi.size() != n_ * n_) throw std::invalid_argument("to_modes: size mismatch");
  Eigen::Map<const Eigen::MatrixXd> f(phi.values.data(), n_, n_);
  return (h_ * h_) * (sine_ * f * sine_.transpose());
}

Field GridDomain::from_modes(const Eigen::MatrixXd& coeff) const {
  Eigen::MatrixXd f = sine_.transpose() * coeff * sine_;
  Field out{shared_from_this(), Eigen::Map<Eigen::VectorXd>(f.data(), n_ * n_)};
  return out;
}

double GridDomain::inner(const Field& a, const Field& b, Metric metric) const {
  if (a.size() != n_ * n_ || b.size() != n_ * n_)
    throw std::invalid_argument("inner: field/grid size mismatch");
  if (a.domain.get() != this || b.domain.get() != this)
    throw std::invalid_argument("inner: fields belong to a different grid");
  switch (metric) {
    case Metric::L2:
      return h_ * h_ * a.values.dot(b.values);
    case Metric::Hminus1: {
      const Eigen::MatrixXd ca = to_modes(a);
      const Eigen::MatrixXd cb = to_modes(b);
      double acc = 0.0;
      for (int k = 0; k < n_; ++k)
        for (int j = 0; j < n_; ++j) acc += ca(j, k) * cb(j, k) / lambda_[j + n_ * k];
      return acc;
    }
    case Metric::H10: {
      const Eigen::MatrixXd ca = to_modes(a);
      const Eigen::MatrixXd cb = to_modes(b);
      double acc = 0.0;
      for (int k = 0; k < n_; ++k)
        for (int j = 0; j < n_; ++j) acc += ca(j, k) * cb(j, k) * lambda_[j + n_ * k];
      return acc;
    }
  }
  throw std::logic_error("inner: unknown metric");
}

double GridDomain::norm(const Field& a, Metric metric) const {
  return std::sqrt(std::max(0.0, inner(a, a, metric)));
}

Eigen::MatrixXd GridDomain::dense_power(double p) const {
  Eigen::VectorXd scale(n_ * n_);
  for (int i = 0; i < n_ * n_; ++i) scale[i] = std::pow(lambda_[i], p);
  // A^p = Phi diag(lambda^p) h^2 Phi^T (Phi is L2-orthonormal).
  return phi_ * scale.asDiagonal() * (h_ * h_ * phi_.transpose());
}

}  // namespace pmv
