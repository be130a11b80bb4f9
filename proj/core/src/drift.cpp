#include "pmviab/drift.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace pmv {

namespace {
constexpr double kPi = std::numbers::pi;
}

double StreamSpec::psi(double x, double y) const {
  if (name == "zero") return 0.0;
  if (name == "sine") return amplitude * std::sin(mode_x * kPi * x) * std::sin(mode_y * kPi * y);
  if (name == "bilinear") return amplitude * x * y;
  throw std::invalid_argument("StreamSpec: unknown family '" + name + "'");
}

double StreamSpec::bx(double x, double y) const {
  if (name == "zero") return 0.0;
  if (name == "sine")
    return amplitude * mode_y * kPi * std::sin(mode_x * kPi * x) * std::cos(mode_y * kPi * y);
  if (name == "bilinear") return amplitude * x;
  throw std::invalid_argument("StreamSpec: unknown family '" + name + "'");
}

double StreamSpec::by(double x, double y) const {
  if (name == "zero") return 0.0;
  if (name == "sine")
    return -amplitude * mode_x * kPi * std::cos(mode_x * kPi * x) * std::sin(mode_y * kPi * y);
  if (name == "bilinear") return -amplitude * y;
  throw std::invalid_argument("StreamSpec: unknown family '" + name + "'");
}

DriftField::DriftField(GridPtr grid, Eigen::MatrixXd bx, Eigen::MatrixXd by)
    : grid_(std::move(grid)), bx_(std::move(bx)), by_(std::move(by)) {
  const int m = grid_->n() + 2;
  if (bx_.rows() != m || bx_.cols() != m || by_.rows() != m || by_.cols() != m)
    throw std::invalid_argument("DriftField: samples must cover the closed grid");
}

bool DriftField::is_zero() const {
  return bx_.cwiseAbs().maxCoeff() == 0.0 && by_.cwiseAbs().maxCoeff() == 0.0;
}

double DriftField::max_abs_divergence() const {
  const int n = grid_->n();
  const double h = grid_->spacing();
  double worst = 0.0;
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i) {
      const double div = (bx_(i + 1, j) - bx_(i - 1, j) + by_(i, j + 1) - by_(i, j - 1)) / (2 * h);
      worst = std::max(worst, std::abs(div));
    }
  return worst;
}

double DriftField::max_boundary_normal() const {
  const int m = grid_->n() + 2;
  double worst = 0.0;
  for (int i = 0; i < m; ++i) {
    worst = std::max(worst, std::abs(bx_(0, i)));      // x = 0 face, normal = -e_x
    worst = std::max(worst, std::abs(bx_(m - 1, i)));  // x = 1 face
    worst = std::max(worst, std::abs(by_(i, 0)));      // y = 0 face
    worst = std::max(worst, std::abs(by_(i, m - 1)));  // y = 1 face
  }
  return worst;
}

DriftField build_drift(const GridPtr& grid, const StreamSpec& stream) {
  const int m = grid->n() + 2;
  const double h = grid->spacing();

  double boundary_psi = 0.0;
  for (int i = 0; i < m; ++i) {
    const double c = i * h;
    boundary_psi = std::max({boundary_psi, std::abs(stream.psi(c, 0.0)),
                             std::abs(stream.psi(c, 1.0)), std::abs(stream.psi(0.0, c)),
                             std::abs(stream.psi(1.0, c))});
  }
  if (boundary_psi > 1e-12)
    throw std::invalid_argument("build_drift: stream function '" + stream.name +
                                "' does not vanish on the boundary (max |psi| = " +
                                std::to_string(boundary_psi) + ")");

  Eigen::MatrixXd bx(m, m), by(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      bx(i, j) = stream.bx(i * h, j * h);
      by(i, j) = stream.by(i * h, j * h);
    }
  return DriftField(grid, std::move(bx), std::move(by));
}

namespace {

// Directional derivative D_b phi = b . grad phi, centered differences with
// zero Dirichlet extension, as a dense matrix on interior nodes.
Eigen::MatrixXd assemble_directional(const GridPtr& grid, const DriftField& b) {
  const int n = grid->n();
  const double h = grid->spacing();
  const int N = n * n;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(N, N);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const int row = ix + n * iy;
      const double cx = b.bx()(ix + 1, iy + 1) / (2 * h);
      const double cy = b.by()(ix + 1, iy + 1) / (2 * h);
      if (ix + 1 < n) d(row, row + 1) += cx;
      if (ix > 0) d(row, row - 1) -= cx;
      if (iy + 1 < n) d(row, row + n) += cy;
      if (iy > 0) d(row, row - n) -= cy;
    }
  return d;
}

// Power iteration for the largest singular value of G.
double largest_singular_value(const Eigen::MatrixXd& g) {
  const int N = static_cast<int>(g.cols());
  Eigen::VectorXd v = Eigen::VectorXd::Ones(N).normalized();
  double sigma2 = 0.0;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd w = g.transpose() * (g * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    w /= nw;
    if (it > 10 && std::abs(nw - sigma2) <= 1e-13 * nw) {
      sigma2 = nw;
      break;
    }
    sigma2 = nw;
    v = w;
  }
  return std::sqrt(sigma2);
}

}  // namespace

DriftGroup DriftGroup::identity(const GridPtr& grid) {
  DriftGroup g;
  g.grid_ = grid;
  g.identity_ = true;
  g.b_ = Eigen::MatrixXd::Zero(grid->size(), grid->size());
  return g;
}

DriftGroup DriftGroup::build(const GridPtr& grid, const DriftField& b) {
  if (b.grid().get() != grid.get())
    throw std::invalid_argument("DriftGroup::build: drift sampled on a different grid");
  if (b.is_zero()) return identity(grid);

  const int N = grid->size();
  const double h = grid->spacing();

  const Eigen::MatrixXd a_inv = grid->dense_power(-1.0);
  const Eigen::MatrixXd a_full = grid->dense_power(1.0);
  const Eigen::MatrixXd a_sqrt = grid->dense_power(0.5);
  const Eigen::MatrixXd a_isqrt = grid->dense_power(-0.5);

  const Eigen::MatrixXd b0 = assemble_directional(grid, b) * a_inv;
  // H^{-1} adjoint of B0 is A B0^T A^{-1}; the average is exactly skew in
  // the H^{-1} metric.
  DriftGroup g;
  g.grid_ = grid;
  g.b_ = 0.5 * (b0 - a_full * b0.transpose() * a_inv);

  // Metric-orthonormal coordinates z = h A^{-1/2} phi turn B into a genuinely
  // skew-symmetric matrix; pair its invariant planes via K = Bt^T Bt.
  Eigen::MatrixXd bt = a_isqrt * g.b_ * a_sqrt;
  bt = 0.5 * (bt - bt.transpose().eval());  // scrub symmetric roundoff

  Eigen::MatrixXd k = bt.transpose() * bt;
  k = 0.5 * (k + k.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  if (es.info() != Eigen::Success) throw std::runtime_error("DriftGroup: eigensolver failed");

  const Eigen::VectorXd mu = es.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd v = es.eigenvectors();
  const double theta_max = std::sqrt(mu.maxCoeff());
  const double zero_tol = 1e-10 * std::max(1.0, theta_max);

  Eigen::MatrixXd q(N, N);
  std::vector<double> thetas;
  int col = 0;

  std::vector<int> kernel;
  int i = 0;
  while (i < N) {
    const double theta_i = std::sqrt(mu[i]);
    if (theta_i <= zero_tol) {
      kernel.push_back(i);
      ++i;
      continue;
    }
    // Cluster numerically equal thetas; the eigenspace is Bt-invariant and
    // even-dimensional, so it splits into rotation planes.
    int j = i;
    while (j < N && std::sqrt(mu[j]) - theta_i <= 1e-8 * std::max(1.0, theta_i)) ++j;
    Eigen::MatrixXd cluster = v.middleCols(i, j - i);
    while (cluster.cols() > 0) {
      Eigen::VectorXd p = cluster.col(0).normalized();
      Eigen::VectorXd w = bt * p;
      const double theta = w.norm();
      if (theta <= zero_tol) {
        if (cluster.cols() == 1) {  // stray near-kernel direction
          q.col(col++) = p;
          thetas.push_back(0.0);
          break;
        }
        throw std::runtime_error("DriftGroup: degenerate rotation plane");
      }
      w /= theta;
      w -= p * p.dot(w);
      w.normalize();
      q.col(col) = p;
      q.col(col + 1) = w;
      thetas.push_back(theta);
      col += 2;
      if (cluster.cols() <= 2) break;
      // Deflate the paired plane out of the cluster basis.
      Eigen::MatrixXd rest = cluster.rightCols(cluster.cols() - 1);
      rest -= p * (p.transpose() * rest);
      rest -= w * (w.transpose() * rest);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(rest);
      Eigen::MatrixXd thin =
          qr.householderQ() * Eigen::MatrixXd::Identity(N, cluster.cols() - 2);
      cluster = thin;
    }
    i = j;
  }
  g.n_pairs_ = static_cast<int>(thetas.size());
  // Kernel columns are fixed by the group.
  for (int idx : kernel) q.col(col++) = v.col(idx);
  if (col != N) throw std::runtime_error("DriftGroup: incomplete pairing basis");

  g.theta_ = Eigen::Map<Eigen::VectorXd>(thetas.data(), g.n_pairs_);

  // Reconstruction check: Bt q_pair columns must match the block rotation
  // generator to within roundoff.
  {
    Eigen::MatrixXd bq = bt * q;
    Eigen::MatrixXd qr_blocks = Eigen::MatrixXd::Zero(N, N);
    for (int pidx = 0; pidx < g.n_pairs_; ++pidx) {
      qr_blocks.col(2 * pidx) = q.col(2 * pidx + 1) * g.theta_[pidx];
      qr_blocks.col(2 * pidx + 1) = -q.col(2 * pidx) * g.theta_[pidx];
    }
    const double resid = (bq - qr_blocks).cwiseAbs().maxCoeff();
    if (resid > 1e-7 * std::max(1.0, theta_max))
      throw std::runtime_error("DriftGroup: spectral factorization residual too large");
  }

  // Fold the coordinate maps into the cached factors:
  // e^{sB} = T^{-1} Q G(s) Q^T T with T = h A^{-1/2}.
  g.fwd_ = (1.0 / h) * (a_sqrt * q);
  g.bwd_ = q.transpose() * (h * a_isqrt);
  g.op_norm_ = largest_singular_value(g.b_ * a_sqrt);
  return g;
}

Eigen::VectorXd DriftGroup::rotate_coords(double s, Eigen::VectorXd c) const {
  for (int p = 0; p < n_pairs_; ++p) {
    const double cs = std::cos(s * theta_[p]);
    const double sn = std::sin(s * theta_[p]);
    const double a = c[2 * p], b = c[2 * p + 1];
    c[2 * p] = cs * a - sn * b;
    c[2 * p + 1] = sn * a + cs * b;
  }
  return c;
}

Field DriftGroup::apply(double s, const Field& phi) const {
  if (identity_ || s == 0.0) return phi;
  Eigen::VectorXd c = bwd_ * phi.values;
  c = rotate_coords(s, std::move(c));
  return Field{phi.domain, fwd_ * c};
}

Eigen::VectorXd DriftGroup::apply_transpose(double s, const Eigen::VectorXd& v) const {
  if (identity_ || s == 0.0) return v;
  // (fwd G bwd)^T = bwd^T G(s)^T fwd^T and G(s)^T = G(-s).
  Eigen::VectorXd c = fwd_.transpose() * v;
  c = rotate_coords(-s, std::move(c));
  return bwd_.transpose() * c;
}

Eigen::MatrixXd DriftGroup::dense_exp(double s) const {
  const int N = grid_->size();
  if (identity_) return Eigen::MatrixXd::Identity(N, N);
  Eigen::MatrixXd g = bwd_;
  for (int p = 0; p < n_pairs_; ++p) {
    const double cs = std::cos(s * theta_[p]);
    const double sn = std::sin(s * theta_[p]);
    const Eigen::RowVectorXd a = g.row(2 * p);
    const Eigen::RowVectorXd b = g.row(2 * p + 1);
    g.row(2 * p) = cs * a - sn * b;
    g.row(2 * p + 1) = sn * a + cs * b;
  }
  return fwd_ * g;
}

double gamma_l2_defect_mc(const DriftGroup& group, const Field& zeta, double gap,
                          int n_samples, std::uint64_t seed) {
  if (n_samples < 1000)
    throw std::invalid_argument("gamma_l2_defect_mc: need n_samples >= 1000");
  if (group.is_identity()) return 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(gap);
  const auto& grid = *group.grid();
  double acc = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double w = sd * normal(rng);
    Field moved = group.apply(w, zeta);
    moved.values -= zeta.values;
    acc += grid.inner(moved, moved, Metric::L2);
  }
  return acc / n_samples;
}

}  // namespace pmv
