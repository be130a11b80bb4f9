#include "pmviab/stabilization.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pmv {

namespace {

// Spectral ingredients of psi_j: H^{-1} mode weights of x, L2 mode weights of
// beta(x) and of the forcing, enumerated by increasing eigenvalue.
struct SpectralParts {
  std::vector<double> x_hm1;    // <x, e_k>_{H^{-1}} = c_k / lambda_k
  std::vector<double> beta_l2;  // <beta(x), e_k>_{L2}
  std::vector<double> lambda;
};

SpectralParts spectral_parts(const Field& x, const StabilizationConfig& cfg) {
  const auto& grid = *cfg.grid;
  const Eigen::MatrixXd cx = grid.to_modes(x);
  const Eigen::MatrixXd cb = grid.to_modes(cfg.beta1.apply(x));
  SpectralParts parts;
  const auto& order = grid.modes_by_eigenvalue();
  parts.x_hm1.reserve(order.size());
  parts.beta_l2.reserve(order.size());
  parts.lambda.reserve(order.size());
  for (int p : order) {
    const double lam = grid.eigenvalues()[p];
    parts.x_hm1.push_back(cx.data()[p] / lam);
    parts.beta_l2.push_back(cb.data()[p]);
    parts.lambda.push_back(lam);
  }
  return parts;
}

std::vector<double> forcing_modes(const Field& x, double sigma, const Control& u,
                                  const StabilizationConfig& cfg) {
  const auto& grid = *cfg.grid;
  const Field f = cfg.f1.eval(x, YArg::of(sigma), u);
  const Eigen::MatrixXd cf = grid.to_modes(f);
  std::vector<double> out;
  out.reserve(grid.size());
  for (int p : grid.modes_by_eigenvalue()) out.push_back(cf.data()[p]);
  return out;
}

bool sigma_independent(const CouplingMap& f) {
  return f.family() == "zero" || f.family() == "damping";
}

// max_{1<=j<=J} psi_j(x,u); exact fast path when f1 ignores its scalar
// second argument, per-j re-evaluation otherwise.
double max_psi(const Field& x, const Control& u, const StabilizationConfig& cfg) {
  const int J = cfg.truncation();
  const SpectralParts parts = spectral_parts(x, cfg);
  if (sigma_independent(cfg.f1)) {
    const std::vector<double> fc = forcing_modes(x, 0.0, u, cfg);
    double acc = 0.0;
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < J; ++k) {
      const double xk = parts.x_hm1[static_cast<std::size_t>(k)];
      const double drift = -parts.beta_l2[static_cast<std::size_t>(k)] +
                           fc[static_cast<std::size_t>(k)] / parts.lambda[static_cast<std::size_t>(k)];
      acc += 2.0 * xk * drift + 2.0 * cfg.c * xk * xk;
      worst = std::max(worst, acc);
    }
    return worst;
  }
  double worst = -std::numeric_limits<double>::infinity();
  for (int j = 1; j <= J; ++j) worst = std::max(worst, psi_j(x, u, j, cfg));
  return worst;
}

}  // namespace

double psi_j(const Field& x, const Control& u, int j, const StabilizationConfig& cfg) {
  if (j < 1 || j > cfg.truncation())
    throw std::invalid_argument("psi_j: level out of range [1, J]");
  const SpectralParts parts = spectral_parts(x, cfg);
  double sigma = 0.0;
  for (int l = 0; l < j; ++l) {
    const double xl = parts.x_hm1[static_cast<std::size_t>(l)];
    sigma += xl * xl;
  }
  const std::vector<double> fc = forcing_modes(x, sigma, u, cfg);
  double acc = 2.0 * cfg.c * sigma;
  for (int k = 0; k < j; ++k) {
    const double xk = parts.x_hm1[static_cast<std::size_t>(k)];
    acc += 2.0 * xk *
           (-parts.beta_l2[static_cast<std::size_t>(k)] +
            fc[static_cast<std::size_t>(k)] / parts.lambda[static_cast<std::size_t>(k)]);
  }
  return acc;
}

std::vector<int> feasible_controls(const Field& x, const StabilizationConfig& cfg) {
  constexpr double kTolFeas = 1e-10;
  std::vector<int> out;
  for (std::size_t iu = 0; iu < cfg.controls.size(); ++iu)
    if (max_psi(x, cfg.controls[iu], cfg) <= kTolFeas) out.push_back(static_cast<int>(iu));
  return out;
}

FeedbackChoice select_feedback(const Field& x, const StabilizationConfig& cfg) {
  constexpr double kTolFeas = 1e-10;
  FeedbackChoice choice;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t iu = 0; iu < cfg.controls.size(); ++iu) {
    const double w = max_psi(x, cfg.controls[iu], cfg);
    if (w < best) {  // strict: ties keep the lowest index
      best = w;
      choice.index = static_cast<int>(iu);
    }
  }
  choice.worst_psi = best;
  choice.feasible = best <= kTolFeas;
  return choice;
}

NecessaryCondition necessary_residual(const Field& x, const StabilizationConfig& cfg) {
  const auto& grid = *cfg.grid;
  const int J = cfg.truncation();
  const int N = grid.size();
  const SpectralParts parts = spectral_parts(x, cfg);
  const double norm_sq = std::pow(grid.norm(x, Metric::Hminus1), 2);

  NecessaryCondition result;
  result.value = std::numeric_limits<double>::infinity();
  for (std::size_t iu = 0; iu < cfg.controls.size(); ++iu) {
    // Full-norm variant of the second argument, as displayed.
    const std::vector<double> fc = forcing_modes(x, norm_sq, cfg.controls[iu], cfg);
    double truncated = 0.0;
    double full = 0.0;
    for (int k = 0; k < N; ++k) {
      const double xk = parts.x_hm1[static_cast<std::size_t>(k)];
      const double term = 2.0 * xk *
                          (-parts.beta_l2[static_cast<std::size_t>(k)] +
                           fc[static_cast<std::size_t>(k)] / parts.lambda[static_cast<std::size_t>(k)]);
      full += term;
      if (k < J) truncated += term;
    }
    const double value = truncated + 2.0 * cfg.c * norm_sq;
    if (value < result.value) {
      result.value = value;
      result.tail = std::abs(full - truncated);
      result.argmin_control = static_cast<int>(iu);
    }
  }
  return result;
}

DecayReport run_stabilization(const StabilizationConfig& cfg, const Field& xi, double eta0,
                              double T, double dt, const BrownianPath& path) {
  const auto& grid = *cfg.grid;
  const double xi_norm_sq = std::pow(grid.norm(xi, Metric::Hminus1), 2);
  if (xi_norm_sq > eta0 * (1.0 + 1e-9) + 1e-12)
    throw std::invalid_argument("run_stabilization: need ||xi||^2_{H^-1} <= eta0");
  if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("run_stabilization: bad T or dt");

  // Reduced-mode model: beta2 = 0, f2 = -c y.
  ModelSpec model;
  model.grid1 = cfg.grid;
  model.gamma1 = cfg.gamma1;
  model.gamma2 = DriftGroup::identity(cfg.grid);
  model.beta1 = cfg.beta1;
  model.beta2 = make_beta("zero", {}, /*may_be_zero=*/true);
  model.f1 = cfg.f1;
  model.f2 = make_coupling("decay", {{"c", cfg.c}}, cfg.controls, cfg.grid);
  model.controls = cfg.controls;
  model.scalar_mode = true;

  const auto n_steps = static_cast<long long>(std::llround(T / dt));
  if (n_steps < 1 || std::abs(T / dt - static_cast<double>(n_steps)) > 1e-6)
    throw std::invalid_argument("run_stabilization: T must be a multiple of dt");

  DecayReport report;
  // Sampled-data feedback leaves an O(dt) gap against the instantaneous
  // condition; absorb it with an a-priori rate bound on the margin.
  const double state_scale = std::max(eta0, xi_norm_sq);
  const double rate_bound = cfg.c * eta0 +
                            2.0 * (grid.lambda_max() * cfg.beta1.lip() + cfg.f1.lip()) * state_scale;
  report.tol_decay = 10.0 * dt * rate_bound;

  CoupledState state{xi, YState::of(eta0)};
  for (long long m = 0; m <= n_steps; ++m) {
    const double s = dt * static_cast<double>(m);
    const FeedbackChoice fb = select_feedback(state.x, cfg);
    const double norm_sq = std::pow(grid.norm(state.x, Metric::Hminus1), 2);
    const double bound = eta0 * std::exp(-cfg.c * s);

    DecayRow row;
    row.s = s;
    row.norm_sq = norm_sq;
    row.bound = bound;
    row.margin = bound - norm_sq;
    row.control = fb.index;
    row.feasible = fb.feasible;
    if (!fb.feasible) ++report.infeasible_nodes;
    report.rows.push_back(row);

    // Back-transform isometry ||X(s)|| = ||x(s)||.
    const Field X = cfg.gamma1.apply(path.increment(0.0, s), state.x);
    report.max_backtransform_mismatch =
        std::max(report.max_backtransform_mismatch,
                 std::abs(grid.norm(X, Metric::Hminus1) - grid.norm(state.x, Metric::Hminus1)));

    if (row.margin < -report.tol_decay && report.first_violation < 0)
      report.first_violation = static_cast<int>(report.rows.size()) - 1;

    if (m < n_steps)
      state = rescaled_step(model, 0.0, s, dt, state,
                            cfg.controls[static_cast<std::size_t>(fb.index)], path);
  }
  report.pass = report.first_violation < 0;
  return report;
}

}  // namespace pmv
