#include "pmviab/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace pmv {

double ModelSpec::y_norm(const YState& y) const {
  if (y.is_scalar) return std::abs(y.scalar);
  return grid2->norm(y.field, Metric::Hminus1);
}

double ModelSpec::state_distance(const CoupledState& a, const CoupledState& b) const {
  const Field dx{a.x.domain, a.x.values - b.x.values};
  const double nx = grid1->norm(dx, Metric::Hminus1);
  double ny = 0.0;
  if (a.y.is_scalar != b.y.is_scalar)
    throw std::invalid_argument("state_distance: mixed scalar/field second components");
  if (a.y.is_scalar) {
    ny = a.y.scalar - b.y.scalar;
  } else {
    const Field dy{a.y.field.domain, a.y.field.values - b.y.field.values};
    ny = grid2->norm(dy, Metric::Hminus1);
  }
  return std::sqrt(nx * nx + ny * ny);
}

const CoupledState& Trajectory::at_time(double s) const { return states[node_of(s)]; }

std::size_t Trajectory::node_of(double s) const {
  const double pos = (s - t0) / dt;
  const auto idx = static_cast<long long>(std::llround(pos));
  if (idx < 0 || idx >= static_cast<long long>(states.size()) ||
      std::abs(pos - static_cast<double>(idx)) > 1e-6)
    throw std::out_of_range("Trajectory::node_of: time off the grid");
  return static_cast<std::size_t>(idx);
}

double stable_step(const GridDomain& grid, const Nonlinearity& beta) {
  const double lip = std::max(beta.lip(), 1e-12);
  return 0.5 / (lip * grid.lambda_max());
}

double snapped_step(const GridDomain& grid, const Nonlinearity& beta, double horizon) {
  const double dt0 = stable_step(grid, beta);
  const auto m = static_cast<long long>(std::ceil(horizon / dt0 - 1e-12));
  return horizon / static_cast<double>(std::max(1LL, m));
}

namespace {

// One explicit Euler step of the live (state-coupled) rescaled system.
CoupledState live_step(const ModelSpec& m, double t_anchor, double s, double dt,
                       const CoupledState& state, const Control& u, const BrownianPath& path) {
  const double g1 = path.increment(t_anchor, s);  // W(s) - W(t)

  const Field w = m.gamma1.apply(g1, state.x);  // Gamma1(t,s) x
  Field rhs = m.grid1->laplacian_apply(m.beta1.apply(w));
  rhs.values = -rhs.values;  // Delta beta = -A beta
  if (m.scalar_mode) {
    rhs.values += m.f1.eval(w, YArg::of(state.y.scalar), u).values;
  } else {
    const Field wy = m.gamma2.apply(g1, state.y.field);
    rhs.values += m.f1.eval(w, YArg::of(wy), u).values;
  }
  const Field dx = m.gamma1.apply(-g1, rhs);  // Gamma1(s,t) [...]

  CoupledState next;
  next.x = Field{state.x.domain, state.x.values + dt * dx.values};
  if (m.scalar_mode) {
    next.y = YState::of(state.y.scalar + dt * m.f2.eval_scalar(w, state.y.scalar, u));
  } else {
    const Field wy = m.gamma2.apply(g1, state.y.field);
    Field rhs_y = m.grid2->laplacian_apply(m.beta2.apply(wy));
    rhs_y.values = -rhs_y.values;
    rhs_y.values += m.f2.eval(w, YArg::of(wy), u).values;
    const Field dyf = m.gamma2.apply(-g1, rhs_y);
    next.y = YState::of(Field{state.y.field.domain, state.y.field.values + dt * dyf.values});
  }
  return next;
}

}  // namespace

CoupledState rescaled_step(const ModelSpec& model, double t_anchor, double s, double dt,
                           const CoupledState& state, const Control& u, const BrownianPath& path) {
  return live_step(model, t_anchor, s, dt, state, u, path);
}

FrozenForcing frozen_forcing(const ModelSpec& model, const CoupledState& at, const Control& u) {
  FrozenForcing f;
  if (model.scalar_mode) {
    f.x = model.f1.eval(at.x, YArg::of(at.y.scalar), u);
    f.y_scalar = model.f2.eval_scalar(at.x, at.y.scalar, u);
  } else {
    f.x = model.f1.eval(at.x, YArg::of(at.y.field), u);
    f.y_field = model.f2.eval(at.x, YArg::of(at.y.field), u);
  }
  return f;
}

CoupledState frozen_step(const ModelSpec& m, double t_anchor, double s, double dt,
                         const CoupledState& state, const FrozenForcing& forcing,
                         const BrownianPath& path) {
  const double g1 = path.increment(t_anchor, s);

  const Field w = m.gamma1.apply(g1, state.x);
  Field rhs = m.grid1->laplacian_apply(m.beta1.apply(w));
  rhs.values = -rhs.values;
  Field dx = m.gamma1.apply(-g1, rhs);
  dx.values += forcing.x.values;  // frozen forcing, outside the Gamma wrapper

  CoupledState next;
  next.x = Field{state.x.domain, state.x.values + dt * dx.values};
  if (m.scalar_mode) {
    next.y = YState::of(state.y.scalar + dt * forcing.y_scalar);
  } else {
    Field rhs_y = m.grid2->laplacian_apply(m.beta2.apply(m.gamma2.apply(g1, state.y.field)));
    rhs_y.values = -rhs_y.values;
    Field dyf = m.gamma2.apply(-g1, rhs_y);
    dyf.values += forcing.y_field.values;
    next.y = YState::of(Field{state.y.field.domain, state.y.field.values + dt * dyf.values});
  }
  return next;
}

namespace {

Trajectory integrate(const ModelSpec& model, double t, const CoupledState& init,
                     const ControlSchedule& controls, const BrownianPath& path, double dt,
                     double t_end, bool frozen) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be > 0");
  const double span = (t_end - t) / dt;
  const auto n_steps = static_cast<long long>(std::llround(span));
  if (n_steps < 0 || std::abs(span - static_cast<double>(n_steps)) > 1e-6)
    throw std::invalid_argument("integrate: horizon must be a multiple of dt");
  const double dt_max = stable_step(*model.grid1, model.beta1);
  if (dt > dt_max * (1.0 + 1e-9))
    throw std::invalid_argument("integrate: dt exceeds the stable explicit step");

  std::vector<FrozenForcing> forcing_per_u;
  if (frozen)
    for (std::size_t iu = 0; iu < model.controls.size(); ++iu)
      forcing_per_u.push_back(frozen_forcing(model, init, model.controls[iu]));

  // A-priori growth bound for the blow-up detector.
  const double lip_f = std::max(model.f1.lip(), model.f2.lip());
  const double sup0 = model.f1.sup0() + model.f2.sup0();
  const double init_norm = model.grid1->norm(init.x, Metric::Hminus1) + model.y_norm(init.y);

  Trajectory traj;
  traj.t0 = t;
  traj.dt = dt;
  traj.times.reserve(static_cast<std::size_t>(n_steps) + 1);
  traj.states.reserve(static_cast<std::size_t>(n_steps) + 1);
  traj.control_index.reserve(static_cast<std::size_t>(n_steps));
  traj.times.push_back(t);
  traj.states.push_back(init);

  CoupledState state = init;
  for (long long msteps = 0; msteps < n_steps; ++msteps) {
    const double s = t + dt * static_cast<double>(msteps);
    const int u_index = controls.at(static_cast<std::size_t>(msteps));
    const Control& u = model.controls[static_cast<std::size_t>(u_index)];
    state = frozen
                ? frozen_step(model, t, s, dt, state, forcing_per_u[static_cast<std::size_t>(u_index)], path)
                : live_step(model, t, s, dt, state, u, path);
    const double elapsed = dt * static_cast<double>(msteps + 1);
    const double bound =
        10.0 * std::exp((2.0 * lip_f + 1.0) * elapsed) * (init_norm + sup0 * elapsed + 1e-12);
    traj.stability_bound = bound;
    const double norm_now = model.grid1->norm(state.x, Metric::Hminus1) + model.y_norm(state.y);
    if (!std::isfinite(norm_now) || norm_now > bound)
      throw std::runtime_error("integrate: blow-up detected at s = " + std::to_string(s + dt) +
                               " (||state|| = " + std::to_string(norm_now) +
                               ", bound = " + std::to_string(bound) + "); reduce dt");
    traj.times.push_back(t + dt * static_cast<double>(msteps + 1));
    traj.states.push_back(state);
    traj.control_index.push_back(u_index);
  }
  return traj;
}

}  // namespace

Trajectory solve_rescaled(const ModelSpec& model, double t, const CoupledState& init,
                          const ControlSchedule& controls, const BrownianPath& path, double dt,
                          double t_end) {
  return integrate(model, t, init, controls, path, dt, t_end, /*frozen=*/false);
}

Trajectory solve_euler_fundamental(const ModelSpec& model, double t, const CoupledState& init,
                                   const ControlSchedule& controls, const BrownianPath& path,
                                   double dt, double t_end) {
  return integrate(model, t, init, controls, path, dt, t_end, /*frozen=*/true);
}

Trajectory recover_original(const Trajectory& traj, const ModelSpec& model,
                            const BrownianPath& path) {
  Trajectory out = traj;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const double g = path.increment(traj.t0, traj.times[i]);
    out.states[i].x = model.gamma1.apply(g, traj.states[i].x);
    if (!traj.states[i].y.is_scalar)
      out.states[i].y = YState::of(model.gamma2.apply(g, traj.states[i].y.field));
  }
  return out;
}

std::pair<double, double> loglog_fit(const std::vector<double>& eps,
                                     const std::vector<double>& err) {
  if (eps.size() != err.size() || eps.size() < 2)
    throw std::invalid_argument("loglog_fit: need matched lists of size >= 2");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto n = static_cast<double>(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double x = std::log(eps[i]);
    const double y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  return {slope, intercept};
}

}  // namespace pmv
