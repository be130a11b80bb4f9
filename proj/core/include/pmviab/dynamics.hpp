#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pmviab/brownian.hpp"
#include "pmviab/drift.hpp"
#include "pmviab/grid.hpp"
#include "pmviab/model.hpp"

namespace pmv {

/// Second state component: a grid function, or a real number in the reduced
/// mode where the constraint set lives in H^{-1} x R.
struct YState {
  bool is_scalar = true;
  double scalar = 0.0;
  Field field;

  static YState of(double s) { return YState{true, s, {}}; }
  static YState of(Field f) { return YState{false, 0.0, std::move(f)}; }
};

struct CoupledState {
  Field x;
  YState y;
};

/// Everything the integrators need: grids, exponential groups, coefficients
/// and the finite control set. Immutable while solving; shared read-only by
/// Monte Carlo workers.
struct ModelSpec {
  GridPtr grid1;
  GridPtr grid2;  // null in scalar mode
  DriftGroup gamma1;
  DriftGroup gamma2;  // identity in scalar mode
  Nonlinearity beta1;
  Nonlinearity beta2;  // "zero" in scalar mode
  CouplingMap f1;
  CouplingMap f2;
  ControlSet controls;
  bool scalar_mode = true;

  /// ||y|| in the second-component norm (|.| scalar, H^{-1} otherwise).
  double y_norm(const YState& y) const;

  /// Product-space distance sqrt(||dx||^2_{H^{-1}} + ||dy||^2).
  double state_distance(const CoupledState& a, const CoupledState& b) const;
};

/// Constant or per-step control index schedule.
struct ControlSchedule {
  std::vector<int> indices{0};

  static ControlSchedule constant(int idx) { return ControlSchedule{{idx}}; }
  int at(std::size_t step) const {
    return indices.size() == 1 ? indices[0] : indices.at(step);
  }
};

struct Trajectory {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<CoupledState> states;
  std::vector<int> control_index;  // per step (size = times.size() - 1)
  double stability_bound = 0.0;    // a-priori bound used by the blow-up detector

  const CoupledState& at_time(double s) const;
  std::size_t node_of(double s) const;
};

/// CFL-type step for the explicit scheme: 0.5 / (lip(beta) * lambda_max).
double stable_step(const GridDomain& grid, const Nonlinearity& beta);

/// Largest dt <= stable_step that divides `horizon` exactly.
double snapped_step(const GridDomain& grid, const Nonlinearity& beta, double horizon);

/// Forward-Euler integration of the rescaled random-deterministic system
///   dx/ds = Gamma1(s,t) [ -A beta1(Gamma1(t,s)x) + f1(Gamma1(t,s)x, Gamma2(t,s)y, u(s)) ]
///   dy/ds = Gamma2(s,t) [ -A beta2(Gamma2(t,s)y) + f2(...) ]   (field mode)
///   dy/ds = f2(Gamma1(t,s)x, y, u(s))                           (scalar mode)
/// over [t, t_end]; all Gamma evaluations use accumulated increments
/// W(s) - W(t) from the path. Throws on blow-up (diagnostic in the message).
Trajectory solve_rescaled(const ModelSpec& model, double t, const CoupledState& init,
                          const ControlSchedule& controls, const BrownianPath& path, double dt,
                          double t_end);

/// Euler fundamental scheme: same Gamma-conjugated diffusion, forcing frozen
/// at f_i(xi, eta, u(s)) and entering without the Gamma wrapper.
Trajectory solve_euler_fundamental(const ModelSpec& model, double t, const CoupledState& init,
                                   const ControlSchedule& controls, const BrownianPath& path,
                                   double dt, double t_end);

/// One explicit Euler step of the live rescaled system from `state` at time s
/// (building block for closed-loop feedback runs).
CoupledState rescaled_step(const ModelSpec& model, double t_anchor, double s, double dt,
                           const CoupledState& state, const Control& u, const BrownianPath& path);

/// Forcing of the fundamental scheme, frozen at a reference state.
struct FrozenForcing {
  Field x;
  double y_scalar = 0.0;
  Field y_field;
};
FrozenForcing frozen_forcing(const ModelSpec& model, const CoupledState& at, const Control& u);

/// One explicit Euler step of the Gamma-conjugated diffusion plus unwrapped
/// frozen forcing, anchored at t_anchor. Shared by the fundamental scheme and
/// the eps-approximate constructor, whose equation keeps the original anchor
/// while freezing the forcing arguments per node.
CoupledState frozen_step(const ModelSpec& model, double t_anchor, double s, double dt,
                         const CoupledState& state, const FrozenForcing& forcing,
                         const BrownianPath& path);

/// Back-transform to the original Stratonovich solution X(s) = Gamma1(t,s) x(s).
Trajectory recover_original(const Trajectory& traj, const ModelSpec& model,
                            const BrownianPath& path);

struct RateReport {
  std::vector<double> epsilons;
  std::vector<double> errors;   // Monte Carlo means of squared gaps
  std::vector<double> stderrs;  // standard errors of the means
  double slope = 0.0;           // log-log least squares
  double intercept = 0.0;
  double c_emp = 0.0;  // max_k errors[k] / epsilons[k]^target
  double target_exponent = 0.0;
  int n_mc = 0;
  std::vector<std::uint64_t> seeds;
  bool wide_confidence = false;             // some stderr > 0.5 * error
  double richardson_ratio = 0.0;            // prop2 only: ref self-error / gap
  bool degenerate = false;                  // all errors below floor; slope meaningless
};

/// Right-continuity rate of the fundamental scheme at t (Monte Carlo over
/// Brownian paths): errors[k] = E[ ||xhat(t+eps_k) - xi||^2_{H^{-1}} + y-term ].
RateReport prop1_rate(const ModelSpec& model, const CoupledState& init, double t,
                      const std::vector<double>& epsilons, int n_mc,
                      const std::vector<std::uint64_t>& seeds, int control_index = 0,
                      unsigned workers = 0);

/// Scheme gap between the rescaled system and its Euler fundamental
/// approximation, reference at dt/16 sharing path and control schedule.
RateReport prop2_rate(const ModelSpec& model, const CoupledState& init, double t,
                      const std::vector<double>& epsilons, int n_mc,
                      const std::vector<std::uint64_t>& seeds, int control_index = 0,
                      unsigned workers = 0);

/// Least-squares slope/intercept of log(err) against log(eps).
std::pair<double, double> loglog_fit(const std::vector<double>& eps,
                                     const std::vector<double>& err);

}  // namespace pmv
