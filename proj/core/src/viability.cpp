#include "pmviab/viability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pmviab/detail/parallel.hpp"

namespace pmv {

namespace {

// Membership slack: projections land on the boundary up to roundoff.
double contains_tol(double scale) { return 1e-9 * std::max(1.0, std::abs(scale)); }

// Positive root of g(s) = 2 n0^2 s^3 + (1 - 2 sigma0) s - 1 in (0, 1);
// first-order optimality of the radial epigraph projection.
double epigraph_scaling(double n0_sq, double sigma0) {
  auto g = [&](double s) { return 2.0 * n0_sq * s * s * s + (1.0 - 2.0 * sigma0) * s - 1.0; };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-16) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

ConstraintOracle ConstraintOracle::whole_space() {
  ConstraintOracle k;
  k.kind_ = "whole-space";
  return k;
}

ConstraintOracle ConstraintOracle::centered_ball(double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("centered_ball: radius must be > 0");
  ConstraintOracle k;
  k.kind_ = "centered-ball";
  k.radius_ = radius;
  return k;
}

ConstraintOracle ConstraintOracle::decay_epigraph() {
  ConstraintOracle k;
  k.kind_ = "decay-epigraph";
  return k;
}

ConstraintOracle make_constraint(const std::string& kind,
                                 const std::map<std::string, double>& params) {
  if (kind == "whole-space") return ConstraintOracle::whole_space();
  if (kind == "centered-ball") {
    auto it = params.find("radius");
    return ConstraintOracle::centered_ball(it == params.end() ? 1.0 : it->second);
  }
  if (kind == "decay-epigraph") return ConstraintOracle::decay_epigraph();
  throw std::invalid_argument("make_constraint: unknown kind '" + kind + "'");
}

bool ConstraintOracle::contains(const ModelSpec& model, const CoupledState& z) const {
  if (kind_ == "whole-space") return true;
  if (kind_ == "centered-ball") {
    const double nx = model.grid1->norm(z.x, Metric::Hminus1);
    const double ny = model.y_norm(z.y);
    return std::sqrt(nx * nx + ny * ny) <= radius_ + contains_tol(radius_);
  }
  if (kind_ == "decay-epigraph") {
    if (!z.y.is_scalar)
      throw std::invalid_argument("decay-epigraph is defined on H^{-1} x R (scalar mode)");
    const double n_sq = std::pow(model.grid1->norm(z.x, Metric::Hminus1), 2);
    return n_sq <= z.y.scalar + contains_tol(z.y.scalar);
  }
  throw std::logic_error("ConstraintOracle: unknown kind");
}

CoupledState ConstraintOracle::project(const ModelSpec& model, const CoupledState& z) const {
  if (kind_ == "whole-space") return z;
  if (kind_ == "centered-ball") {
    const double nx = model.grid1->norm(z.x, Metric::Hminus1);
    const double ny = model.y_norm(z.y);
    const double rho = std::sqrt(nx * nx + ny * ny);
    if (rho <= radius_) return z;
    const double scale = radius_ / rho;
    CoupledState out = z;
    out.x.values *= scale;
    if (out.y.is_scalar)
      out.y.scalar *= scale;
    else
      out.y.field.values *= scale;
    return out;
  }
  if (kind_ == "decay-epigraph") {
    if (!z.y.is_scalar)
      throw std::invalid_argument("decay-epigraph is defined on H^{-1} x R (scalar mode)");
    const double n0 = model.grid1->norm(z.x, Metric::Hminus1);
    const double n0_sq = n0 * n0;
    if (n0_sq <= z.y.scalar) return z;  // interior or on the boundary
    CoupledState out = z;
    if (n0 == 0.0) {
      out.y.scalar = 0.0;  // nearest point of the epigraph to (0, sigma<0)
      return out;
    }
    const double s = epigraph_scaling(n0_sq, z.y.scalar);
    out.x.values *= s;
    out.y.scalar = s * s * n0_sq;
    return out;
  }
  throw std::logic_error("ConstraintOracle: unknown kind");
}

double ConstraintOracle::distance(const ModelSpec& model, const CoupledState& z) const {
  if (kind_ == "whole-space") return 0.0;
  return model.state_distance(z, project(model, z));
}

TangencyProfile tangency_profile(const ConstraintOracle& K, const ModelSpec& model, double t,
                                 const CoupledState& init, const std::vector<double>& epsilons,
                                 int n_mc, const std::vector<std::uint64_t>& seeds,
                                 unsigned workers) {
  if (!K.contains(model, init))
    throw std::invalid_argument("tangency_profile: initial state must lie in K");
  if (n_mc < 1 || seeds.empty())
    throw std::invalid_argument("tangency_profile: need n_mc >= 1 and seeds");

  const std::size_t n_u = model.controls.size();
  const std::size_t n_eps = epsilons.size();
  TangencyProfile prof;
  prof.epsilons = epsilons;
  prof.q_per_control.assign(n_eps, std::vector<double>(n_u, 0.0));

  // Cells are (eps, control, sample); paths shared across controls per
  // (eps, sample) as common random numbers for the argmin.
  std::vector<double> cell(n_eps * n_u * static_cast<std::size_t>(n_mc), 0.0);
  detail::parallel_for(n_eps * n_u * static_cast<std::size_t>(n_mc), workers, [&](std::size_t c) {
    const std::size_t ke = c / (n_u * n_mc);
    const std::size_t iu = (c / n_mc) % n_u;
    const int i = static_cast<int>(c % n_mc);
    const double eps = epsilons[ke];
    const double dt = snapped_step(*model.grid1, model.beta1, eps);
    const auto base = seeds[static_cast<std::size_t>(i) % seeds.size()];
    const auto seed = derive_seed(base, ke * 1000003ULL + static_cast<std::uint64_t>(i));
    const BrownianPath path = sample_brownian(t, t + eps, dt, seed);
    const Trajectory traj =
        solve_euler_fundamental(model, t, init, ControlSchedule::constant(static_cast<int>(iu)),
                                path, dt, t + eps);
    const double d = K.distance(model, traj.states.back());
    cell[c] = d * d;
  });

  for (std::size_t ke = 0; ke < n_eps; ++ke) {
    double best = std::numeric_limits<double>::infinity();
    int best_u = 0;
    for (std::size_t iu = 0; iu < n_u; ++iu) {
      double acc = 0.0;
      for (int i = 0; i < n_mc; ++i) acc += cell[(ke * n_u + iu) * n_mc + i];
      const double q = acc / n_mc / (epsilons[ke] * epsilons[ke]);
      prof.q_per_control[ke][iu] = q;
      if (q < best) {
        best = q;
        best_u = static_cast<int>(iu);
      }
    }
    prof.q_values.push_back(best);
    prof.argmin_control.push_back(best_u);
  }

  // Extrapolated liminf: least-squares line q = a + b*eps, clipped at 0.
  if (n_eps >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < n_eps; ++k) {
      sx += epsilons[k];
      sy += prof.q_values[k];
      sxx += epsilons[k] * epsilons[k];
      sxy += epsilons[k] * prof.q_values[k];
    }
    const double n = static_cast<double>(n_eps);
    const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    prof.liminf_estimate = std::max(0.0, (sy - b * sx) / n);
  } else {
    prof.liminf_estimate = prof.q_values.empty() ? 0.0 : prof.q_values[0];
  }
  return prof;
}

double EpsApproxRecord::correction_energy() const {
  double acc = 0.0;
  for (const auto& node : nodes) acc += node.correction_energy;
  return acc;
}

namespace {

double squared_p_norm(const ModelSpec& model, const Field& p1, double p2s, const Field& p2f,
                      bool scalar_mode) {
  const double nx = model.grid1->norm(p1, Metric::Hminus1);
  double ny = 0.0;
  if (scalar_mode)
    ny = p2s;
  else
    ny = model.grid2->norm(p2f, Metric::Hminus1);
  return nx * nx + ny * ny;
}

}  // namespace

EpsApproxRecord construct_eps_approx(const ConstraintOracle& K, const ModelSpec& model, double t,
                                     double T, const CoupledState& init, double eps,
                                     std::uint64_t seed) {
  if (!(eps > 0.0)) throw std::invalid_argument("construct_eps_approx: eps must be > 0");
  if (!(T > t)) throw std::invalid_argument("construct_eps_approx: need T > t");
  if (!K.contains(model, init))
    throw std::invalid_argument("construct_eps_approx: initial state must lie in K");

  EpsApproxRecord rec;
  rec.t = t;
  rec.horizon_request = T;
  rec.eps = eps;

  // Integrator grid: the largest stable step that divides the horizon.
  const double dt_stable = stable_step(*model.grid1, model.beta1);
  const auto total_steps = static_cast<long long>(std::ceil((T - t) / dt_stable - 1e-12));
  const double dt = (T - t) / static_cast<double>(total_steps);
  rec.dt = dt;
  rec.path = sample_brownian(t, T, dt, seed);

  // Step-1 budget: E||p||^2 <= delta^2 eps' with eps' trimmed by the
  // initial-data size, mirroring the judicious choice in the construction.
  const double xi_l2 = model.grid1->norm(init.x, Metric::L2);
  const double eta_sq = model.scalar_mode
                            ? init.y.scalar * init.y.scalar
                            : std::pow(model.grid2->norm(init.y.field, Metric::L2), 2);
  rec.eps_prime = eps / (1.0 + xi_l2 * xi_l2 + eta_sq);

  rec.times.push_back(t);
  rec.states.push_back(init);
  rec.tau.push_back(t);

  CoupledState node_state = init;
  long long step_cursor = 0;

  while (step_cursor < total_steps) {
    const double t_node = t + dt * static_cast<double>(step_cursor);
    const long long steps_left = total_steps - step_cursor;
    long long delta_steps =
        std::min<long long>(steps_left, std::max<long long>(1, static_cast<long long>(eps / dt)));

    bool committed = false;
    while (!committed) {
      const double delta = dt * static_cast<double>(delta_steps);

      // Integrate the frozen-argument dynamics for each control and score by
      // the post-step projected distance.
      int best_u = -1;
      double best_dist = std::numeric_limits<double>::infinity();
      std::vector<CoupledState> best_sub;
      CoupledState best_end;
      for (std::size_t iu = 0; iu < model.controls.size(); ++iu) {
        const FrozenForcing forcing = frozen_forcing(model, node_state, model.controls[iu]);
        CoupledState state = node_state;
        std::vector<CoupledState> sub;
        sub.reserve(static_cast<std::size_t>(delta_steps));
        for (long long m = 0; m < delta_steps; ++m) {
          const double s = t_node + dt * static_cast<double>(m);
          state = frozen_step(model, t, s, dt, state, forcing, rec.path);
          sub.push_back(state);
        }
        const double d = K.distance(model, state);
        if (d < best_dist - 1e-15 || best_u < 0) {
          best_dist = d;
          best_u = static_cast<int>(iu);
          best_sub = std::move(sub);
          best_end = state;
        }
      }

      const CoupledState projected = K.project(model, best_end);
      Field p1{best_end.x.domain, projected.x.values - best_end.x.values};
      double p2s = 0.0;
      Field p2f;
      if (model.scalar_mode)
        p2s = projected.y.scalar - best_end.y.scalar;
      else
        p2f = Field{best_end.y.field.domain,
                    projected.y.field.values - best_end.y.field.values};
      const double p_norm2 = squared_p_norm(model, p1, p2s, p2f, model.scalar_mode);

      // Local clause-4 budget ||p||^2 <= delta^2 eps'.
      const bool budget4 = p_norm2 <= delta * delta * rec.eps_prime + 1e-300;
      // Local clause-6 budget: intra-interval drift away from the node.
      double drift2 = 0.0;
      for (const auto& s : best_sub) {
        const double d = model.state_distance(s, node_state);
        drift2 = std::max(drift2, d * d);
      }
      const bool budget6 = drift2 <= eps;

      if (budget4 && budget6) {
        for (long long m = 0; m < delta_steps; ++m) {
          rec.times.push_back(t_node + dt * static_cast<double>(m + 1));
          rec.tau.push_back(t_node);
          rec.control_per_step.push_back(best_u);
          rec.states.push_back(best_sub[static_cast<std::size_t>(m)]);
        }
        // The state jumps to the projected point; tau at the node is the node.
        rec.states.back() = projected;
        rec.tau.back() = t_node + delta;
        rec.nodes.push_back(EpsApproxNode{t_node, delta, best_u, p_norm2,
                                          p_norm2 / delta});
        rec.p1.push_back(std::move(p1));
        rec.p2_scalar.push_back(p2s);
        rec.p2_field.push_back(std::move(p2f));
        node_state = projected;
        step_cursor += delta_steps;
        committed = true;
      } else if (delta_steps > 1) {
        delta_steps = (delta_steps + 1) / 2;
      } else {
        rec.t_bar = t_node;
        rec.complete = false;
        rec.diagnostic =
            "step size underflow at s = " + std::to_string(t_node) +
            (budget4 ? "" : " (clause-4 budget violated)") +
            (budget6 ? "" : " (clause-6 budget violated)") +
            "; quasi-tangency empirically violated at this node";
        return rec;
      }
    }
  }

  rec.t_bar = T;
  rec.complete = true;
  return rec;
}

SixClauseReport validate_eps_approx(const EpsApproxRecord& rec, const ConstraintOracle& K,
                                    const ModelSpec& model, double eps) {
  SixClauseReport report;
  auto add = [&](std::string name, bool pass, double slack, std::string note = "") {
    report.entries.push_back(ClauseEntry{std::move(name), pass, slack, std::move(note)});
  };

  // Clause 1: t <= T_bar <= T.
  add("1:horizon", rec.t <= rec.t_bar && rec.t_bar <= rec.horizon_request + 1e-12,
      rec.horizon_request - rec.t_bar, rec.complete ? "complete" : "partial: " + rec.diagnostic);

  // Clause 2: tau non-decreasing, non-anticipating, at most eps-delayed.
  {
    bool ok = rec.tau.size() == rec.times.size();
    double max_delay = 0.0;
    for (std::size_t i = 0; ok && i < rec.tau.size(); ++i) {
      if (i > 0 && rec.tau[i] < rec.tau[i - 1] - 1e-12) ok = false;
      if (rec.tau[i] > rec.times[i] + 1e-12) ok = false;
      max_delay = std::max(max_delay, rec.times[i] - rec.tau[i]);
    }
    if (max_delay > eps + 1e-12) ok = false;
    add("2:node-map", ok, eps - max_delay);
  }

  // Clause 3: control indices valid.
  {
    bool ok = true;
    for (int u : rec.control_per_step)
      if (u < 0 || static_cast<std::size_t>(u) >= model.controls.size()) ok = false;
    add("3:control", ok, 0.0);
  }

  // Clause 4: correction energy bounded by eps (T_bar - t).
  {
    const double energy = rec.correction_energy();
    const double budget = eps * (rec.t_bar - rec.t);
    add("4:correction-energy", energy <= budget + 1e-12, budget - energy);
  }

  // Clause 5: the pair solves the delayed equation; re-integrate with the
  // recorded (tau, u, phi) and compare. Measurability is not applicable with
  // adaptedness dropped.
  {
    double resid = 0.0;
    CoupledState state = rec.states.front();
    std::size_t time_idx = 0;
    for (std::size_t k = 0; k < rec.nodes.size(); ++k) {
      const auto& node = rec.nodes[k];
      const auto node_steps =
          static_cast<long long>(std::llround(node.delta / rec.dt));
      const CoupledState& anchor_state = rec.states[time_idx];
      const FrozenForcing forcing =
          frozen_forcing(model, anchor_state, model.controls[static_cast<std::size_t>(node.control)]);
      for (long long m = 0; m < node_steps; ++m) {
        const double s = node.t_start + rec.dt * static_cast<double>(m);
        state = frozen_step(model, rec.t, s, rec.dt, state, forcing, rec.path);
        ++time_idx;
        if (m + 1 == node_steps) {
          // integral of phi over the subinterval applied at the node
          state.x.values += rec.p1[k].values;
          if (model.scalar_mode)
            state.y.scalar += rec.p2_scalar[k];
          else
            state.y.field.values += rec.p2_field[k].values;
        }
        resid = std::max(resid, model.state_distance(state, rec.states[time_idx]));
      }
    }
    add("5:equation", resid <= 1e-9, 1e-9 - resid,
        "re-integration residual; F_Tbar-measurability not applicable (adaptedness dropped)");
  }

  // Clause 6: node membership and the eps bound on ||X(tau(s)) - X(s)||^2.
  {
    bool ok = true;
    double worst_gap = 0.0;
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
      const auto tau_idx = static_cast<std::size_t>(
          std::llround((rec.tau[i] - rec.t) / rec.dt));
      const CoupledState& at_tau = rec.states[tau_idx];
      if (K.distance(model, at_tau) > 1e-9) ok = false;
      const double d = model.state_distance(at_tau, rec.states[i]);
      worst_gap = std::max(worst_gap, d * d);
    }
    if (K.distance(model, rec.states.back()) > 1e-9) ok = false;
    if (worst_gap > eps + 1e-12) ok = false;
    add("6:constraint", ok, eps - worst_gap);
  }

  report.all_pass = std::all_of(report.entries.begin(), report.entries.end(),
                                [](const ClauseEntry& e) { return e.pass; });
  return report;
}

NearViabilityReport near_viability_gap(const ConstraintOracle& K, const ModelSpec& model,
                                       double t, double T, const CoupledState& init,
                                       const std::vector<double>& eps_levels, int n_mc,
                                       const std::vector<std::uint64_t>& seeds,
                                       unsigned workers) {
  if (n_mc < 1 || seeds.empty())
    throw std::invalid_argument("near_viability_gap: need n_mc >= 1 and seeds");
  NearViabilityReport report;
  report.gap = std::numeric_limits<double>::infinity();

  const double dt_stable = stable_step(*model.grid1, model.beta1);
  const auto total_steps = static_cast<long long>(std::ceil((T - t) / dt_stable - 1e-12));
  const double dt = (T - t) / static_cast<double>(total_steps);
  const auto n_times = static_cast<std::size_t>(total_steps) + 1;

  auto seed_of = [&](std::uint64_t policy, int sample) {
    const auto base = seeds[static_cast<std::size_t>(sample) % seeds.size()];
    return derive_seed(base, policy * 7919ULL + static_cast<std::uint64_t>(sample));
  };

  // Greedy projected policies, one per eps level.
  for (std::size_t je = 0; je < eps_levels.size(); ++je) {
    std::vector<double> dist2(n_times * static_cast<std::size_t>(n_mc), 0.0);
    std::vector<std::size_t> valid_until(static_cast<std::size_t>(n_mc), 0);
    bool complete = true;
    detail::parallel_for(static_cast<std::size_t>(n_mc), workers, [&](std::size_t i) {
      const EpsApproxRecord rec = construct_eps_approx(K, model, t, T, init, eps_levels[je],
                                                       seed_of(je + 1, static_cast<int>(i)));
      valid_until[i] = rec.times.size();
      for (std::size_t m = 0; m < rec.times.size(); ++m) {
        const double d = K.distance(model, rec.states[m]);
        dist2[m * n_mc + i] = d * d;
      }
    });
    std::size_t common = n_times;
    for (std::size_t i = 0; i < static_cast<std::size_t>(n_mc); ++i) {
      if (valid_until[i] < common) {
        common = valid_until[i];
        complete = false;
      }
    }
    double sup = 0.0;
    for (std::size_t m = 0; m < common; ++m) {
      double acc = 0.0;
      for (int i = 0; i < n_mc; ++i) acc += dist2[m * n_mc + static_cast<std::size_t>(i)];
      sup = std::max(sup, std::sqrt(acc / n_mc));
    }
    report.policies.push_back(
        PolicyGap{"greedy(eps=" + std::to_string(eps_levels[je]) + ")", sup, complete});
  }

  // Constant-control policies.
  for (std::size_t iu = 0; iu < model.controls.size(); ++iu) {
    std::vector<double> dist2(n_times * static_cast<std::size_t>(n_mc), 0.0);
    detail::parallel_for(static_cast<std::size_t>(n_mc), workers, [&](std::size_t i) {
      const BrownianPath path =
          sample_brownian(t, T, dt, seed_of(1000 + iu, static_cast<int>(i)));
      const Trajectory traj = solve_rescaled(model, t, init,
                                             ControlSchedule::constant(static_cast<int>(iu)),
                                             path, dt, T);
      for (std::size_t m = 0; m < traj.states.size(); ++m) {
        const double d = K.distance(model, traj.states[m]);
        dist2[m * n_mc + i] = d * d;
      }
    });
    double sup = 0.0;
    for (std::size_t m = 0; m < n_times; ++m) {
      double acc = 0.0;
      for (int i = 0; i < n_mc; ++i) acc += dist2[m * n_mc + static_cast<std::size_t>(i)];
      sup = std::max(sup, std::sqrt(acc / n_mc));
    }
    report.policies.push_back(PolicyGap{"constant(u=" + std::to_string(iu) + ")", sup, true});
  }

  for (const auto& p : report.policies) report.gap = std::min(report.gap, p.gap);
  return report;
}

InitialEstimateReport appendix_initial_estimate(const EpsApproxRecord& rec,
                                                const ModelSpec& model,
                                                const std::vector<double>& gaps) {
  InitialEstimateReport out;
  const CoupledState& init = rec.states.front();
  const double xi_l2 = model.grid1->norm(init.x, Metric::L2);
  const double eta_sq = model.scalar_mode
                            ? init.y.scalar * init.y.scalar
                            : std::pow(model.grid2->norm(init.y.field, Metric::L2), 2);

  for (double gap : gaps) {
    const double s = rec.t + gap;
    if (s > rec.t_bar + 1e-12) continue;
    const auto idx = static_cast<std::size_t>(std::llround(gap / rec.dt));
    if (idx >= rec.states.size()) continue;
    const double d = model.state_distance(rec.states[idx], init);
    double energy_upto = 0.0;
    for (const auto& node : rec.nodes)
      if (node.t_start + node.delta <= s + 1e-12) energy_upto += node.correction_energy;
    out.gaps.push_back(rec.times[idx] - rec.t);
    out.lhs.push_back(d * d);
    const double denom = (1.0 + xi_l2 * xi_l2 + eta_sq + energy_upto) * (rec.times[idx] - rec.t);
    if (denom > 0.0) out.c_emp = std::max(out.c_emp, d * d / denom);
  }
  if (out.gaps.size() >= 2 &&
      std::any_of(out.lhs.begin(), out.lhs.end(), [](double v) { return v > 1e-28; })) {
    const auto [slope, intercept] = loglog_fit(out.gaps, out.lhs);
    (void)intercept;
    out.slope = slope;
  }
  return out;
}

}  // namespace pmv
