#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pmviab/detail/parallel.hpp"
#include "pmviab/dynamics.hpp"

namespace pmv {

namespace {

constexpr double kErrorFloor = 1e-28;

double check_grid_compatible(const GridDomain& grid, const Nonlinearity& beta,
                             const std::vector<double>& epsilons) {
  if (epsilons.size() < 2) throw std::invalid_argument("rate study: need >= 2 epsilons");
  const double eps_min = *std::min_element(epsilons.begin(), epsilons.end());
  const double dt = snapped_step(grid, beta, eps_min);
  for (double e : epsilons) {
    const double m = e / dt;
    if (std::abs(m - std::llround(m)) > 1e-6)
      throw std::invalid_argument("rate study: every epsilon must be a multiple of the step");
  }
  return dt;
}

std::uint64_t seed_for(const std::vector<std::uint64_t>& seeds, int sample) {
  const auto base = seeds.at(static_cast<std::size_t>(sample) % seeds.size());
  return derive_seed(base, static_cast<std::uint64_t>(sample) / seeds.size());
}

void finalize_report(RateReport& rep, const std::vector<double>& per_sample, int n_mc) {
  const std::size_t K = rep.epsilons.size();
  rep.errors.assign(K, 0.0);
  rep.stderrs.assign(K, 0.0);
  for (int i = 0; i < n_mc; ++i)
    for (std::size_t k = 0; k < K; ++k) rep.errors[k] += per_sample[i * K + k];
  for (std::size_t k = 0; k < K; ++k) rep.errors[k] /= n_mc;
  if (n_mc > 1) {
    for (int i = 0; i < n_mc; ++i)
      for (std::size_t k = 0; k < K; ++k) {
        const double d = per_sample[i * K + k] - rep.errors[k];
        rep.stderrs[k] += d * d;
      }
    for (std::size_t k = 0; k < K; ++k)
      rep.stderrs[k] = std::sqrt(rep.stderrs[k] / (n_mc - 1) / n_mc);
  }
  rep.n_mc = n_mc;
  rep.degenerate =
      std::all_of(rep.errors.begin(), rep.errors.end(), [](double e) { return e <= kErrorFloor; });
  if (!rep.degenerate) {
    const auto [slope, intercept] = loglog_fit(rep.epsilons, rep.errors);
    rep.slope = slope;
    rep.intercept = intercept;
    for (std::size_t k = 0; k < K; ++k)
      rep.c_emp = std::max(rep.c_emp, rep.errors[k] / std::pow(rep.epsilons[k], rep.target_exponent));
    for (std::size_t k = 0; k < K; ++k)
      if (rep.stderrs[k] > 0.5 * rep.errors[k]) rep.wide_confidence = true;
  }
}

}  // namespace

RateReport prop1_rate(const ModelSpec& model, const CoupledState& init, double t,
                      const std::vector<double>& epsilons, int n_mc,
                      const std::vector<std::uint64_t>& seeds, int control_index,
                      unsigned workers) {
  if (n_mc < 2 || seeds.empty()) throw std::invalid_argument("prop1_rate: need n_mc >= 2 and seeds");
  const double dt = check_grid_compatible(*model.grid1, model.beta1, epsilons);
  const double eps_max = *std::max_element(epsilons.begin(), epsilons.end());

  RateReport rep;
  rep.epsilons = epsilons;
  rep.target_exponent = 1.5;
  rep.seeds = seeds;

  const std::size_t K = epsilons.size();
  std::vector<double> per_sample(static_cast<std::size_t>(n_mc) * K, 0.0);
  detail::parallel_for(static_cast<std::size_t>(n_mc), workers, [&](std::size_t i) {
    const auto seed = seed_for(seeds, static_cast<int>(i));
    const BrownianPath path = sample_brownian(t, t + eps_max, dt, seed);
    const Trajectory traj = solve_euler_fundamental(model, t, init,
                                                    ControlSchedule::constant(control_index), path,
                                                    dt, t + eps_max);
    for (std::size_t k = 0; k < K; ++k) {
      const double d = model.state_distance(traj.at_time(t + epsilons[k]), init);
      per_sample[i * K + k] = d * d;
    }
  });
  finalize_report(rep, per_sample, n_mc);
  return rep;
}

RateReport prop2_rate(const ModelSpec& model, const CoupledState& init, double t,
                      const std::vector<double>& epsilons, int n_mc,
                      const std::vector<std::uint64_t>& seeds, int control_index,
                      unsigned workers) {
  if (n_mc < 2 || seeds.empty()) throw std::invalid_argument("prop2_rate: need n_mc >= 2 and seeds");
  const double dt = check_grid_compatible(*model.grid1, model.beta1, epsilons);
  const double dt_ref = dt / 16.0;
  const double eps_max = *std::max_element(epsilons.begin(), epsilons.end());

  RateReport rep;
  rep.epsilons = epsilons;
  rep.target_exponent = 2.25;
  rep.seeds = seeds;

  const std::size_t K = epsilons.size();
  std::vector<double> per_sample(static_cast<std::size_t>(n_mc) * K, 0.0);
  std::vector<double> richardson(static_cast<std::size_t>(n_mc), 0.0);
  detail::parallel_for(static_cast<std::size_t>(n_mc), workers, [&](std::size_t i) {
    const auto seed = seed_for(seeds, static_cast<int>(i));
    const BrownianPath path = sample_brownian(t, t + eps_max, dt_ref, seed);
    const auto schedule = ControlSchedule::constant(control_index);
    const Trajectory ref = solve_rescaled(model, t, init, schedule, path, dt_ref, t + eps_max);
    const Trajectory fund =
        solve_euler_fundamental(model, t, init, schedule, path, dt, t + eps_max);
    const Trajectory coarse = solve_rescaled(model, t, init, schedule, path, dt, t + eps_max);
    for (std::size_t k = 0; k < K; ++k) {
      const double d =
          model.state_distance(ref.at_time(t + epsilons[k]), fund.at_time(t + epsilons[k]));
      per_sample[i * K + k] = d * d;
    }
    const double dr = model.state_distance(ref.at_time(t + eps_max), coarse.at_time(t + eps_max));
    richardson[i] = dr * dr;
  });
  finalize_report(rep, per_sample, n_mc);

  // Richardson check: the reference's own discretization error (estimated by
  // the dt vs dt/16 self-gap) should be well below the measured scheme gap.
  double self_err = 0.0;
  for (double r : richardson) self_err += r;
  self_err /= n_mc;
  std::size_t k_max = 0;
  for (std::size_t k = 0; k < K; ++k)
    if (epsilons[k] > epsilons[k_max]) k_max = k;
  rep.richardson_ratio = self_err / std::max(rep.errors[k_max], kErrorFloor);
  return rep;
}

}  // namespace pmv
