#include "pmviab/runner.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>

#include <json.hpp>

#include "pmviab/config.hpp"
#include "pmviab/omega.hpp"
#include "pmviab/report.hpp"

namespace pmv {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct CheckRow {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

Field random_field(const GridPtr& grid, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Field f{grid, Eigen::VectorXd(grid->size())};
  for (int i = 0; i < f.size(); ++i) f.values[i] = normal(rng);
  return f;
}

double dense_sigma_max(const Eigen::MatrixXd& g) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(g.cols()).normalized();
  double sigma2 = 0.0;
  for (int it = 0; it < 300; ++it) {
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

json provenance_json(const Provenance& prov) {
  return json{{"config_hash", prov.config_hash}, {"seeds", prov.seeds},
              {"version", prov.version}};
}

// ---------------------------------------------------------------------------
// validate-operators: spatial-core + drift-group invariant suite
// ---------------------------------------------------------------------------
int run_validate_operators(const BuiltExperiment& built, const fs::path& out,
                           const Provenance& prov) {
  const auto& cfg = built.config;
  const GridPtr grid = built.model.grid1;
  const auto& group = built.model.gamma1;
  const int N = grid->size();
  std::vector<CheckRow> checks;
  auto add = [&](const std::string& name, double measured, double tol) {
    checks.push_back(CheckRow{name, measured, tol, measured <= tol});
  };

  // Eigenvalue formula against the assembled stencil.
  {
    double worst = 0.0;
    for (int p = 0; p < N; ++p) {
      const auto [j, k] = grid->mode_of(p);
      const Field e = grid->eigenfield(j, k);
      Field ae = grid->laplacian_apply(e);
      ae.values -= grid->eigenvalue(j, k) * e.values;
      worst = std::max(worst, grid->norm(ae, Metric::L2) / grid->eigenvalue(j, k));
    }
    add("eigenpair_residual", worst, 1e-10);
  }
  // L2 orthonormality of the eigenbasis.
  {
    const Eigen::MatrixXd& phi = grid->eigenvector_matrix();
    const double h2 = grid->spacing() * grid->spacing();
    const Eigen::MatrixXd gram = h2 * (phi.transpose() * phi);
    add("eigvec_l2_orthonormality",
        (gram - Eigen::MatrixXd::Identity(N, N)).cwiseAbs().maxCoeff(), 1e-10);
  }
  // {sqrt(lambda) e} is H^{-1}-orthonormal.
  {
    const Eigen::MatrixXd& phi = grid->eigenvector_matrix();
    const double h2 = grid->spacing() * grid->spacing();
    const Eigen::MatrixXd a_inv = grid->dense_power(-1.0);
    Eigen::MatrixXd gram = h2 * (phi.transpose() * (a_inv * phi));
    for (int q = 0; q < N; ++q)
      for (int p = 0; p < N; ++p)
        gram(p, q) *= std::sqrt(grid->eigenvalues()[p] * grid->eigenvalues()[q]);
    add("scaled_basis_hm1_orthonormality",
        (gram - Eigen::MatrixXd::Identity(N, N)).cwiseAbs().maxCoeff(), 1e-10);
  }

  std::mt19937_64 rng(built.config.seeds[0]);
  // Parseval in H^{-1}, norm chain, interpolation inequality, symmetry.
  {
    double parseval = 0.0, chain = 0.0, interp = 0.0, sym = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const Field f = random_field(grid, rng);
      const Field g = random_field(grid, rng);
      const double hm1 = grid->inner(f, f, Metric::Hminus1);
      const double l2 = grid->inner(f, f, Metric::L2);
      const double h10 = grid->inner(f, f, Metric::H10);
      const Eigen::MatrixXd c = grid->to_modes(f);
      double sum = 0.0;
      for (int p = 0; p < N; ++p) sum += c.data()[p] * c.data()[p] / grid->eigenvalues()[p];
      parseval = std::max(parseval, std::abs(sum - hm1) / hm1);
      chain = std::max(chain, (hm1 - l2 / grid->lambda_min()) / hm1);
      interp = std::max(interp, (l2 * l2 - h10 * hm1) / (l2 * l2));
      for (Metric metric : {Metric::L2, Metric::Hminus1, Metric::H10})
        sym = std::max(sym, std::abs(grid->inner(f, g, metric) - grid->inner(g, f, metric)) /
                                std::max(1.0, std::abs(grid->inner(f, g, metric))));
    }
    add("parseval_hm1", parseval, 1e-10);
    add("norm_chain_hm1_le_l2_over_lambda1", chain, 1e-12);
    add("interpolation_l2sq_le_h10_hm1", interp, 1e-12);
    add("inner_product_symmetry", sym, 1e-12);
  }

  // Drift admissibility.
  {
    const DriftField drift = build_drift(grid, cfg.stream1);
    add("drift_boundary_tangency", drift.max_boundary_normal(), 0.0);
    const double h = grid->spacing();
    const double amp = std::abs(cfg.stream1.amplitude);
    const int deg = std::max(cfg.stream1.mode_x, cfg.stream1.mode_y);
    const double div_tol = cfg.stream1.name == "zero"
                               ? 0.0
                               : 2.0 * amp * std::pow(M_PI * deg, 3) * h * h;
    add("drift_divergence_order_h2", drift.max_abs_divergence(), div_tol);
  }

  // Group identities: skew form, isometry, adjoint law, group property.
  {
    double skew = 0.0, iso = 0.0, adj = 0.0, grp = 0.0;
    const std::vector<double> shifts{-5.0, -1.0, -0.1, 0.1, 1.0, 5.0};
    for (int trial = 0; trial < 100; ++trial) {
      const Field f = random_field(grid, rng);
      const Field g = random_field(grid, rng);
      const double nf = grid->norm(f, Metric::Hminus1);
      const double ng = grid->norm(g, Metric::Hminus1);
      Field bf{grid, group.generator() * f.values};
      skew = std::max(skew, std::abs(grid->inner(bf, f, Metric::Hminus1)) / (nf * nf));
      const double s = shifts[static_cast<std::size_t>(trial) % shifts.size()];
      const Field ef = group.apply(s, f);
      iso = std::max(iso, std::abs(grid->norm(ef, Metric::Hminus1) - nf) / nf);
      adj = std::max(adj, std::abs(grid->inner(ef, g, Metric::Hminus1) -
                                   grid->inner(f, group.apply(-s, g), Metric::Hminus1)) /
                              (nf * ng));
      if (trial < 20) {
        const double r = 0.7 * s;
        Field lhs = group.apply(s + r, f);
        lhs.values -= group.apply(s, group.apply(r, f)).values;
        grp = std::max(grp, grid->norm(lhs, Metric::Hminus1) / nf);
      }
    }
    add("skew_form", skew, 1e-9);
    add("group_isometry_hm1", iso, 1e-9);
    add("adjoint_law", adj, 1e-9);
    add("group_property", grp, 1e-9);
  }

  // Operator-norm bound ||e^{sB} - I||_{H^-1 -> L2} <= e^{|s| ||B||} - 1.
  {
    const Eigen::MatrixXd a_sqrt = grid->dense_power(0.5);
    double worst = 0.0;
    double l2_norm = 0.0;
    for (double s : {-1.0, -0.5, 0.5, 1.0}) {
      const Eigen::MatrixXd es = group.dense_exp(s);
      const double lhs = dense_sigma_max((es - Eigen::MatrixXd::Identity(N, N)) * a_sqrt);
      const double rhs = std::expm1(std::abs(s) * group.op_norm());
      worst = std::max(worst, lhs - rhs);
      l2_norm = std::max(l2_norm, dense_sigma_max(es));
    }
    add("exp_minus_id_opnorm_bound", worst, 1e-8);
    add("l2_invariance_opnorm", l2_norm, 1e3);
  }

  json manifest;
  manifest["provenance"] = provenance_json(prov);
  manifest["checks"] = json::array();
  bool all_pass = true;
  for (const auto& c : checks) {
    manifest["checks"].push_back(json{{"name", c.name}, {"measured", c.measured},
                                      {"tolerance", c.tolerance}, {"pass", c.pass}});
    all_pass = all_pass && c.pass;
  }
  manifest["all_pass"] = all_pass;
  write_text_file(out / "operators_manifest.json", manifest.dump(2) + "\n");
  return all_pass ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------
// omega: table of omega and the defect bound
// ---------------------------------------------------------------------------
int run_omega(const BuiltExperiment& built, const fs::path& out, const Provenance& prov) {
  CsvWriter csv(out / "omega_table.csv", prov, {"delta", "omega", "defect"});
  double defect_max = 0.0;
  bool monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 20; ++k) {
    const double delta = std::ldexp(1.0, -k);
    const double om = omega(delta);
    const double def = omega_defect(delta);
    csv.row_numeric({delta, om, def});
    defect_max = std::max(defect_max, def);
    if (def > prev + 1e-9) monotone = false;
    prev = def;
  }
  const auto n_mc = static_cast<std::int64_t>(std::max(built.config.n_mc, 10000));
  const double mc = omega_mc(1.0, n_mc, built.config.seeds[0]);
  json summary;
  summary["provenance"] = provenance_json(prov);
  summary["omega_at_zero"] = omega(0.0);
  summary["omega_at_one"] = omega(1.0);
  summary["omega_at_one_mc"] = mc;
  summary["mc_samples"] = n_mc;
  summary["defect_max_over_dyadic"] = defect_max;
  summary["defect_monotone_nonincreasing"] = monotone;
  write_text_file(out / "omega_summary.json", summary.dump(2) + "\n");
  return kOk;
}

// ---------------------------------------------------------------------------
// rates: prop1 + prop2 exponent studies
// ---------------------------------------------------------------------------
json rate_report_json(const RateReport& rep, const Provenance& prov) {
  json j;
  j["provenance"] = provenance_json(prov);
  if (rep.degenerate) {
    j["slope"] = "NA";
    j["intercept"] = "NA";
  } else {
    j["slope"] = rep.slope;
    j["intercept"] = rep.intercept;
  }
  j["c_emp"] = rep.c_emp;
  j["target_exponent"] = rep.target_exponent;
  j["n_mc"] = rep.n_mc;
  j["seeds"] = rep.seeds;
  j["wide_confidence"] = rep.wide_confidence;
  if (rep.richardson_ratio > 0.0) j["richardson_ratio"] = rep.richardson_ratio;
  return j;
}

void write_rate_csv(const fs::path& path, const RateReport& rep, const Provenance& prov) {
  CsvWriter csv(path, prov, {"epsilon", "error", "stderr"});
  for (std::size_t k = 0; k < rep.epsilons.size(); ++k)
    csv.row_numeric({rep.epsilons[k], rep.errors[k], rep.stderrs[k]});
}

int run_rates(const BuiltExperiment& built, const fs::path& out, const Provenance& prov,
              unsigned workers) {
  const auto& cfg = built.config;
  std::vector<double> eps = cfg.epsilons;
  if (eps.empty()) throw std::invalid_argument("rates: config.epsilons must be non-empty");
  const RateReport p1 = prop1_rate(built.model, built.init, cfg.t0, eps, cfg.n_mc, cfg.seeds,
                                   cfg.rate_control, workers);
  write_rate_csv(out / "prop1_rates.csv", p1, prov);
  write_text_file(out / "prop1_summary.json", rate_report_json(p1, prov).dump(2) + "\n");

  const RateReport p2 = prop2_rate(built.model, built.init, cfg.t0, eps, cfg.n_mc, cfg.seeds,
                                   cfg.rate_control, workers);
  write_rate_csv(out / "prop2_rates.csv", p2, prov);
  write_text_file(out / "prop2_summary.json", rate_report_json(p2, prov).dump(2) + "\n");
  return kOk;
}

// ---------------------------------------------------------------------------
// tangency
// ---------------------------------------------------------------------------
int run_tangency(const BuiltExperiment& built, const fs::path& out, const Provenance& prov,
                 unsigned workers) {
  const auto& cfg = built.config;
  if (cfg.epsilons.empty()) throw std::invalid_argument("tangency: config.epsilons empty");
  const TangencyProfile prof = tangency_profile(built.constraint, built.model, cfg.t0,
                                                built.init, cfg.epsilons, cfg.n_mc, cfg.seeds,
                                                workers);
  CsvWriter csv(out / "tangency_profile.csv", prov, {"epsilon", "q", "argmin_control"});
  for (std::size_t k = 0; k < prof.epsilons.size(); ++k)
    csv.row({format_double(prof.epsilons[k]), format_double(prof.q_values[k]),
             std::to_string(prof.argmin_control[k])});
  json summary;
  summary["provenance"] = provenance_json(prov);
  summary["liminf_estimate"] = prof.liminf_estimate;
  summary["q_per_control"] = prof.q_per_control;
  write_text_file(out / "tangency_summary.json", summary.dump(2) + "\n");
  return kOk;
}

// ---------------------------------------------------------------------------
// approx-solve: construct + validate eps-approximate records
// ---------------------------------------------------------------------------
json clause_report_json(const SixClauseReport& report) {
  json out = json::array();
  for (const auto& e : report.entries)
    out.push_back(json{{"name", e.name}, {"pass", e.pass}, {"slack", e.slack}, {"note", e.note}});
  return out;
}

int run_approx_solve(const BuiltExperiment& built, const fs::path& out, const Provenance& prov,
                     unsigned workers) {
  (void)workers;
  const auto& cfg = built.config;
  if (cfg.epsilons.empty()) throw std::invalid_argument("approx-solve: config.epsilons empty");
  json summary;
  summary["provenance"] = provenance_json(prov);
  summary["records"] = json::array();
  for (std::size_t idx = 0; idx < cfg.epsilons.size(); ++idx) {
    const double eps = cfg.epsilons[idx];
    const EpsApproxRecord rec = construct_eps_approx(built.constraint, built.model, cfg.t0,
                                                     cfg.t0 + cfg.horizon, built.init, eps,
                                                     cfg.seeds[0]);
    const SixClauseReport clauses = validate_eps_approx(rec, built.constraint, built.model, eps);

    CsvWriter csv(out / ("eps_approx_steps_" + std::to_string(idx) + ".csv"), prov,
                  {"t_start", "delta", "control", "p_norm2", "correction_energy"});
    for (const auto& node : rec.nodes)
      csv.row({format_double(node.t_start), format_double(node.delta),
               std::to_string(node.control), format_double(node.p_norm2),
               format_double(node.correction_energy)});

    std::vector<double> gaps;
    for (int k = 9; k >= 2; --k) {
      const double gap = std::ldexp(1.0, -k);
      if (gap >= rec.dt && gap <= rec.t_bar - rec.t) gaps.push_back(gap);
    }
    const InitialEstimateReport est = appendix_initial_estimate(rec, built.model, gaps);

    json rec_json;
    rec_json["eps"] = eps;
    rec_json["t_bar"] = rec.t_bar;
    rec_json["complete"] = rec.complete;
    rec_json["diagnostic"] = rec.diagnostic;
    rec_json["dt"] = rec.dt;
    rec_json["n_nodes"] = rec.nodes.size();
    rec_json["correction_energy"] = rec.correction_energy();
    rec_json["clauses"] = clause_report_json(clauses);
    rec_json["all_clauses_pass"] = clauses.all_pass;
    rec_json["initial_estimate_slope"] = est.slope;
    rec_json["initial_estimate_c_emp"] = est.c_emp;
    summary["records"].push_back(rec_json);
  }
  write_text_file(out / "eps_approx_summary.json", summary.dump(2) + "\n");
  return kOk;
}

// ---------------------------------------------------------------------------
// near-viability
// ---------------------------------------------------------------------------
int run_near_viability(const BuiltExperiment& built, const fs::path& out, const Provenance& prov,
                       unsigned workers) {
  const auto& cfg = built.config;
  if (cfg.epsilons.empty()) throw std::invalid_argument("near-viability: config.epsilons empty");
  const NearViabilityReport report =
      near_viability_gap(built.constraint, built.model, cfg.t0, cfg.t0 + cfg.horizon, built.init,
                         cfg.epsilons, cfg.n_mc, cfg.seeds, workers);
  CsvWriter csv(out / "near_viability.csv", prov, {"policy", "gap", "complete"});
  for (const auto& p : report.policies)
    csv.row({p.policy, format_double(p.gap), p.complete ? "1" : "0"});
  json summary;
  summary["provenance"] = provenance_json(prov);
  summary["gap"] = report.gap;
  write_text_file(out / "near_viability_summary.json", summary.dump(2) + "\n");
  return kOk;
}

// ---------------------------------------------------------------------------
// stabilize: sweep over c
// ---------------------------------------------------------------------------
int run_stabilize(const BuiltExperiment& built, const fs::path& out, const Provenance& prov) {
  const auto& cfg = built.config;
  json summary;
  summary["provenance"] = provenance_json(prov);
  summary["runs"] = json::array();
  for (std::size_t idx = 0; idx < cfg.c_values.size(); ++idx) {
    const double c = cfg.c_values[idx];
    const StabilizationConfig stab = built.stabilization(c);
    const double dt =
        cfg.dt > 0.0 ? cfg.dt : snapped_step(*built.model.grid1, built.model.beta1, cfg.horizon);
    const BrownianPath path = sample_brownian(0.0, cfg.horizon, dt, cfg.seeds[0]);
    const double eta0 = built.init.y.is_scalar
                            ? built.init.y.scalar
                            : std::pow(built.model.grid1->norm(built.init.x, Metric::Hminus1), 2);
    const DecayReport report = run_stabilization(stab, built.init.x, eta0, cfg.horizon, dt, path);

    CsvWriter csv(out / ("stabilization_decay_" + std::to_string(idx) + ".csv"), prov,
                  {"s", "norm_sq", "bound", "margin", "control", "feasible"});
    for (const auto& row : report.rows)
      csv.row({format_double(row.s), format_double(row.norm_sq), format_double(row.bound),
               format_double(row.margin), std::to_string(row.control),
               row.feasible ? "1" : "0"});

    summary["runs"].push_back(json{{"c", c},
                                   {"pass", report.pass},
                                   {"first_violation", report.first_violation},
                                   {"tol_decay", report.tol_decay},
                                   {"infeasible_nodes", report.infeasible_nodes},
                                   {"max_backtransform_mismatch",
                                    report.max_backtransform_mismatch}});
  }
  write_text_file(out / "stabilization_summary.json", summary.dump(2) + "\n");
  return kOk;
}

}  // namespace

int run_subcommand(const std::string& subcommand, const std::string& config_path,
                   const std::string& out_override, unsigned workers) {
  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::from_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kBadConfig;
  }

  try {
    const fs::path out = out_override.empty() ? fs::path(cfg.out_dir) : fs::path(out_override);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) {
      std::cerr << "io error: cannot create output dir " << out << ": " << ec.message() << "\n";
      return kIoError;
    }

    const BuiltExperiment built = build_experiment(cfg);
    Provenance prov;
    prov.config_hash = cfg.config_hash();
    prov.seeds = cfg.seeds;

    if (subcommand == "validate-operators") return run_validate_operators(built, out, prov);
    if (subcommand == "omega") return run_omega(built, out, prov);
    if (subcommand == "rates") return run_rates(built, out, prov, workers);
    if (subcommand == "tangency") return run_tangency(built, out, prov, workers);
    if (subcommand == "approx-solve") return run_approx_solve(built, out, prov, workers);
    if (subcommand == "near-viability") return run_near_viability(built, out, prov, workers);
    if (subcommand == "stabilize") return run_stabilize(built, out, prov);
    std::cerr << "unknown subcommand '" << subcommand << "'\n";
    return kBadConfig;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
}

}  // namespace pmv
