#include "pmviab/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace pmv {

Field Nonlinearity::apply(const Field& phi) const {
  Field out = phi;
  for (int i = 0; i < out.size(); ++i) out.values[i] = fn_(phi.values[i]);
  return out;
}

Nonlinearity Nonlinearity::probe(std::string name, std::function<double(double)> fn,
                                 double declared_lip, double declared_mono) {
  Nonlinearity b;
  b.family_ = std::move(name);
  b.fn_ = std::move(fn);
  b.lip_ = declared_lip;
  b.mono_ = declared_mono;
  return b;
}

namespace {

double param(const std::map<std::string, double>& params, const std::string& key,
             double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

Nonlinearity make_beta(const std::string& family, const std::map<std::string, double>& params,
                       bool may_be_zero) {
  Nonlinearity b;
  b.family_ = family;
  b.may_be_zero_ = may_be_zero;
  if (family == "linear") {
    const double a = param(params, "a", 1.0);
    if (!(a > 0.0)) throw std::invalid_argument("make_beta: linear requires a > 0");
    b.fn_ = [a](double r) { return a * r; };
    b.lip_ = a;
    b.mono_ = a;
  } else if (family == "sin_perturbed") {
    const double a = param(params, "a", 1.0);
    const double bb = param(params, "b", 0.5);
    if (!(a - std::abs(bb) > 0.0))
      throw std::invalid_argument("make_beta: sin_perturbed requires a - |b| > 0");
    b.fn_ = [a, bb](double r) { return a * r + bb * std::sin(r); };
    b.lip_ = a + std::abs(bb);
    b.mono_ = a - std::abs(bb);
  } else if (family == "saturated_power") {
    const double m = param(params, "m", 2.0);
    const double R = param(params, "R", 1.0);
    const double alpha = param(params, "alpha", 0.5);
    const double L = param(params, "L", 1.5);
    if (!(m >= 1.0 && R > 0.0 && alpha > 0.0 && L > alpha))
      throw std::invalid_argument("make_beta: saturated_power requires m>=1, R>0, 0<alpha<L");
    const double gain = (L - alpha) / (m * std::pow(R, m - 1.0));
    b.fn_ = [m, R, alpha, gain](double r) {
      const double clamped = std::min(std::abs(r), R);
      return alpha * r + gain * std::copysign(std::pow(clamped, m), r);
    };
    b.lip_ = L;
    b.mono_ = alpha;
  } else if (family == "zero") {
    if (!may_be_zero)
      throw std::invalid_argument("make_beta: beta = 0 is only legal with may_be_zero");
    b.fn_ = [](double) { return 0.0; };
    b.lip_ = 0.0;
    b.mono_ = 0.0;
  } else {
    throw std::invalid_argument("make_beta: unknown family '" + family + "'");
  }
  if (b.mono_ > b.lip_) throw std::logic_error("make_beta: mono > lip");
  return b;
}

AssumptionCertificate validate_assumptions(const Nonlinearity& beta, int budget,
                                           std::uint64_t seed, double range) {
  if (budget < 10000) throw std::invalid_argument("validate_assumptions: budget must be >= 1e4");
  AssumptionCertificate cert;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  auto secant = [&](double r, double s) {
    const double slope = (beta(r) - beta(s)) / (r - s);
    lo = std::min(lo, slope);
    hi = std::max(hi, slope);
  };
  // Near-tangent sweep picks up derivative extrema (e.g. cos r = -1).
  const int n_sweep = budget / 2;
  for (int i = 0; i < n_sweep; ++i) {
    const double r = -range + 2.0 * range * i / (n_sweep - 1);
    secant(r, r + 1e-6);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-range, range);
  for (int i = 0; i < budget - n_sweep; ++i) {
    const double r = uni(rng);
    double s = uni(rng);
    if (r == s) s += 1e-3;
    secant(r, s);
  }
  cert.lip_est = std::max(std::abs(lo), std::abs(hi));
  cert.mono_est = lo;
  cert.pass = cert.mono_est >= beta.mono() - 1e-9 && cert.lip_est <= beta.lip() + 1e-9;
  return cert;
}

Field CouplingMap::eval(const Field& x, const YArg& y, const Control& u) const {
  const GridPtr& grid = grid_ ? grid_ : x.domain;
  if (family_ == "zero") return Field::zero(grid);
  if (family_ == "decay") {
    if (y.is_scalar)
      throw std::invalid_argument("CouplingMap: decay is scalar-valued in reduced mode");
    Field out = *y.field;
    out.values *= -c_;
    return out;
  }
  if (family_ == "damping") {
    Field out = x;
    out.values *= -u.at(0);
    return out;
  }
  if (family_ == "affine") {
    Field out{grid, Eigen::VectorXd::Zero(grid->size())};
    if (ax_ != 0.0) out.values += ax_ * x.values;
    if (ay_ != 0.0) {
      if (y.is_scalar)
        throw std::invalid_argument("CouplingMap: affine ay requires a field-valued y");
      out.values += ay_ * y.field->values;
    }
    if (g0_.size() > 0) out.values += g0_.values;
    if (gu_.size() > 0) out.values += u.at(0) * gu_.values;
    return out;
  }
  throw std::logic_error("CouplingMap::eval: unknown family");
}

double CouplingMap::eval_scalar(const Field& x, double y, const Control& u) const {
  (void)x;
  (void)u;
  if (family_ == "zero") return 0.0;
  if (family_ == "decay") return -c_ * y;
  throw std::invalid_argument("CouplingMap: family '" + family_ + "' is not scalar-valued");
}

CouplingMap make_coupling(const std::string& family, const std::map<std::string, double>& params,
                          const ControlSet& controls, const GridPtr& grid) {
  if (controls.size() == 0) throw std::invalid_argument("make_coupling: empty control set");
  CouplingMap f;
  f.family_ = family;
  f.grid_ = grid;
  if (family == "zero") {
    // lip = sup0 = 0
  } else if (family == "decay") {
    f.c_ = param(params, "c", 1.0);
    if (!(f.c_ >= 0.0)) throw std::invalid_argument("make_coupling: decay requires c >= 0");
    f.lip_ = f.c_;
  } else if (family == "damping") {
    for (const auto& u : controls.points) {
      if (u.at(0) < 0.0)
        throw std::invalid_argument("make_coupling: damping requires nonnegative strengths");
      f.lip_ = std::max(f.lip_, u.at(0));
    }
  } else if (family == "affine") {
    f.ax_ = param(params, "ax", 0.0);
    f.ay_ = param(params, "ay", 0.0);
    const double g0_amp = param(params, "g0_amp", 0.0);
    const double gu_amp = param(params, "gu_amp", 0.0);
    if (g0_amp != 0.0) {
      f.g0_ = grid->eigenfield(static_cast<int>(param(params, "g0_j", 1)),
                               static_cast<int>(param(params, "g0_k", 1)));
      f.g0_.values *= g0_amp;
    }
    if (gu_amp != 0.0) {
      f.gu_ = grid->eigenfield(static_cast<int>(param(params, "gu_j", 1)),
                               static_cast<int>(param(params, "gu_k", 1)));
      f.gu_.values *= gu_amp;
    }
    // Operator norms of ax I and ay I in H^{-1}.
    f.lip_ = std::max(std::abs(f.ax_), std::abs(f.ay_));
    for (const auto& u : controls.points) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(grid->size());
      if (f.g0_.size() > 0) v += f.g0_.values;
      if (f.gu_.size() > 0) v += u.at(0) * f.gu_.values;
      const Field probe{grid, v};
      f.sup0_ = std::max(f.sup0_, grid->norm(probe, Metric::Hminus1));
    }
  } else if (family == "laplacian_probe") {
    // f = A x has L2 -> L2 norm lambda_max = O(h^{-2}); the restriction to
    // L2 data is unbounded under refinement, violating assumption (iv).
    throw std::invalid_argument(
        "make_coupling: laplacian_probe has an unbounded L2 restriction (rejected)");
  } else {
    throw std::invalid_argument("make_coupling: unknown family '" + family + "'");
  }
  return f;
}

double certify_coupling_lipschitz(const CouplingMap& f, const GridPtr& grid, bool scalar_mode,
                                  const ControlSet& controls, int n_probes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_field = [&]() {
    Field out{grid, Eigen::VectorXd(grid->size())};
    for (int i = 0; i < out.size(); ++i) out.values[i] = normal(rng);
    return out;
  };
  double worst = 0.0;
  for (int p = 0; p < n_probes; ++p) {
    const Field x = random_field();
    const Field xp = random_field();
    const Control& u = controls[static_cast<std::size_t>(p) % controls.size()];
    double den = grid->norm(Field{grid, x.values - xp.values}, Metric::Hminus1);
    double num = 0.0;
    if (scalar_mode) {
      const double y = normal(rng), yp = normal(rng);
      den += std::abs(y - yp);
      if (f.scalar_valued(true)) {
        num = std::abs(f.eval_scalar(x, y, u) - f.eval_scalar(xp, yp, u));
      } else {
        const Field a = f.eval(x, YArg::of(y), u);
        const Field b = f.eval(xp, YArg::of(yp), u);
        num = grid->norm(Field{grid, a.values - b.values}, Metric::Hminus1);
      }
    } else {
      const Field y = random_field(), yp = random_field();
      den += grid->norm(Field{grid, y.values - yp.values}, Metric::Hminus1);
      const Field a = f.eval(x, YArg::of(y), u);
      const Field b = f.eval(xp, YArg::of(yp), u);
      num = grid->norm(Field{grid, a.values - b.values}, Metric::Hminus1);
    }
    if (den > 0.0) worst = std::max(worst, num / den);
  }
  return worst;
}

}  // namespace pmv
