#pragma once

#include <cstdint>

namespace pmv {

/// Folded-normal moment generating value
///   omega(delta) = E[e^{delta |Z|} - 1] = 2 e^{delta^2/2} Phi(delta) - 1,
/// Z standard normal, Phi the normal CDF. omega(0) = 0 exactly.
double omega(double delta);

/// (omega(2 delta) - 2 omega(delta)) / delta^2 for delta > 0.
///
/// Evaluated through 2*Int_0^inf (e^{delta r}-1)^2 dPhi(r), a nonnegative
/// integrand whose power series has positive coefficients, so small deltas
/// do not suffer the cancellation of the closed form. Tends to 1 as
/// delta -> 0+ and is increasing in delta.
double omega_defect(double delta);

/// Monte Carlo estimate of omega(delta) = E[e^{delta |Z|} - 1].
double omega_mc(double delta, std::int64_t n_samples, std::uint64_t seed);

}  // namespace pmv
