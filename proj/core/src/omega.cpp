#include "pmviab/omega.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace pmv {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// E|Z|^m for the standard normal; M_0 = 1, M_1 = sqrt(2/pi), M_m = (m-1) M_{m-2}.
double folded_moment(int m) {
  double even = 1.0;                                   // M_0
  double odd = std::sqrt(2.0 / std::numbers::pi);      // M_1
  for (int k = 2; k <= m; ++k) {
    if (k % 2 == 0)
      even *= (k - 1);
    else
      odd *= (k - 1);
  }
  return (m % 2 == 0) ? even : odd;
}

}  // namespace

double omega(double delta) {
  if (delta < 0.0) throw std::invalid_argument("omega: delta must be >= 0");
  return 2.0 * std::exp(delta * delta / 2.0) * normal_cdf(delta) - 1.0;
}

double omega_defect(double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("omega_defect: delta must be > 0");
  if (delta <= 0.5) {
    // (e^x - 1)^2 = sum_{m>=2} (2^m - 2)/m! x^m, so
    // defect = sum_{m>=2} (2^m - 2)/m! delta^{m-2} E|Z|^m.
    double acc = 0.0;
    double factorial = 1.0;  // m!
    double pow2 = 1.0;       // 2^m
    double dpow = 1.0;       // delta^{m-2}
    for (int m = 1; m <= 160; ++m) {
      factorial *= m;
      pow2 *= 2.0;
      if (m >= 2) {
        const double term = (pow2 - 2.0) / factorial * dpow * folded_moment(m);
        acc += term;
        if (m > 4 && term < 1e-17 * acc) break;
        dpow *= delta;
      }
    }
    return acc;
  }
  return (omega(2.0 * delta) - 2.0 * omega(delta)) / (delta * delta);
}

double omega_mc(double delta, std::int64_t n_samples, std::uint64_t seed) {
  if (n_samples <= 0) throw std::invalid_argument("omega_mc: need n_samples > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double acc = 0.0;
  for (std::int64_t i = 0; i < n_samples; ++i)
    acc += std::expm1(delta * std::abs(normal(rng)));
  return acc / static_cast<double>(n_samples);
}

}  // namespace pmv
