#include "pmviab/brownian.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace pmv {

double BrownianPath::value_at(double t) const {
  const double pos = (t - t0) / step;
  const auto idx = static_cast<long long>(std::llround(pos));
  if (idx < 0 || idx >= static_cast<long long>(values.size()) ||
      std::abs(pos - static_cast<double>(idx)) > 1e-6)
    throw std::out_of_range("BrownianPath::value_at: time not on the path grid");
  return values[static_cast<std::size_t>(idx)];
}

BrownianPath sample_brownian(double t0, double t1, double step, std::uint64_t seed) {
  if (!(step > 0.0)) throw std::invalid_argument("sample_brownian: step must be > 0");
  if (!(t1 > t0)) throw std::invalid_argument("sample_brownian: need t1 > t0");
  const double span = (t1 - t0) / step;
  const auto n_steps = static_cast<long long>(std::llround(span));
  if (n_steps < 1 || std::abs(span - static_cast<double>(n_steps)) > 1e-9 * std::max(1.0, span))
    throw std::invalid_argument("sample_brownian: (t1 - t0) must be a multiple of step");

  BrownianPath path;
  path.t0 = t0;
  path.t1 = t1;
  path.step = step;
  path.seed = seed;
  path.values.resize(static_cast<std::size_t>(n_steps) + 1);
  path.values[0] = 0.0;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sd = std::sqrt(step);
  for (std::size_t m = 1; m < path.values.size(); ++m)
    path.values[m] = path.values[m - 1] + sd * normal(rng);
  return path;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finalizer over the combined word.
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace pmv
