#pragma once

#include <cstdint>
#include <vector>

namespace pmv {

/// One-dimensional Brownian path sample on a uniform time grid with
/// W(t0) = 0 and i.i.d. N(0, step) increments under the given seed.
struct BrownianPath {
  double t0 = 0.0;
  double t1 = 0.0;
  double step = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> values;  // W at t0 + m*step

  /// W at a grid-aligned time; throws if t is not (numerically) a node.
  double value_at(double t) const;

  /// W(s) - W(t) for grid-aligned s, t.
  double increment(double t, double s) const { return value_at(s) - value_at(t); }
};

/// Samples a path over [t0, t1]; (t1 - t0) must be an integer multiple of step.
BrownianPath sample_brownian(double t0, double t1, double step, std::uint64_t seed);

/// Deterministic per-cell seed derivation (splitmix64 of base ^ f(index)).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace pmv
