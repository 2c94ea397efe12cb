#pragma once

// Seeded generators shared by the property tests.

#include <cmath>

#include "sfm/random.hpp"
#include "sfm/stiefel.hpp"

namespace sfm::testing {

using matkit::Matrix;
using matkit::Vector;
using stiefel::SkewLift;
using stiefel::StiefelPoint;

inline SkewLift random_lift(Eigen::Index n, Eigen::Index p, double norm, Rng& rng) {
  Vector v = standard_normal(stiefel::manifold_dimension(n, p), 1, rng);
  return SkewLift::unflatten(n, p, v * (norm / v.norm()));
}

/// A point at lift distance `dist` from x in a random direction.
inline StiefelPoint random_neighbor(const StiefelPoint& x, double dist, Rng& rng) {
  return stiefel::retract(x, random_lift(x.n(), x.p(), dist, rng));
}

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline StiefelPoint circle(double alpha) {
  Matrix m(2, 1);
  m << std::cos(alpha), std::sin(alpha);
  return StiefelPoint(m);
}

}  // namespace sfm::testing
