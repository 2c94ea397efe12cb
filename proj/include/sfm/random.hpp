#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace sfm {

/// All stochastic code draws from a 64-bit Mersenne Twister (std::mt19937_64).
using Rng = std::mt19937_64;

/// Seed of the substream used by trial `index` of a run seeded with `seed`.
/// The rule is a plain xor so any implementation can reproduce the streams.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) { return seed ^ index; }

inline Rng substream(std::uint64_t seed, std::uint64_t index) { return Rng(substream_seed(seed, index)); }

inline Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

}  // namespace sfm
