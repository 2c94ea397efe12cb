#include "sfm/mstats.hpp"

#include <algorithm>
#include <string>

namespace sfm::mstats {

double PgaModel::explained_ratio(Eigen::Index k) const {
  if (!(total_variance > 0.0)) return 1.0;
  k = std::clamp<Eigen::Index>(k, 0, explained_variance.size());
  return explained_variance.head(k).sum() / total_variance;
}

PgaModel pga_fit(std::span<const StiefelPoint> samples, Eigen::Index k) {
  if (samples.empty()) throw Error(ErrorCode::InsufficientData, "pga_fit: no samples");
  const Eigen::Index n = samples.front().n();
  const Eigen::Index p = samples.front().p();
  const Eigen::Index dim = stiefel::manifold_dimension(n, p);
  if (k < 0 || k > dim) {
    throw Error(ErrorCode::ConfigError, "pga_fit: k = " + std::to_string(k) + " exceeds dimension " +
                                            std::to_string(dim));
  }
  const StiefelPoint warm = estimators::ifme(samples).estimate;
  const StiefelPoint mean = estimators::batch_fm(samples, warm).estimate;

  Matrix coords(static_cast<Eigen::Index>(samples.size()), dim);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    coords.row(static_cast<Eigen::Index>(i)) = stiefel::lift(mean, samples[i]).flatten().transpose();
  }
  const Matrix moment = coords.transpose() * coords / static_cast<double>(samples.size());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(moment);
  // Eigen returns ascending eigenvalues.
  const Vector values = eig.eigenvalues().reverse().cwiseMax(0.0);
  const Matrix vectors = eig.eigenvectors().rowwise().reverse();

  PgaModel model{mean, vectors.leftCols(k), values, moment.trace()};
  return model;
}

StiefelPoint pga_reconstruct(const PgaModel& model, const StiefelPoint& x, Eigen::Index k) {
  if (k < 0 || k > model.components()) {
    throw Error(ErrorCode::ConfigError, "pga_reconstruct: model has " + std::to_string(model.components()) +
                                            " components, asked for " + std::to_string(k));
  }
  if (k == 0) return model.mean;
  const Vector v = stiefel::lift(model.mean, x).flatten();
  const Matrix basis = model.directions.leftCols(k);
  const Vector projected = basis * (basis.transpose() * v);
  return stiefel::retract(model.mean, stiefel::SkewLift::unflatten(model.mean.n(), model.mean.p(), projected));
}

}  // namespace sfm::mstats
