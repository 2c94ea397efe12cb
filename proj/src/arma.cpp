#include "sfm/mstats.hpp"

#include <string>

namespace sfm::mstats {

std::vector<std::complex<double>> ArmaModel::eigenvalues() const {
  Eigen::EigenSolver<Matrix> es(a, false);
  const Eigen::VectorXcd ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

ArmaModel arma_decompose(const Matrix& features, Eigen::Index p) {
  matkit::require_finite(features, "ARMA features");
  const Eigen::Index d = features.rows();
  const Eigen::Index t = features.cols();
  if (p < 1 || p > d || t < p + 1) {
    throw Error(ErrorCode::ConfigError, "arma_decompose needs 1 <= p <= d and T >= p + 1 (d = " + std::to_string(d) +
                                            ", T = " + std::to_string(t) + ", p = " + std::to_string(p) + ")");
  }
  const matkit::ThinSvd svd = matkit::thin_svd(features);
  const Vector s = svd.s.head(p);
  if (!(s(0) > 0.0) || !(s(p - 1) > 1e-12 * s(0))) {
    throw Error(ErrorCode::RankDeficient, "feature matrix has rank below " + std::to_string(p));
  }
  const Matrix v = svd.v.leftCols(p);
  const Matrix v_early = v.topRows(t - 1);  // V^T D2 V = v_early^T v_early
  const Matrix v_late = v.bottomRows(t - 1);  // V^T D1 V = v_late^T v_early
  const Matrix gram = v_early.transpose() * v_early;
  // X = (V^T D1 V)(V^T D2 V)^{-1}; gram is symmetric so X^T = gram^{-1} (v_early^T v_late).
  const Matrix xt = matkit::solve_linear(gram, v_early.transpose() * v_late);
  const Matrix a = s.asDiagonal() * xt.transpose() * s.cwiseInverse().asDiagonal();

  ArmaModel model{StiefelPoint(svd.u.leftCols(p)), a, s, StiefelPoint(v)};
  double radius = 0.0;
  for (const auto& ev : model.eigenvalues()) radius = std::max(radius, std::abs(ev));
  model.spectral_radius = radius;
  return model;
}

}  // namespace sfm::mstats
