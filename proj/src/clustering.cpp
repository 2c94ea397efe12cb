#include "sfm/mstats.hpp"

#include <algorithm>
#include <future>
#include <limits>
#include <numeric>
#include <string>

namespace sfm::mstats {

namespace {

void require_compatible(const ProductPoint& x, const ProductPoint& y) {
  const bool ok = x.u.n() == y.u.n() && x.u.p() == y.u.p() && x.v.has_value() == y.v.has_value() &&
                  (!x.v || (x.v->n() == y.v->n() && x.v->p() == y.v->p())) &&
                  x.euclidean.size() == y.euclidean.size();
  if (!ok) throw Error(ErrorCode::ShapeMismatch, "product points have different component shapes");
}

StiefelPoint stiefel_centroid(std::span<const StiefelPoint> members, CentroidMethod method) {
  const estimators::FrechetMeanResult inductive = estimators::ifme(members);
  if (method == CentroidMethod::inductive) return inductive.estimate;
  // Members outside the chart of the warm start cannot enter the batch mean.
  std::vector<StiefelPoint> usable;
  usable.reserve(members.size());
  for (const StiefelPoint& x : members) {
    if (stiefel::in_neighborhood(inductive.estimate, x)) usable.push_back(x);
  }
  if (usable.empty()) return inductive.estimate;
  return estimators::batch_fm(usable, inductive.estimate).estimate;
}

ProductPoint centroid_of(std::span<const ProductPoint> points, const std::vector<std::size_t>& members,
                         CentroidMethod method) {
  std::vector<StiefelPoint> us;
  std::vector<StiefelPoint> vs;
  us.reserve(members.size());
  Vector e = Vector::Zero(points[members.front()].euclidean.size());
  for (std::size_t i : members) {
    us.push_back(points[i].u);
    if (points[i].v) vs.push_back(*points[i].v);
    e += points[i].euclidean;
  }
  e /= static_cast<double>(members.size());
  ProductPoint c{stiefel_centroid(us, method), std::nullopt, std::move(e)};
  if (!vs.empty()) c.v = stiefel_centroid(vs, method);
  return c;
}

struct Assignment {
  std::vector<std::size_t> labels;
  std::vector<double> distances;
  double inertia = 0.0;
};

Assignment assign(std::span<const ProductPoint> points, const std::vector<ProductPoint>& centroids,
                  const ProductWeights& w) {
  Assignment a;
  a.labels.resize(points.size());
  a.distances.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < centroids.size(); ++j) {
      const double d = product_distance(points[i], centroids[j], w);
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    a.labels[i] = best_j;
    a.distances[i] = best;
    a.inertia += best * best;
  }
  return a;
}

}  // namespace

double product_distance(const ProductPoint& x, const ProductPoint& y, const ProductWeights& weights) {
  require_compatible(x, y);
  double sq = weights.u * (x.u.matrix() - y.u.matrix()).squaredNorm();
  if (x.v) sq += weights.v * (x.v->matrix() - y.v->matrix()).squaredNorm();
  sq += weights.euclidean * (x.euclidean - y.euclidean).squaredNorm();
  return std::sqrt(sq);
}

KMeansResult kmeans(std::span<const ProductPoint> points, const KMeansOptions& options) {
  const std::size_t count = points.size();
  const std::size_t k = options.k;
  if (k < 1 || k > count) {
    throw Error(ErrorCode::ConfigError, "kmeans needs 1 <= k <= #points (k = " + std::to_string(k) +
                                            ", points = " + std::to_string(count) + ")");
  }
  for (const ProductPoint& p : points) require_compatible(points.front(), p);

  // Farthest-first seeding.
  Rng rng(options.seed);
  std::vector<ProductPoint> centroids;
  centroids.reserve(k);
  centroids.push_back(points[std::uniform_int_distribution<std::size_t>(0, count - 1)(rng)]);
  std::vector<double> nearest(count, std::numeric_limits<double>::infinity());
  while (centroids.size() < k) {
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < count; ++i) {
      nearest[i] = std::min(nearest[i], product_distance(points[i], centroids.back(), options.weights));
      if (nearest[i] > far_d) {
        far_d = nearest[i];
        far = i;
      }
    }
    centroids.push_back(points[far]);
  }

  KMeansResult result;
  Assignment a = assign(points, centroids, options.weights);
  result.inertia.push_back(a.inertia);
  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < count; ++i) members[a.labels[i]].push_back(i);
    for (std::size_t j = 0; j < k; ++j) {
      if (!members[j].empty()) continue;
      // Refill an empty cluster with the point farthest from its centroid.
      std::size_t far = count;
      for (std::size_t i = 0; i < count; ++i) {
        if (members[a.labels[i]].size() < 2) continue;
        if (far == count || a.distances[i] > a.distances[far]) far = i;
      }
      auto& old = members[a.labels[far]];
      old.erase(std::find(old.begin(), old.end(), far));
      members[j].push_back(far);
      a.labels[far] = j;
      a.distances[far] = 0.0;
      ++result.reseeded;
    }

    std::vector<std::future<ProductPoint>> updates;
    updates.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
      updates.push_back(std::async(std::launch::async, [&, j] { return centroid_of(points, members[j], options.centroid); }));
    }
    for (std::size_t j = 0; j < k; ++j) centroids[j] = updates[j].get();

    Assignment next = assign(points, centroids, options.weights);
    result.inertia.push_back(next.inertia);
    result.iterations = iter + 1;
    const bool stable = next.labels == a.labels;
    a = std::move(next);
    if (stable) {
      result.converged = true;
      break;
    }
  }
  result.labels = std::move(a.labels);
  result.centroids = std::move(centroids);
  return result;
}

double clustering_accuracy(std::span<const std::size_t> labels, std::span<const std::size_t> truth, std::size_t k) {
  if (labels.size() != truth.size()) throw Error(ErrorCode::ShapeMismatch, "label vectors differ in length");
  if (k < 1 || k > 8) throw Error(ErrorCode::ConfigError, "clustering_accuracy supports 1 <= k <= 8");
  if (labels.empty()) return 1.0;
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::size_t best = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < k && perm[labels[i]] == truth[i]) ++hits;
    }
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(labels.size());
}

}  // namespace sfm::mstats
