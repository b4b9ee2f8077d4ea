#pragma once

#include "ssdr/core_data.hpp"
#include "ssdr/kdtree.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace ssdr {

/// Pair count above which chamfer distances go through k-d trees.
inline constexpr double kChamferIndexThreshold = 4096;

namespace detail {
template <typename DerivedA, typename DerivedB>
void require_point_sets(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("chamfer distance of an empty set");
  if (a.cols() != b.cols()) throw std::invalid_argument("point sets differ in dimension");
}

// Mean over rows of `from` of the squared distance to the nearest row of `to`.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar mean_nearest_sq_scan(const Eigen::MatrixBase<DerivedA>& from,
                                               const Eigen::MatrixBase<DerivedB>& to) {
  using Scalar = typename DerivedA::Scalar;
  Scalar sum(0);
  for (Eigen::Index i = 0; i < from.rows(); ++i) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index j = 0; j < to.rows(); ++j) {
      const Scalar d = squared_distance(from.row(i), to.row(j));
      if (d < best) best = d;
    }
    sum += best;
  }
  return sum / Scalar(from.rows());
}

template <typename DerivedA, typename Scalar>
Scalar mean_nearest_sq_indexed(const Eigen::MatrixBase<DerivedA>& from, const KdTree<Scalar>& to) {
  Scalar sum(0);
  for (Eigen::Index i = 0; i < from.rows(); ++i) sum += to.nearest(from.row(i)).first;
  return sum / Scalar(from.rows());
}
}  // namespace detail

/// Symmetric chamfer distance with squared Euclidean terms, by linear scan.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar chamfer_distance_scan(const Eigen::MatrixBase<DerivedA>& a,
                                                const Eigen::MatrixBase<DerivedB>& b) {
  detail::require_point_sets(a, b);
  return detail::mean_nearest_sq_scan(a, b) + detail::mean_nearest_sq_scan(b, a);
}

/// Same quantity through k-d trees; bit-identical to the scan.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar chamfer_distance_indexed(const Eigen::MatrixBase<DerivedA>& a,
                                                   const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  detail::require_point_sets(a, b);
  const KdTree<Scalar> tree_a(a), tree_b(b);
  return detail::mean_nearest_sq_indexed(a, tree_b) + detail::mean_nearest_sq_indexed(b, tree_a);
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar chamfer_distance(const Eigen::MatrixBase<DerivedA>& a,
                                           const Eigen::MatrixBase<DerivedB>& b) {
  if (double(a.rows()) * double(b.rows()) > kChamferIndexThreshold) return chamfer_distance_indexed(a, b);
  return chamfer_distance_scan(a, b);
}

/// exp(-(D_l + D_c)), floored at the smallest normal value so edges never
/// carry zero weight.
template <typename Scalar>
Scalar edge_weight(Scalar location, Scalar chamfer) {
  if (!(location >= Scalar(0)) || !(chamfer >= Scalar(0)) || !std::isfinite(location) ||
      !std::isfinite(chamfer)) {
    throw std::invalid_argument("edge distances must be finite and nonnegative");
  }
  const Scalar w = std::exp(-(location + chamfer));
  return w < std::numeric_limits<Scalar>::min() ? std::numeric_limits<Scalar>::min() : w;
}

/// Greedy max-min (farthest point) selection over the rows of `features`,
/// starting from row `start`; ties go to the lowest row index.
template <typename Derived>
std::vector<int> fps_select(const Eigen::MatrixBase<Derived>& features, Eigen::Index count, Eigen::Index start) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = features.rows();
  if (count < 1 || count > n) throw std::invalid_argument("FPS count out of range");
  if (start < 0 || start >= n) throw std::invalid_argument("FPS start index out of range");

  std::vector<int> picked;
  picked.reserve(static_cast<std::size_t>(count));
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  std::vector<Scalar> min_dist(static_cast<std::size_t>(n), std::numeric_limits<Scalar>::infinity());
  Eigen::Index current = start;
  while (true) {
    picked.push_back(static_cast<int>(current));
    taken[static_cast<std::size_t>(current)] = 1;
    if (static_cast<Eigen::Index>(picked.size()) == count) break;
    Eigen::Index next = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      const Scalar d = std::sqrt(squared_distance(features.row(i), features.row(current)));
      Scalar& m = min_dist[static_cast<std::size_t>(i)];
      if (d < m) m = d;
      if (next < 0 || m > min_dist[static_cast<std::size_t>(next)]) next = i;
    }
    current = next;
  }
  return picked;
}

/// Node payload: mean feature over the majority-prediction points, the region
/// centroid, and the member positions used for chamfer distance.
struct SuperpointFeature {
  int superpoint = -1;
  Eigen::VectorXd f;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  Positions points;
};

SuperpointFeature superpoint_feature(const PointCloud& cloud, std::span<const int> region,
                                     const Prediction& prediction, int superpoint_id = -1);

double location_distance(const SuperpointFeature& a, const SuperpointFeature& b);

struct GraphEdge {
  int to;
  double weight;
};

/// Undirected weighted graph over candidate superpoints. Neighbourhoods are
/// sorted by node index and include the node itself with weight 1.
struct SuperpointGraph {
  std::vector<SuperpointFeature> nodes;
  std::vector<std::vector<GraphEdge>> neighborhoods;

  std::size_t size() const { return nodes.size(); }
  RowMatrix feature_matrix() const;
  /// Dense adjacency with unit diagonal; zero where no edge exists.
  Eigen::MatrixXd weight_matrix() const;
};

/// Symmetrised k-NN graph under D_l + D_c. k is clamped to n - 1.
SuperpointGraph build_graph(std::vector<SuperpointFeature> candidates, int k);

struct AggregationOptions {
  int rounds = 1;
  bool normalize = false;  // divide by the neighbourhood weight sum
};

/// Top-n rows by score (ties to the lower index); nullopt selects all rows.
std::vector<char> aggregation_mask(std::span<const double> scores, std::optional<std::size_t> top_n);

/// Repeated weighted-sum aggregation f*_i = sum_{j in N_i} w(i,j) f_j over
/// masked nodes; unmasked rows pass through unchanged each round.
RowMatrix aggregate(const SuperpointGraph& graph, const RowMatrix& features, const AggregationOptions& options,
                    std::span<const char> agg_mask);

}  // namespace ssdr
