#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>
#include <vector>

namespace ssdr {

/// Squared Euclidean distance accumulated in coordinate order. Every exact
/// nearest-neighbour path in the library goes through this so that indexed
/// and brute-force searches produce bit-identical distances.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar squared_distance(const Eigen::MatrixBase<DerivedA>& a,
                                           const Eigen::MatrixBase<DerivedB>& b) {
  typename DerivedA::Scalar acc(0);
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const auto diff = a(d) - b(d);
    acc += diff * diff;
  }
  return acc;
}

/// Exact k-d tree over the rows of a dense point matrix. Ties in distance
/// resolve toward the lower row index, matching a linear scan.
template <typename Scalar>
class KdTree {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Neighbor = std::pair<Scalar, int>;  // (squared distance, row)

  KdTree() = default;

  template <typename Derived>
  explicit KdTree(const Eigen::MatrixBase<Derived>& points, int leaf_size = 24)
      : points_(points), leaf_size_(std::max(1, leaf_size)) {
    index_.resize(static_cast<std::size_t>(points_.rows()));
    std::iota(index_.begin(), index_.end(), 0);
    if (!index_.empty()) build(0, static_cast<int>(index_.size()));
  }

  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dims() const { return points_.cols(); }
  const Matrix& points() const { return points_; }

  /// Nearest row to query; undefined on an empty tree.
  template <typename Derived>
  Neighbor nearest(const Eigen::MatrixBase<Derived>& query) const {
    auto result = knn(query, 1);
    return result.front();
  }

  /// The k nearest rows sorted by (distance, row). k is clamped to size().
  template <typename Derived>
  std::vector<Neighbor> knn(const Eigen::MatrixBase<Derived>& query, int k) const {
    std::vector<Neighbor> out;
    const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> q = query.template cast<Scalar>();
    knn_into(q.data(), k, out);
    return out;
  }

  /// Same as knn() on a raw query of dims() values, reusing `out`'s storage.
  void knn_into(const Scalar* query, int k, std::vector<Neighbor>& out) const {
    out.clear();
    k = std::min<int>(k, static_cast<int>(size()));
    if (k <= 0 || nodes_.empty()) return;
    out.reserve(static_cast<std::size_t>(k) + 1);
    thread_local std::vector<Scalar> offsets;
    offsets.assign(static_cast<std::size_t>(dims()), Scalar(0));
    search(0, query, k, Scalar(0), offsets.data(), out);
    std::sort_heap(out.begin(), out.end());
  }

 private:
  struct Node {
    int begin = 0;
    int end = 0;
    int split_dim = -1;  // -1 marks a leaf
    Scalar split_value{};
    int left = -1;
    int right = -1;
  };

  int build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= leaf_size_) return id;

    // Split on the widest dimension at the median row.
    Eigen::Index best_dim = 0;
    Scalar best_spread = Scalar(-1);
    for (Eigen::Index d = 0; d < dims(); ++d) {
      Scalar lo = std::numeric_limits<Scalar>::max();
      Scalar hi = std::numeric_limits<Scalar>::lowest();
      for (int i = begin; i < end; ++i) {
        const Scalar v = points_(index_[i], d);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        best_dim = d;
      }
    }
    if (best_spread <= Scalar(0)) return id;  // all rows coincide

    const int mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                     [&](int a, int b) {
                       const Scalar va = points_(a, best_dim);
                       const Scalar vb = points_(b, best_dim);
                       return va < vb || (va == vb && a < b);
                     });
    const Scalar split = points_(index_[mid], best_dim);
    const int left = build(begin, mid);
    const int right = build(mid, end);
    Node& node = nodes_[static_cast<std::size_t>(id)];
    node.split_dim = static_cast<int>(best_dim);
    node.split_value = split;
    node.left = left;
    node.right = right;
    return id;
  }

  void offer(std::vector<Neighbor>& heap, int k, Neighbor candidate) const {
    if (static_cast<int>(heap.size()) < k) {
      heap.push_back(candidate);
      std::push_heap(heap.begin(), heap.end());
    } else if (candidate < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = candidate;
      std::push_heap(heap.begin(), heap.end());
    }
  }

  Scalar row_distance(const Scalar* q, int row) const {
    const Scalar* p = points_.data() + static_cast<Eigen::Index>(row) * dims();
    Scalar acc(0);
    for (Eigen::Index d = 0; d < dims(); ++d) {
      const Scalar diff = q[d] - p[d];
      acc += diff * diff;
    }
    return acc;
  }

  // `cell` is a lower bound on the squared distance from q to this node's
  // region, built from per-dimension `offsets` to the splitting planes seen
  // so far.
  void search(int node_id, const Scalar* q, int k, Scalar cell, Scalar* offsets,
              std::vector<Neighbor>& heap) const {
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    if (node.split_dim < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int row = index_[static_cast<std::size_t>(i)];
        offer(heap, k, {row_distance(q, row), row});
      }
      return;
    }
    const Scalar diff = q[node.split_dim] - node.split_value;
    const int near = diff <= Scalar(0) ? node.left : node.right;
    const int far = diff <= Scalar(0) ? node.right : node.left;
    search(near, q, k, cell, offsets, heap);
    Scalar& off = offsets[node.split_dim];
    const Scalar saved = off;
    const Scalar far_cell = cell - saved * saved + diff * diff;
    // Only strictly farther cells are pruned so equal-distance rows with a
    // lower index can still win the tie.
    if (static_cast<int>(heap.size()) < k || far_cell <= heap.front().first) {
      off = diff;
      search(far, q, k, far_cell, offsets, heap);
      off = saved;
    }
  }

  Matrix points_;
  int leaf_size_ = 12;
  std::vector<int> index_;
  std::vector<Node> nodes_;
};

}  // namespace ssdr
