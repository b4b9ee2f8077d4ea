#include "ssdr/graph_reasoning.hpp"

#include "ssdr/parallel.hpp"
#include "ssdr/partitioner.hpp"

#include <algorithm>
#include <numeric>

namespace ssdr {

SuperpointFeature superpoint_feature(const PointCloud& cloud, std::span<const int> region,
                                     const Prediction& prediction, int superpoint_id) {
  if (region.empty()) throw std::invalid_argument("feature of an empty region");
  if (prediction.features.rows() != cloud.size()) {
    throw std::invalid_argument("prediction features do not cover the cloud");
  }
  SuperpointFeature out;
  out.superpoint = superpoint_id;
  const ClassId majority = dominant_class(region, prediction.pred_label);
  out.f = Eigen::VectorXd::Zero(prediction.features.cols());
  std::size_t members = 0;
  for (int p : region) {
    if (prediction.pred_label[static_cast<std::size_t>(p)] != majority) continue;
    out.f += prediction.features.row(p).transpose();
    ++members;
  }
  out.f /= static_cast<double>(members);
  out.points = gather_positions(cloud, region);
  out.centroid = out.points.colwise().mean().transpose();
  return out;
}

double location_distance(const SuperpointFeature& a, const SuperpointFeature& b) {
  return std::sqrt(squared_distance(a.centroid, b.centroid));
}

RowMatrix SuperpointGraph::feature_matrix() const {
  if (nodes.empty()) return {};
  RowMatrix out(static_cast<Eigen::Index>(nodes.size()), nodes.front().f.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = nodes[i].f.transpose();
  return out;
}

Eigen::MatrixXd SuperpointGraph::weight_matrix() const {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < neighborhoods.size(); ++i) {
    for (const auto& e : neighborhoods[i]) w(static_cast<Eigen::Index>(i), e.to) = e.weight;
  }
  return w;
}

SuperpointGraph build_graph(std::vector<SuperpointFeature> candidates, int k) {
  if (candidates.empty()) throw std::invalid_argument("graph needs at least one candidate");
  const std::size_t n = candidates.size();
  const std::size_t dim = static_cast<std::size_t>(candidates.front().f.size());
  for (const auto& c : candidates) {
    if (static_cast<std::size_t>(c.f.size()) != dim || !c.f.allFinite()) {
      throw std::invalid_argument("candidate features must share a dimension and be finite");
    }
  }
  k = std::clamp<int>(k, 0, static_cast<int>(n) - 1);

  // One tree per node, shared by every pair that needs indexing.
  std::vector<std::optional<KdTree<double>>> trees(n);
  parallel_for(0, n, [&](std::size_t i) {
    trees[i].emplace(candidates[i].points);
  });
  auto chamfer_pair = [&](std::size_t i, std::size_t j) {
    const auto& a = candidates[i].points;
    const auto& b = candidates[j].points;
    if (double(a.rows()) * double(b.rows()) > kChamferIndexThreshold) {
      return detail::mean_nearest_sq_indexed(a, *trees[j]) + detail::mean_nearest_sq_indexed(b, *trees[i]);
    }
    return chamfer_distance_scan(a, b);
  };

  // Upper-triangle pairs, each computed once into its own slot.
  Eigen::MatrixXd location = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::MatrixXd chamfer = location;
  parallel_for(0, n, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      location(ii, jj) = location_distance(candidates[i], candidates[j]);
      chamfer(ii, jj) = chamfer_pair(i, j);
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      location(jj, ii) = location(ii, jj);
      chamfer(jj, ii) = chamfer(ii, jj);
    }
  }

  std::vector<std::vector<char>> linked(n, std::vector<char>(n, 0));
  std::vector<int> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    const auto ii = static_cast<Eigen::Index>(i);
    auto combined = [&](int j) { return location(ii, j) + chamfer(ii, j); };
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return combined(a) < combined(b); });
    int taken = 0;
    for (int j : order) {
      if (taken == k) break;
      if (static_cast<std::size_t>(j) == i) continue;
      linked[i][static_cast<std::size_t>(j)] = linked[static_cast<std::size_t>(j)][i] = 1;
      ++taken;
    }
  }

  SuperpointGraph graph;
  graph.neighborhoods.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      if (i == j) {
        graph.neighborhoods[i].push_back({static_cast<int>(j), 1.0});
      } else if (linked[i][j]) {
        graph.neighborhoods[i].push_back({static_cast<int>(j), edge_weight(location(ii, jj), chamfer(ii, jj))});
      }
    }
  }
  graph.nodes = std::move(candidates);
  return graph;
}

std::vector<char> aggregation_mask(std::span<const double> scores, std::optional<std::size_t> top_n) {
  std::vector<char> mask(scores.size(), top_n ? 0 : 1);
  if (!top_n) return mask;
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  for (std::size_t r = 0; r < std::min(*top_n, order.size()); ++r) mask[static_cast<std::size_t>(order[r])] = 1;
  return mask;
}

RowMatrix aggregate(const SuperpointGraph& graph, const RowMatrix& features, const AggregationOptions& options,
                    std::span<const char> agg_mask) {
  if (options.rounds < 1) throw std::invalid_argument("aggregation needs at least one round");
  if (static_cast<std::size_t>(features.rows()) != graph.size() || agg_mask.size() != graph.size()) {
    throw std::invalid_argument("feature rows and mask must match the graph");
  }
  RowMatrix current = features;
  RowMatrix next = features;
  for (int round = 0; round < options.rounds; ++round) {
    parallel_for(0, graph.size(), [&](std::size_t i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (!agg_mask[i]) {
        next.row(ii) = current.row(ii);
        return;
      }
      next.row(ii).setZero();
      double total = 0.0;
      for (const auto& e : graph.neighborhoods[i]) {
        next.row(ii) += e.weight * current.row(e.to);
        total += e.weight;
      }
      if (options.normalize) next.row(ii) /= total;
    });
    std::swap(current, next);
  }
  return current;
}

}  // namespace ssdr
