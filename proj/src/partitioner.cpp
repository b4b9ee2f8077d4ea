#include "ssdr/partitioner.hpp"

#include "ssdr/errors.hpp"
#include "ssdr/kdtree.hpp"
#include "ssdr/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

namespace ssdr {
namespace {

constexpr int kNormalNeighbors = 10;

struct NeighborGraph {
  std::vector<std::vector<int>> knn;   // raw k nearest (excluding self)
  std::vector<std::vector<int>> adj;   // symmetric, distance-gated
};

NeighborGraph build_neighbor_graph(const KdTree<double>& tree, double max_link) {
  const auto n = static_cast<std::size_t>(tree.size());
  NeighborGraph g;
  g.knn.resize(n);
  const double max_link_sq = max_link * max_link;
  parallel_for(0, n, [&](std::size_t i) {
    auto nn = tree.knn(tree.points().row(static_cast<Eigen::Index>(i)), kNormalNeighbors + 1);
    auto& out = g.knn[i];
    out.reserve(nn.size());
    for (const auto& entry : nn) {
      if (entry.second != static_cast<int>(i)) out.push_back(entry.second);
    }
  });
  g.adj.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int j : g.knn[i]) {
      const double d2 = squared_distance(tree.points().row(static_cast<Eigen::Index>(i)),
                                         tree.points().row(j));
      if (d2 <= max_link_sq) {
        g.adj[i].push_back(j);
        g.adj[static_cast<std::size_t>(j)].push_back(static_cast<int>(i));
      }
    }
  }
  for (auto& list : g.adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return g;
}

Eigen::Vector3d fit_normal(const Positions& positions, std::span<const int> neighborhood) {
  const Eigen::Vector3d up(0.0, 0.0, 1.0);
  if (neighborhood.size() < 3) return up;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int j : neighborhood) mean += positions.row(j).transpose();
  mean /= static_cast<double>(neighborhood.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int j : neighborhood) {
    const Eigen::Vector3d d = positions.row(j).transpose() - mean;
    cov.noalias() += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  const Eigen::Vector3d& ev = solver.eigenvalues();  // ascending
  const double scale = std::max(ev(2), 1e-300);
  if (ev(2) <= 0.0 || ev(1) <= 1e-10 * scale) return up;
  Eigen::Vector3d normal = solver.eigenvectors().col(0).normalized();
  // Canonical sign: largest-magnitude component positive.
  Eigen::Index k = 0;
  normal.cwiseAbs().maxCoeff(&k);
  if (normal(k) < 0.0) normal = -normal;
  return normal;
}

struct VoxelKey {
  std::array<long long, 3> v;
  bool operator<(const VoxelKey& o) const { return v < o.v; }
};

}  // namespace

void PartitionerParams::validate() const {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
    throw ConfigError("partition voxel_size must be > 0");
  }
  if (!(color_threshold >= 0.0) || color_threshold > std::sqrt(3.0) + 1e-12) {
    throw ConfigError("partition color_threshold must lie in [0, sqrt(3)]");
  }
  if (!(normal_threshold >= 0.0)) throw ConfigError("partition normal_threshold must be >= 0");
  if (min_region < 1) throw ConfigError("partition min_region must be >= 1");
}

Positions estimate_normals(const Positions& positions, int neighbors) {
  KdTree<double> tree(positions);
  Positions normals(positions.rows(), 3);
  parallel_for(0, static_cast<std::size_t>(positions.rows()), [&](std::size_t i) {
    auto nn = tree.knn(positions.row(static_cast<Eigen::Index>(i)), neighbors);
    std::vector<int> idx;
    idx.reserve(nn.size());
    for (const auto& entry : nn) idx.push_back(entry.second);
    normals.row(static_cast<Eigen::Index>(i)) = fit_normal(positions, idx).transpose();
  });
  return normals;
}

SuperpointPartition generate_superpoints(const PointCloud& cloud, const PartitionerParams& params) {
  params.validate();
  const auto n = static_cast<std::size_t>(cloud.size());
  if (n == 0) throw DataError("cannot partition an empty cloud");
  const Positions& pos = cloud.positions();
  const Colors& col = cloud.colors();

  KdTree<double> tree(pos);
  const NeighborGraph graph = build_neighbor_graph(tree, params.voxel_size);

  Positions normals(pos.rows(), 3);
  parallel_for(0, n, [&](std::size_t i) {
    // The plane fit uses the point's own k nearest, itself included.
    std::vector<int> nearest;
    nearest.push_back(static_cast<int>(i));
    for (int j : graph.knn[i]) {
      if (static_cast<int>(nearest.size()) >= kNormalNeighbors) break;
      nearest.push_back(j);
    }
    normals.row(static_cast<Eigen::Index>(i)) = fit_normal(pos, nearest).transpose();
  });

  // Voxel buckets in key order; the seed visiting order inside a voxel is a
  // seeded permutation.
  std::map<VoxelKey, std::vector<int>> voxels;
  std::vector<std::size_t> voxel_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    VoxelKey key{};
    for (int d = 0; d < 3; ++d) {
      key.v[static_cast<std::size_t>(d)] =
          static_cast<long long>(std::floor(pos(static_cast<Eigen::Index>(i), d) / params.voxel_size));
    }
    voxels[key].push_back(static_cast<int>(i));
  }
  {
    std::size_t v = 0;
    for (auto& [key, members] : voxels) {
      for (int p : members) voxel_of[static_cast<std::size_t>(p)] = v;
      ++v;
    }
  }

  std::mt19937_64 rng(params.rng_seed);
  const double cos_limit = std::cos(std::min(params.normal_threshold, M_PI / 2));
  std::vector<int> region_of(n, -1);
  int num_regions = 0;
  std::deque<int> frontier;
  for (auto& [key, members] : voxels) {
    std::vector<int> order = members;
    std::shuffle(order.begin(), order.end(), rng);
    for (int seed : order) {
      if (region_of[static_cast<std::size_t>(seed)] >= 0) continue;
      const int r = num_regions++;
      const Eigen::RowVector3d seed_normal = normals.row(seed);
      Eigen::RowVector3d color_sum = col.row(seed);
      double count = 1.0;
      region_of[static_cast<std::size_t>(seed)] = r;
      frontier.assign(1, seed);
      while (!frontier.empty()) {
        const int cur = frontier.front();
        frontier.pop_front();
        for (int j : graph.adj[static_cast<std::size_t>(cur)]) {
          const auto ju = static_cast<std::size_t>(j);
          if (region_of[ju] >= 0 || voxel_of[ju] != voxel_of[static_cast<std::size_t>(seed)]) continue;
          if (std::abs(normals.row(j).dot(seed_normal)) < cos_limit) continue;
          if ((col.row(j) - color_sum / count).norm() > params.color_threshold) continue;
          region_of[ju] = r;
          color_sum += col.row(j);
          count += 1.0;
          frontier.push_back(j);
        }
      }
    }
  }

  // Merge undersized regions into the adjacent region with the nearest centroid.
  std::vector<int> parent(static_cast<std::size_t>(num_regions));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int r) {
    while (parent[static_cast<std::size_t>(r)] != r) {
      parent[static_cast<std::size_t>(r)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(r)])];
      r = parent[static_cast<std::size_t>(r)];
    }
    return r;
  };
  std::vector<long> size(static_cast<std::size_t>(num_regions), 0);
  Positions sum = Positions::Zero(num_regions, 3);
  for (std::size_t i = 0; i < n; ++i) {
    size[static_cast<std::size_t>(region_of[i])] += 1;
    sum.row(region_of[i]) += pos.row(static_cast<Eigen::Index>(i));
  }
  std::vector<std::vector<int>> region_adj(static_cast<std::size_t>(num_regions));
  for (std::size_t i = 0; i < n; ++i) {
    for (int j : graph.adj[i]) {
      const int a = region_of[i];
      const int b = region_of[static_cast<std::size_t>(j)];
      if (a != b) region_adj[static_cast<std::size_t>(a)].push_back(b);
    }
  }
  for (auto& list : region_adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (int r = 0; r < num_regions; ++r) {
      if (find(r) != r || size[static_cast<std::size_t>(r)] >= params.min_region) continue;
      const Eigen::RowVector3d centroid = sum.row(r) / static_cast<double>(size[static_cast<std::size_t>(r)]);
      int best = -1;
      double best_d = 0.0;
      std::vector<int> seen;
      for (int other : region_adj[static_cast<std::size_t>(r)]) {
        const int root = find(other);
        if (root == r) continue;
        if (std::find(seen.begin(), seen.end(), root) != seen.end()) continue;
        seen.push_back(root);
        const Eigen::RowVector3d c = sum.row(root) / static_cast<double>(size[static_cast<std::size_t>(root)]);
        const double d = (c - centroid).squaredNorm();
        if (best < 0 || d < best_d || (d == best_d && root < best)) {
          best = root;
          best_d = d;
        }
      }
      if (best < 0) continue;  // isolated; stays as is
      parent[static_cast<std::size_t>(r)] = best;
      size[static_cast<std::size_t>(best)] += size[static_cast<std::size_t>(r)];
      sum.row(best) += sum.row(r);
      auto& into = region_adj[static_cast<std::size_t>(best)];
      const auto& from = region_adj[static_cast<std::size_t>(r)];
      into.insert(into.end(), from.begin(), from.end());
      changed = true;
    }
  }

  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = find(region_of[i]);
  return SuperpointPartition::from_labels_compacted(ids);
}

double purity(std::span<const int> region, const Labels& labels) {
  if (region.empty()) throw std::invalid_argument("purity of an empty region");
  const ClassId dom = dominant_class(region, labels);
  std::size_t hits = 0;
  for (int p : region) hits += labels[static_cast<std::size_t>(p)] == dom;
  return static_cast<double>(hits) / static_cast<double>(region.size());
}

ClassId dominant_class(std::span<const int> region, const Labels& labels) {
  if (region.empty()) throw std::invalid_argument("dominant class of an empty region");
  std::map<ClassId, std::size_t> counts;
  for (int p : region) ++counts[labels[static_cast<std::size_t>(p)]];
  ClassId best = counts.begin()->first;
  std::size_t best_count = 0;
  for (const auto& [label, count] : counts) {
    if (count > best_count) {  // map order gives the lowest id on ties
      best = label;
      best_count = count;
    }
  }
  return best;
}

}  // namespace ssdr
