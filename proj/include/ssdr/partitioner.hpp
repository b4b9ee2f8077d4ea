#pragma once

#include "ssdr/core_data.hpp"

#include <cstdint>
#include <span>

namespace ssdr {

struct PartitionerParams {
  double voxel_size = 0.5;        // meters, > 0
  double color_threshold = 0.25;  // mean color distance, [0, sqrt(3)]
  double normal_threshold = 0.35; // radians
  int min_region = 8;             // points
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Voxel-seeded region growing on normal angle and color distance, followed
/// by merging of undersized regions into their nearest adjacent region.
/// Deterministic for fixed params; the output always passes validate_partition.
SuperpointPartition generate_superpoints(const PointCloud& cloud, const PartitionerParams& params);

/// Unit normals from a plane fit over each point's 10 nearest neighbours.
/// Neighbourhoods of rank < 2 get the +z axis.
Positions estimate_normals(const Positions& positions, int neighbors = 10);

/// Share of the most frequent label in the region. Throws on an empty region.
double purity(std::span<const int> region, const Labels& labels);

/// Most frequent label in the region, ties toward the lowest id.
ClassId dominant_class(std::span<const int> region, const Labels& labels);

}  // namespace ssdr
