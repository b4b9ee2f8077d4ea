#pragma once

#include "ssdr/core_data.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace ssdr {

/// Synthetic room: class 0 is the floor, class 1 the four walls, classes
/// 2.. are clutter boxes and spheres standing on the floor.
struct SceneSpec {
  Eigen::Vector3d extent{8.0, 6.0, 3.0};  // room size in meters
  long num_points = 50000;
  // Close to the surface-area shares of floor, walls and clutter in the
  // default room, so point density is roughly uniform across classes.
  std::vector<double> class_weights{0.35, 0.55, 0.10};
  int clutter = 8;           // number of clutter objects
  double noise_sigma = 0.005;
  double color_noise = 0.04;
  std::uint64_t rng_seed = 0;

  int num_classes() const { return static_cast<int>(class_weights.size()); }
  void validate() const;
};

/// Deterministic per rng_seed. Point classes follow a multinomial draw over
/// class_weights.
PointCloud generate_scene(const SceneSpec& spec);

}  // namespace ssdr
