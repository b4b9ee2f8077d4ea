#include "ssdr/scene.hpp"

#include "ssdr/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

namespace ssdr {
namespace {

struct Box {
  Eigen::Vector3d lo, hi;
};

struct Sphere {
  Eigen::Vector3d center;
  double radius;
};

struct Clutter {
  bool is_box;
  Box box;
  Sphere sphere;
  Eigen::Vector3d color;
  ClassId label;
};

const std::array<Eigen::Vector3d, 6> kPalette = {
    Eigen::Vector3d(0.80, 0.25, 0.20), Eigen::Vector3d(0.20, 0.45, 0.80), Eigen::Vector3d(0.25, 0.70, 0.30),
    Eigen::Vector3d(0.85, 0.70, 0.15), Eigen::Vector3d(0.55, 0.30, 0.70), Eigen::Vector3d(0.15, 0.70, 0.70)};

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Eigen::Vector3d sample_box_surface(const Box& b, Rng& rng) {
  const Eigen::Vector3d s = b.hi - b.lo;
  // Top and four sides; the bottom face rests on the floor.
  const std::array<double, 5> areas = {s.x() * s.y(), s.y() * s.z(), s.y() * s.z(), s.x() * s.z(), s.x() * s.z()};
  const int face = std::discrete_distribution<int>(areas.begin(), areas.end())(rng);
  Eigen::Vector3d p(uniform(rng, b.lo.x(), b.hi.x()), uniform(rng, b.lo.y(), b.hi.y()),
                    uniform(rng, b.lo.z(), b.hi.z()));
  switch (face) {
    case 0: p.z() = b.hi.z(); break;
    case 1: p.x() = b.lo.x(); break;
    case 2: p.x() = b.hi.x(); break;
    case 3: p.y() = b.lo.y(); break;
    default: p.y() = b.hi.y(); break;
  }
  return p;
}

Eigen::Vector3d sample_sphere_surface(const Sphere& s, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Vector3d d;
  do {
    d = Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
  } while (d.norm() < 1e-12);
  return s.center + s.radius * d.normalized();
}

bool under_clutter(const std::vector<Clutter>& objects, double x, double y) {
  for (const auto& o : objects) {
    if (o.is_box) {
      if (x >= o.box.lo.x() && x <= o.box.hi.x() && y >= o.box.lo.y() && y <= o.box.hi.y()) return true;
    } else if (std::hypot(x - o.sphere.center.x(), y - o.sphere.center.y()) < 0.5 * o.sphere.radius) {
      return true;
    }
  }
  return false;
}

}  // namespace

void SceneSpec::validate() const {
  if (class_weights.size() < 2) throw ConfigError("scene needs at least two classes");
  if (num_points < 1) throw ConfigError("scene needs at least one point");
  if (!(extent.array() > 0.5).all() || !extent.allFinite()) throw ConfigError("scene extent must exceed 0.5 m");
  double total = 0.0;
  for (double w : class_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("class weights must be nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw ConfigError("class weights sum to zero");
  if (!(noise_sigma >= 0.0) || !(color_noise >= 0.0)) throw ConfigError("noise levels must be nonnegative");
  if (clutter < 0) throw ConfigError("clutter count must be nonnegative");
  for (std::size_t c = 2; c < class_weights.size(); ++c) {
    const bool has_object = clutter > 0 && static_cast<int>(c - 2) < clutter;
    if (class_weights[c] > 0.0 && !has_object) {
      throw ConfigError("clutter class " + std::to_string(c) + " has weight but no object");
    }
  }
}

PointCloud generate_scene(const SceneSpec& spec) {
  spec.validate();
  Rng rng(spec.rng_seed);
  const int num_classes = spec.num_classes();
  const Eigen::Vector3d& room = spec.extent;

  std::vector<Clutter> objects;
  const int clutter_classes = num_classes - 2;
  if (clutter_classes > 0) {
    for (int o = 0; o < spec.clutter; ++o) {
      Clutter c{};
      c.label = 2 + o % clutter_classes;
      c.is_box = o % 2 == 0;
      c.color = kPalette[static_cast<std::size_t>(o) % kPalette.size()];
      const double margin = 1.0;
      const double cx = uniform(rng, margin, std::max(margin, room.x() - margin));
      const double cy = uniform(rng, margin, std::max(margin, room.y() - margin));
      if (c.is_box) {
        const Eigen::Vector3d half(uniform(rng, 0.15, 0.5), uniform(rng, 0.15, 0.5), 0.0);
        const double height = uniform(rng, 0.3, std::min(1.2, room.z() * 0.6));
        c.box = {Eigen::Vector3d(cx - half.x(), cy - half.y(), 0.0), Eigen::Vector3d(cx + half.x(), cy + half.y(), height)};
      } else {
        const double r = uniform(rng, 0.2, 0.5);
        c.sphere = {Eigen::Vector3d(cx, cy, r), r};
      }
      objects.push_back(c);
    }
  }
  std::vector<std::vector<int>> objects_of(static_cast<std::size_t>(num_classes));
  for (std::size_t o = 0; o < objects.size(); ++o) {
    objects_of[static_cast<std::size_t>(objects[o].label)].push_back(static_cast<int>(o));
  }

  const auto n = static_cast<Eigen::Index>(spec.num_points);
  Positions pos(n, 3);
  Colors col(n, 3);
  Labels labels(static_cast<std::size_t>(n));
  std::discrete_distribution<int> pick_class(spec.class_weights.begin(), spec.class_weights.end());
  const std::array<double, 4> wall_areas = {room.x() * room.z(), room.x() * room.z(), room.y() * room.z(),
                                            room.y() * room.z()};
  std::discrete_distribution<int> pick_wall(wall_areas.begin(), wall_areas.end());
  std::normal_distribution<double> jitter(0.0, 1.0);
  const Eigen::Vector3d floor_color(0.55, 0.45, 0.35);
  const Eigen::Vector3d wall_color(0.85, 0.85, 0.80);

  for (Eigen::Index i = 0; i < n; ++i) {
    const ClassId label = pick_class(rng);
    Eigen::Vector3d p, color;
    if (label == 0) {
      do {
        p = Eigen::Vector3d(uniform(rng, 0.0, room.x()), uniform(rng, 0.0, room.y()), 0.0);
      } while (under_clutter(objects, p.x(), p.y()));
      color = floor_color;
    } else if (label == 1) {
      switch (pick_wall(rng)) {
        case 0: p = Eigen::Vector3d(uniform(rng, 0.0, room.x()), 0.0, uniform(rng, 0.0, room.z())); break;
        case 1: p = Eigen::Vector3d(uniform(rng, 0.0, room.x()), room.y(), uniform(rng, 0.0, room.z())); break;
        case 2: p = Eigen::Vector3d(0.0, uniform(rng, 0.0, room.y()), uniform(rng, 0.0, room.z())); break;
        default: p = Eigen::Vector3d(room.x(), uniform(rng, 0.0, room.y()), uniform(rng, 0.0, room.z())); break;
      }
      color = wall_color;
    } else {
      const auto& candidates = objects_of[static_cast<std::size_t>(label)];
      const auto pick = std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng);
      const Clutter& obj = objects[static_cast<std::size_t>(candidates[pick])];
      p = obj.is_box ? sample_box_surface(obj.box, rng) : sample_sphere_surface(obj.sphere, rng);
      color = obj.color;
    }
    if (spec.noise_sigma > 0.0) {
      for (int d = 0; d < 3; ++d) p(d) += spec.noise_sigma * jitter(rng);
    }
    for (int d = 0; d < 3; ++d) {
      col(i, d) = std::clamp(color(d) + (spec.color_noise > 0.0 ? spec.color_noise * jitter(rng) : 0.0), 0.0, 1.0);
    }
    pos.row(i) = p.transpose();
    labels[static_cast<std::size_t>(i)] = label;
  }
  return PointCloud(std::move(pos), std::move(col), std::move(labels), num_classes);
}

}  // namespace ssdr
