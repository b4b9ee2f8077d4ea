#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ssdr {

using Positions = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Colors = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ClassId = int;
using Labels = std::vector<ClassId>;
using Region = std::vector<int>;  // point indices

/// A labelled scene: positions in meters, colors in [0,1], ground truth in [0, C).
/// Immutable after construction; the constructor validates every invariant.
class PointCloud {
 public:
  PointCloud(Positions positions, Colors colors, Labels gt_labels, int num_classes);

  Eigen::Index size() const { return positions_.rows(); }
  int num_classes() const { return num_classes_; }
  const Positions& positions() const { return positions_; }
  const Colors& colors() const { return colors_; }
  const Labels& gt_labels() const { return gt_labels_; }

  /// Positions rescaled per axis into [0,1] (degenerate axes map to 0).
  Positions normalized_positions() const;

 private:
  Positions positions_;
  Colors colors_;
  Labels gt_labels_;
  int num_classes_;
};

/// Total, disjoint assignment of points to non-empty superpoints.
struct SuperpointPartition {
  std::vector<int> assignment;         // point -> superpoint id
  std::vector<Region> superpoints;     // superpoint id -> member points

  std::size_t size() const { return superpoints.size(); }

  /// Builds member lists from a per-point id vector. Ids are kept as given;
  /// unused ids become empty superpoints (and fail validation).
  static SuperpointPartition from_assignment(std::vector<int> assignment);
  /// Same, but ids are renumbered densely in order of first appearance.
  static SuperpointPartition from_labels_compacted(const std::vector<int>& ids);
};

enum class ViolationKind { Coverage, Overlap, Empty, OutOfRange, AssignmentMismatch, SizeMismatch };

struct Violation {
  ViolationKind kind;
  int point = -1;
  int superpoint = -1;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::size_t count(ViolationKind kind) const;
};

ValidationReport validate_partition(const SuperpointPartition& partition, const PointCloud& cloud);

/// Per-point class distributions and feature rows produced by a learner.
struct Prediction {
  RowMatrix probs;     // N x C
  Labels pred_label;   // argmax, lowest class on ties
  RowMatrix features;  // N x d

  static Prediction from_probs(RowMatrix probs, RowMatrix features);
  Eigen::Index size() const { return probs.rows(); }
};

/// Argmax of a probability row with ties toward the lowest class id.
template <typename Derived>
ClassId argmax_lowest(const Eigen::MatrixBase<Derived>& row) {
  ClassId best = 0;
  for (Eigen::Index c = 1; c < row.size(); ++c) {
    if (row(c) > row(best)) best = static_cast<ClassId>(c);
  }
  return best;
}

/// Throws DataError unless every row is nonnegative, sums to 1 within tol,
/// and pred_label matches the argmax.
void validate_prediction(const Prediction& prediction, double tol = 1e-6);

struct LoadedCloud {
  PointCloud cloud;
  std::optional<std::vector<int>> superpoint_ids;  // present for 8-column files
};

/// Reads `x y z r g b label [superpoint]` lines; `#` lines and blank lines are
/// skipped. Colors are divided by 255 if any channel in the file exceeds 1.
LoadedCloud load_point_cloud(const std::filesystem::path& path, int num_classes);
LoadedCloud parse_point_cloud(std::istream& in, int num_classes, const std::string& source = "<stream>");

/// Writes the text format with 9 significant digits; appends superpoint ids
/// when a partition is supplied.
void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud,
                      const SuperpointPartition* partition = nullptr);
void write_point_cloud(std::ostream& out, const PointCloud& cloud,
                       const SuperpointPartition* partition = nullptr);

/// Gathers the rows of a position matrix for a point subset.
Positions gather_positions(const PointCloud& cloud, std::span<const int> region);

}  // namespace ssdr
