#pragma once

#include "ssdr/core_data.hpp"

#include <set>
#include <span>
#include <vector>

namespace ssdr {

/// Click accounting for one labeling batch. clicks_used only grows.
class ClickLedger {
 public:
  explicit ClickLedger(long budget);

  long budget() const { return budget_; }
  long clicks_used() const { return clicks_used_; }
  bool has_budget() const { return clicks_used_ < budget_; }
  void spend(long clicks = 1);

 private:
  long budget_;
  long clicks_used_ = 0;
};

struct LabeledRegion {
  Region points;
  ClassId label;
  int superpoint = -1;  // source superpoint, -1 if unknown
};

/// Labeled regions, discarded regions and the unlabeled superpoint pool.
struct AnnotationState {
  std::vector<LabeledRegion> labeled;
  std::vector<Region> discarded;
  std::set<int> unlabeled;
  std::set<int> touched;  // superpoints fully or partially labeled

  static AnnotationState all_unlabeled(const SuperpointPartition& partition);

  std::size_t labeled_point_count() const;
  /// Per-point annotation, -1 where unlabeled or discarded.
  Labels point_labels(std::size_t num_points) const;
};

/// True when labeled, discarded and unlabeled-member point sets are pairwise disjoint.
bool annotation_disjoint(const AnnotationState& state, const SuperpointPartition& partition);

/// Number of points in the region whose ground truth differs from `label`.
std::size_t count_mislabeled(std::span<const int> region, ClassId label, const Labels& gt_labels);

/// Labels the whole superpoint with its ground-truth dominant class for one click.
/// Throws std::runtime_error when the ledger is exhausted.
LabeledRegion dominant_labeling(std::span<const int> superpoint, const Labels& gt_labels, ClickLedger& ledger,
                                int superpoint_id = -1);

struct SubRegion {
  int parent = -1;
  Region points;
  ClassId predicted;
};

/// One sub-region per predicted class present, in ascending class order.
std::vector<SubRegion> split_subregions(int parent, std::span<const int> superpoint, const Labels& pred_labels);

/// Dominant labeling over ordered candidates while the ledger has budget;
/// each processed candidate leaves the unlabeled pool.
void dominant_labeling_batch(std::span<const int> candidates, const SuperpointPartition& partition,
                             const Labels& gt_labels, AnnotationState& state, ClickLedger& ledger);

struct LabelingTrace {
  int processed = 0;
  int split = 0;
  int subregions_labeled = 0;
  int subregions_discarded = 0;
};

/// Batch-mode noise-aware iterative labeling. For each candidate, checked
/// only against `clicks < budget` before it starts: a pure candidate
/// (purity >= theta) costs one click; otherwise one click splits it by
/// prediction and each sub-region with purity >= theta costs one more, the
/// rest are discarded. Processed candidates leave the unlabeled pool.
LabelingTrace noise_aware_labeling(std::span<const int> candidates, double theta,
                                   const SuperpointPartition& partition, const Labels& gt_labels,
                                   const Labels& pred_labels, AnnotationState& state, ClickLedger& ledger);

}  // namespace ssdr
