#include "ssdr/labeling.hpp"

#include "ssdr/partitioner.hpp"

#include <map>
#include <stdexcept>
#include <string>

namespace ssdr {

ClickLedger::ClickLedger(long budget) : budget_(budget) {
  if (budget < 1) throw std::invalid_argument("click budget must be >= 1");
}

void ClickLedger::spend(long clicks) {
  if (clicks < 0) throw std::invalid_argument("clicks cannot be refunded");
  clicks_used_ += clicks;
}

AnnotationState AnnotationState::all_unlabeled(const SuperpointPartition& partition) {
  AnnotationState state;
  for (std::size_t s = 0; s < partition.size(); ++s) state.unlabeled.insert(static_cast<int>(s));
  return state;
}

std::size_t AnnotationState::labeled_point_count() const {
  std::size_t n = 0;
  for (const auto& r : labeled) n += r.points.size();
  return n;
}

Labels AnnotationState::point_labels(std::size_t num_points) const {
  Labels out(num_points, -1);
  for (const auto& r : labeled) {
    for (int p : r.points) out[static_cast<std::size_t>(p)] = r.label;
  }
  return out;
}

bool annotation_disjoint(const AnnotationState& state, const SuperpointPartition& partition) {
  std::vector<char> seen(partition.assignment.size(), 0);
  auto claim = [&](int p) {
    auto& s = seen[static_cast<std::size_t>(p)];
    if (s) return false;
    s = 1;
    return true;
  };
  for (const auto& r : state.labeled) {
    for (int p : r.points) {
      if (!claim(p)) return false;
    }
  }
  for (const auto& r : state.discarded) {
    for (int p : r) {
      if (!claim(p)) return false;
    }
  }
  for (int s : state.unlabeled) {
    if (state.touched.count(s)) return false;
    for (int p : partition.superpoints[static_cast<std::size_t>(s)]) {
      if (!claim(p)) return false;
    }
  }
  return true;
}

std::size_t count_mislabeled(std::span<const int> region, ClassId label, const Labels& gt_labels) {
  std::size_t wrong = 0;
  for (int p : region) wrong += gt_labels[static_cast<std::size_t>(p)] != label;
  return wrong;
}

LabeledRegion dominant_labeling(std::span<const int> superpoint, const Labels& gt_labels, ClickLedger& ledger,
                                int superpoint_id) {
  if (!ledger.has_budget()) throw std::runtime_error("click budget exhausted");
  LabeledRegion region{Region(superpoint.begin(), superpoint.end()), dominant_class(superpoint, gt_labels),
                       superpoint_id};
  ledger.spend(1);
  return region;
}

std::vector<SubRegion> split_subregions(int parent, std::span<const int> superpoint, const Labels& pred_labels) {
  std::map<ClassId, Region> groups;
  for (int p : superpoint) groups[pred_labels[static_cast<std::size_t>(p)]].push_back(p);
  std::vector<SubRegion> out;
  out.reserve(groups.size());
  for (auto& [cls, points] : groups) out.push_back({parent, std::move(points), cls});
  return out;
}

namespace {
void take_candidate(AnnotationState& state, int s) {
  if (state.unlabeled.erase(s) == 0) {
    throw std::invalid_argument("candidate superpoint " + std::to_string(s) + " is not unlabeled");
  }
}
}  // namespace

void dominant_labeling_batch(std::span<const int> candidates, const SuperpointPartition& partition,
                             const Labels& gt_labels, AnnotationState& state, ClickLedger& ledger) {
  for (int s : candidates) {
    if (!ledger.has_budget()) break;
    take_candidate(state, s);
    state.labeled.push_back(dominant_labeling(partition.superpoints[static_cast<std::size_t>(s)], gt_labels, ledger, s));
    state.touched.insert(s);
  }
}

LabelingTrace noise_aware_labeling(std::span<const int> candidates, double theta,
                                   const SuperpointPartition& partition, const Labels& gt_labels,
                                   const Labels& pred_labels, AnnotationState& state, ClickLedger& ledger) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in (0, 1]");
  LabelingTrace trace;
  for (int s : candidates) {
    if (!ledger.has_budget()) continue;  // unprocessed candidates stay unlabeled
    take_candidate(state, s);
    ++trace.processed;
    const Region& members = partition.superpoints[static_cast<std::size_t>(s)];
    if (purity(members, gt_labels) >= theta) {
      state.labeled.push_back({members, dominant_class(members, gt_labels), s});
      state.touched.insert(s);
      ledger.spend(1);
      continue;
    }
    ++trace.split;
    ledger.spend(1);
    for (auto& sub : split_subregions(s, members, pred_labels)) {
      if (purity(sub.points, gt_labels) >= theta) {
        const ClassId label = dominant_class(sub.points, gt_labels);
        state.labeled.push_back({std::move(sub.points), label, s});
        state.touched.insert(s);
        ledger.spend(1);
        ++trace.subregions_labeled;
      } else {
        state.discarded.push_back(std::move(sub.points));
        ++trace.subregions_discarded;
      }
    }
  }
  return trace;
}

}  // namespace ssdr
