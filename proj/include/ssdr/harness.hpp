#pragma once

#include "ssdr/config.hpp"
#include "ssdr/core_data.hpp"
#include "ssdr/labeling.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <ostream>
#include <vector>

namespace ssdr {

struct Metrics {
  double accuracy = 0.0;
  double miou = 0.0;
  std::vector<std::optional<double>> class_iou;  // nullopt: class absent from gt and prediction
};

/// Overall accuracy and IoU_c = TP / (TP + FP + FN); mIoU averages the
/// classes present in either labeling.
Metrics evaluate(const Labels& predicted, const Labels& gt, int num_classes);

struct RunState {
  AnnotationState annotation;
  long clicks = 0;  // cumulative, seed clicks included
  int cycle = 0;
};

/// Uniform ceil(fraction * |S|) superpoints, each labeled with its
/// ground-truth dominant class for one click.
RunState seed_labeled_set(const SuperpointPartition& partition, double seed_fraction, std::uint64_t rng_seed,
                          const Labels& gt_labels);

struct CycleRecord {
  int cycle = 0;
  long clicks_cycle = 0;
  long clicks_cumulative = 0;
  std::size_t selected = 0;
  std::size_t labeled_superpoints = 0;
  double labeled_superpoint_fraction = 0.0;
  double labeled_point_fraction = 0.0;
  std::size_t discarded_regions = 0;
  std::size_t mislabeled_points = 0;
  Metrics metrics;

  nlohmann::ordered_json to_json() const;
};

/// Candidate superpoints for one cycle, in labeling priority order.
std::vector<int> select_candidates(const RunConfig& config, const RunState& state, const PointCloud& cloud,
                                   const SuperpointPartition& partition, const Prediction& prediction);

struct CycleOutcome {
  RunState state;
  CycleRecord record;
  Prediction prediction;  // from the model retrained after labeling
};

/// score -> select -> label under budget -> retrain -> evaluate. `current`
/// must come from a model trained on `state`. Throws std::invalid_argument
/// when nothing is left unlabeled.
CycleOutcome run_cycle(const RunState& state, const RunConfig& config, const PointCloud& cloud,
                       const SuperpointPartition& partition, const Prediction& current);

/// Record for the current state without selecting anything (cycle 0).
CycleRecord snapshot_record(const RunState& state, const PointCloud& cloud, const SuperpointPartition& partition,
                            const Prediction& prediction, long clicks_cycle);

Prediction train_and_predict(const LearnerSpec& spec, const PointCloud& cloud, const AnnotationState& state);

/// Metrics of the learner trained on every point's ground truth.
Metrics full_label_metrics(const LearnerSpec& spec, const PointCloud& cloud);

double target_value(const Metrics& metrics, TargetMetric metric);

struct RunSummary {
  std::string target_metric;
  std::optional<double> reference_value;
  std::optional<double> target_value;
  std::optional<long> clicks_to_target;
  std::optional<int> cycle_to_target;
  long total_clicks = 0;
  std::size_t num_superpoints = 0;
  std::size_t num_points = 0;

  nlohmann::ordered_json to_json() const;
};

struct ExperimentResult {
  std::vector<CycleRecord> records;
  RunSummary summary;

  /// One JSON object per line: cycle records, then the summary.
  void write_jsonl(std::ostream& out) const;
};

/// Runs on a prepared cloud and partition. When `reference` is absent and a
/// target is configured, the full-label reference run happens here.
ExperimentResult run_experiment(const RunConfig& config, const PointCloud& cloud,
                                const SuperpointPartition& partition,
                                std::optional<Metrics> reference = std::nullopt);

/// Loads or generates the scene, partitions it, and runs.
ExperimentResult run_experiment(const RunConfig& config);

/// Cloud and partition as the config describes them.
struct PreparedScene {
  PointCloud cloud;
  SuperpointPartition partition;
};
PreparedScene prepare_scene(const RunConfig& config);

/// Mixes a base seed with a stream id into an independent seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace ssdr
