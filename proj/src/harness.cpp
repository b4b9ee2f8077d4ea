#include "ssdr/harness.hpp"

#include "ssdr/errors.hpp"
#include "ssdr/graph_reasoning.hpp"
#include "ssdr/partitioner.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ssdr {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Metrics evaluate(const Labels& predicted, const Labels& gt, int num_classes) {
  if (predicted.size() != gt.size()) throw DataError("prediction and ground truth differ in length");
  if (gt.empty()) throw DataError("cannot evaluate an empty labeling");
  const auto c = static_cast<std::size_t>(num_classes);
  std::vector<long> tp(c, 0), fp(c, 0), fn(c, 0);
  long correct = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const ClassId p = predicted[i], g = gt[i];
    if (p < 0 || p >= num_classes || g < 0 || g >= num_classes) throw DataError("label outside class range");
    if (p == g) {
      ++correct;
      ++tp[static_cast<std::size_t>(g)];
    } else {
      ++fp[static_cast<std::size_t>(p)];
      ++fn[static_cast<std::size_t>(g)];
    }
  }
  Metrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(gt.size());
  double sum = 0.0;
  int present = 0;
  for (std::size_t k = 0; k < c; ++k) {
    const long denom = tp[k] + fp[k] + fn[k];
    if (denom == 0) {
      m.class_iou.emplace_back(std::nullopt);
      continue;
    }
    const double iou = static_cast<double>(tp[k]) / static_cast<double>(denom);
    m.class_iou.emplace_back(iou);
    sum += iou;
    ++present;
  }
  m.miou = present > 0 ? sum / present : 0.0;
  return m;
}

RunState seed_labeled_set(const SuperpointPartition& partition, double seed_fraction, std::uint64_t rng_seed,
                          const Labels& gt_labels) {
  const std::size_t total = partition.size();
  // The epsilon keeps exact products such as 0.005 * 1000 from rounding up.
  const auto wanted = static_cast<std::size_t>(std::ceil(seed_fraction * static_cast<double>(total) - 1e-9));
  if (wanted < 1) throw ConfigError("seed fraction selects no superpoints");
  RunState state;
  state.annotation = AnnotationState::all_unlabeled(partition);
  const std::vector<int> pool(state.annotation.unlabeled.begin(), state.annotation.unlabeled.end());
  const std::vector<int> seeds = random_select(pool, std::min(wanted, total), rng_seed);
  ClickLedger ledger(static_cast<long>(seeds.size()));
  dominant_labeling_batch(seeds, partition, gt_labels, state.annotation, ledger);
  state.clicks = ledger.clicks_used();
  return state;
}

nlohmann::ordered_json CycleRecord::to_json() const {
  nlohmann::ordered_json j;
  j["type"] = "cycle";
  j["cycle"] = cycle;
  j["clicks_cycle"] = clicks_cycle;
  j["clicks"] = clicks_cumulative;
  j["selected"] = selected;
  j["labeled_superpoints"] = labeled_superpoints;
  j["labeled_superpoint_fraction"] = labeled_superpoint_fraction;
  j["labeled_point_fraction"] = labeled_point_fraction;
  j["discarded_regions"] = discarded_regions;
  j["mislabeled_points"] = mislabeled_points;
  j["accuracy"] = metrics.accuracy;
  j["miou"] = metrics.miou;
  auto ious = nlohmann::ordered_json::array();
  for (const auto& v : metrics.class_iou) ious.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json());
  j["class_iou"] = std::move(ious);
  return j;
}

nlohmann::ordered_json RunSummary::to_json() const {
  auto opt = [](const auto& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
  nlohmann::ordered_json j;
  j["type"] = "summary";
  j["num_points"] = num_points;
  j["num_superpoints"] = num_superpoints;
  j["total_clicks"] = total_clicks;
  j["target_metric"] = target_metric;
  j["reference_value"] = opt(reference_value);
  j["target_value"] = opt(target_value);
  j["clicks_to_target"] = opt(clicks_to_target);
  j["cycle_to_target"] = opt(cycle_to_target);
  j["click_fraction_to_target"] =
      clicks_to_target && num_superpoints > 0
          ? nlohmann::ordered_json(static_cast<double>(*clicks_to_target) / static_cast<double>(num_superpoints))
          : nlohmann::ordered_json();
  return j;
}

void ExperimentResult::write_jsonl(std::ostream& out) const {
  for (const auto& r : records) out << r.to_json().dump() << '\n';
  out << summary.to_json().dump() << '\n';
}

Prediction train_and_predict(const LearnerSpec& spec, const PointCloud& cloud, const AnnotationState& state) {
  return train(spec, cloud, state.labeled)->predict(cloud);
}

Metrics full_label_metrics(const LearnerSpec& spec, const PointCloud& cloud) {
  std::vector<LabeledRegion> all(static_cast<std::size_t>(cloud.num_classes()));
  for (std::size_t c = 0; c < all.size(); ++c) all[c].label = static_cast<ClassId>(c);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    all[static_cast<std::size_t>(cloud.gt_labels()[static_cast<std::size_t>(i)])].points.push_back(static_cast<int>(i));
  }
  std::erase_if(all, [](const LabeledRegion& r) { return r.points.empty(); });
  const Prediction p = train(spec, cloud, all)->predict(cloud);
  return evaluate(p.pred_label, cloud.gt_labels(), cloud.num_classes());
}

double target_value(const Metrics& metrics, TargetMetric metric) {
  return metric == TargetMetric::MeanIoU ? metrics.miou : metrics.accuracy;
}

namespace {

// Annotated class per labeled superpoint: the label of its largest region.
std::map<int, ClassId> annotated_classes(const AnnotationState& state) {
  std::map<int, std::pair<std::size_t, ClassId>> best;
  for (const auto& r : state.labeled) {
    if (r.superpoint < 0) continue;
    auto [it, inserted] = best.try_emplace(r.superpoint, r.points.size(), r.label);
    if (!inserted && r.points.size() > it->second.first) it->second = {r.points.size(), r.label};
  }
  std::map<int, ClassId> out;
  for (const auto& [s, v] : best) out.emplace(s, v.second);
  return out;
}

std::vector<int> ids_of(const std::vector<SuperpointScore>& ranked) {
  std::vector<int> out;
  out.reserve(ranked.size());
  for (const auto& r : ranked) out.push_back(r.superpoint);
  return out;
}

}  // namespace

std::vector<int> select_candidates(const RunConfig& config, const RunState& state, const PointCloud& cloud,
                                   const SuperpointPartition& partition, const Prediction& prediction) {
  const std::vector<int> pool(state.annotation.unlabeled.begin(), state.annotation.unlabeled.end());
  if (pool.empty()) throw std::invalid_argument("no unlabeled superpoints left");
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(config.batch), pool.size());

  switch (config.strategy) {
    case Strategy::Random:
      return random_select(pool, batch, derive_seed(config.rng_seed, static_cast<std::uint64_t>(state.cycle) + 1));
    case Strategy::Entropy:
    case Strategy::LeastConfidence:
    case Strategy::BvSB: {
      const PointMeasure measure = config.strategy == Strategy::Entropy           ? PointMeasure::Entropy
                                   : config.strategy == Strategy::LeastConfidence ? PointMeasure::LeastConfidence
                                                                                  : PointMeasure::BvSB;
      const PointScores scores = score_points(prediction.probs, measure);
      return ids_of(uncertainty_rank(pool, partition, scores, prediction.pred_label, batch));
    }
    case Strategy::ClassBal:
    case Strategy::Ssdr:
      break;
  }

  const PointScores scores = score_points(prediction.probs, PointMeasure::BvSB);
  std::vector<ClassId> dominants;
  dominants.reserve(pool.size() + state.annotation.touched.size());
  for (int s : pool) dominants.push_back(dominant_class(partition.superpoints[static_cast<std::size_t>(s)], prediction.pred_label));
  for (const auto& [s, label] : annotated_classes(state.annotation)) dominants.push_back(label);
  const ClassWeights weights = class_weights(dominants, cloud.num_classes());
  const SuperpointUncertainty mode = config.effective_uncertainty();

  if (config.strategy == Strategy::ClassBal) {
    return ids_of(classbal_rank(pool, partition, scores, prediction.pred_label, weights, batch, mode));
  }

  const auto pool_size = static_cast<std::size_t>(
      std::max(1.0, std::round(config.graph.pool_factor * static_cast<double>(batch))));
  const auto ranked = classbal_rank(pool, partition, scores, prediction.pred_label, weights, pool_size, mode);

  std::vector<SuperpointFeature> nodes;
  std::vector<double> acquisition;
  nodes.reserve(ranked.size());
  for (const auto& r : ranked) {
    nodes.push_back(superpoint_feature(cloud, partition.superpoints[static_cast<std::size_t>(r.superpoint)], prediction,
                                       r.superpoint));
    acquisition.push_back(r.score);
  }
  const SuperpointGraph graph = build_graph(std::move(nodes), config.graph.k);
  const std::vector<char> mask = aggregation_mask(acquisition, config.graph.agg_nodes);
  const RowMatrix merged =
      aggregate(graph, graph.feature_matrix(), {config.graph.rounds, config.graph.normalize}, mask);

  // Rows eligible for FPS, kept in ranked order so row 0 is the best score.
  std::vector<int> rows;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (config.graph.fps_domain == FpsDomain::AllNodes || mask[i]) rows.push_back(static_cast<int>(i));
  }
  RowMatrix eligible(static_cast<Eigen::Index>(rows.size()), merged.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) eligible.row(static_cast<Eigen::Index>(r)) = merged.row(rows[r]);
  const auto count = static_cast<Eigen::Index>(std::min(batch, rows.size()));
  std::vector<int> picked;
  for (int r : fps_select(eligible, count, 0)) picked.push_back(ranked[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])].superpoint);
  return picked;
}

CycleRecord snapshot_record(const RunState& state, const PointCloud& cloud, const SuperpointPartition& partition,
                            const Prediction& prediction, long clicks_cycle) {
  CycleRecord rec;
  rec.cycle = state.cycle;
  rec.clicks_cycle = clicks_cycle;
  rec.clicks_cumulative = state.clicks;
  rec.labeled_superpoints = state.annotation.touched.size();
  rec.labeled_superpoint_fraction =
      static_cast<double>(rec.labeled_superpoints) / static_cast<double>(partition.size());
  rec.labeled_point_fraction =
      static_cast<double>(state.annotation.labeled_point_count()) / static_cast<double>(cloud.size());
  rec.discarded_regions = state.annotation.discarded.size();
  for (const auto& r : state.annotation.labeled) rec.mislabeled_points += count_mislabeled(r.points, r.label, cloud.gt_labels());
  rec.metrics = evaluate(prediction.pred_label, cloud.gt_labels(), cloud.num_classes());
  return rec;
}

CycleOutcome run_cycle(const RunState& state, const RunConfig& config, const PointCloud& cloud,
                       const SuperpointPartition& partition, const Prediction& current) {
  const std::vector<int> candidates = select_candidates(config, state, cloud, partition, current);
  RunState next = state;
  ClickLedger ledger(config.budget);
  if (config.label_strategy == LabelStrategy::NoiseAware) {
    noise_aware_labeling(candidates, config.theta, partition, cloud.gt_labels(), current.pred_label, next.annotation,
                         ledger);
  } else {
    dominant_labeling_batch(candidates, partition, cloud.gt_labels(), next.annotation, ledger);
  }
  next.clicks += ledger.clicks_used();
  next.cycle = state.cycle + 1;
  Prediction prediction = train_and_predict(config.learner, cloud, next.annotation);
  CycleRecord record = snapshot_record(next, cloud, partition, prediction, ledger.clicks_used());
  record.selected = candidates.size();
  return {std::move(next), std::move(record), std::move(prediction)};
}

ExperimentResult run_experiment(const RunConfig& config, const PointCloud& cloud,
                                const SuperpointPartition& partition, std::optional<Metrics> reference) {
  config.validate();
  ExperimentResult result;
  RunSummary& summary = result.summary;
  summary.num_points = static_cast<std::size_t>(cloud.size());
  summary.num_superpoints = partition.size();
  summary.target_metric = config.target_metric == TargetMetric::MeanIoU ? "miou" : "accuracy";
  if (config.compute_target) {
    const Metrics ref = reference ? *reference : full_label_metrics(config.learner, cloud);
    summary.reference_value = target_value(ref, config.target_metric);
    summary.target_value = config.target_ratio * *summary.reference_value;
  }
  auto check_target = [&](const CycleRecord& rec) {
    if (summary.target_value && !summary.clicks_to_target &&
        target_value(rec.metrics, config.target_metric) >= *summary.target_value) {
      summary.clicks_to_target = rec.clicks_cumulative;
      summary.cycle_to_target = rec.cycle;
    }
  };

  RunState state = seed_labeled_set(partition, config.seed_fraction, derive_seed(config.rng_seed, 0), cloud.gt_labels());
  Prediction prediction = train_and_predict(config.learner, cloud, state.annotation);
  result.records.push_back(snapshot_record(state, cloud, partition, prediction, state.clicks));
  check_target(result.records.back());

  for (int c = 0; c < config.cycles; ++c) {
    if (state.annotation.unlabeled.empty()) break;
    if (config.stop_at_target && summary.clicks_to_target) break;
    CycleOutcome outcome = run_cycle(state, config, cloud, partition, prediction);
    state = std::move(outcome.state);
    prediction = std::move(outcome.prediction);
    result.records.push_back(std::move(outcome.record));
    check_target(result.records.back());
  }
  summary.total_clicks = state.clicks;
  return result;
}

PreparedScene prepare_scene(const RunConfig& config) {
  if (config.scene_path) {
    LoadedCloud loaded = load_point_cloud(*config.scene_path, config.scene_classes);
    if (loaded.superpoint_ids) {
      SuperpointPartition partition = SuperpointPartition::from_labels_compacted(*loaded.superpoint_ids);
      return {std::move(loaded.cloud), std::move(partition)};
    }
    SuperpointPartition partition = generate_superpoints(loaded.cloud, config.partition);
    return {std::move(loaded.cloud), std::move(partition)};
  }
  PointCloud cloud = generate_scene(config.scene);
  SuperpointPartition partition = generate_superpoints(cloud, config.partition);
  return {std::move(cloud), std::move(partition)};
}

ExperimentResult run_experiment(const RunConfig& config) {
  PreparedScene scene = prepare_scene(config);
  return run_experiment(config, scene.cloud, scene.partition);
}

}  // namespace ssdr
