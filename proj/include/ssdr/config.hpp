#pragma once

#include "ssdr/acquisition.hpp"
#include "ssdr/learner.hpp"
#include "ssdr/partitioner.hpp"
#include "ssdr/scene.hpp"

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>

namespace ssdr {

/// Flat `section.key = value` entries. `#` starts a comment, either at the
/// start of a line or after whitespace.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in, const std::string& source = "<stream>");
KeyValues load_key_values(const std::filesystem::path& path);

enum class LabelStrategy { Dominant, NoiseAware };
enum class FpsDomain { AllNodes, AggregationNodes };
enum class TargetMetric { MeanIoU, Accuracy };

struct GraphConfig {
  int k = 5;
  int rounds = 1;
  std::optional<std::size_t> agg_nodes;  // nullopt = all
  bool normalize = false;
  double pool_factor = 3.0;
  FpsDomain fps_domain = FpsDomain::AllNodes;
};

struct RunConfig {
  Strategy strategy = Strategy::Ssdr;
  int batch = 20;                  // B, superpoints selected per cycle
  long budget = 20;                // K_t, clicks per cycle
  double seed_fraction = 0.005;
  int cycles = 10;
  LabelStrategy label_strategy = LabelStrategy::NoiseAware;
  double theta = 0.9;
  std::optional<SuperpointUncertainty> uncertainty;  // default per strategy
  GraphConfig graph;
  LearnerSpec learner;
  PartitionerParams partition;
  std::uint64_t rng_seed = 0;
  std::filesystem::path output;

  // Scene source: a cloud file (with `classes`) or the generator.
  std::optional<std::filesystem::path> scene_path;
  int scene_classes = 0;
  SceneSpec scene;

  bool compute_target = true;
  double target_ratio = 0.9;
  TargetMetric target_metric = TargetMetric::MeanIoU;
  bool stop_at_target = false;

  SuperpointUncertainty effective_uncertainty() const;
  void validate() const;
};

/// Builds a config from parsed entries. Unknown keys and bad values raise ConfigError.
RunConfig run_config_from(const KeyValues& kv);
RunConfig load_run_config(const std::filesystem::path& path);

/// Reads `scene.*` keys (also used by `gen-scene`).
SceneSpec scene_spec_from(const KeyValues& kv, SceneSpec base = {});

}  // namespace ssdr
