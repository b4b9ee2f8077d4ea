#include "ssdr/config.hpp"
#include "ssdr/errors.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace ssdr {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (in.fail() || !in.eof()) throw ConfigError("invalid value for " + key + ": '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + value + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_number<double>(key, tok));
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

}  // namespace

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues kv;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    for (std::size_t i = 1; i < t.size(); ++i) {
      if (t[i] == '#' && std::isspace(static_cast<unsigned char>(t[i - 1]))) {
        t = trim(t.substr(0, i));
        break;
      }
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, value).second) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": duplicate key " + key);
    }
  }
  return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_key_values(in, path.string());
}

SceneSpec scene_spec_from(const KeyValues& kv, SceneSpec spec) {
  for (const auto& [key, value] : kv) {
    if (key == "scene.extent") {
      const auto v = parse_list(key, value);
      if (v.size() != 3) throw ConfigError("scene.extent needs three values");
      spec.extent = Eigen::Vector3d(v[0], v[1], v[2]);
    } else if (key == "scene.points") {
      spec.num_points = parse_number<long>(key, value);
    } else if (key == "scene.weights") {
      spec.class_weights = parse_list(key, value);
    } else if (key == "scene.clutter") {
      spec.clutter = parse_number<int>(key, value);
    } else if (key == "scene.noise") {
      spec.noise_sigma = parse_number<double>(key, value);
    } else if (key == "scene.color_noise") {
      spec.color_noise = parse_number<double>(key, value);
    } else if (key == "scene.seed") {
      spec.rng_seed = parse_number<std::uint64_t>(key, value);
    }
  }
  return spec;
}

SuperpointUncertainty RunConfig::effective_uncertainty() const {
  if (uncertainty) return *uncertainty;
  return strategy == Strategy::Ssdr ? SuperpointUncertainty::Margin : SuperpointUncertainty::Mean;
}

void RunConfig::validate() const {
  if (batch < 1) throw ConfigError("run.batch must be >= 1");
  if (budget < 1) throw ConfigError("label.budget must be >= 1");
  if (!(seed_fraction > 0.0 && seed_fraction < 1.0)) throw ConfigError("run.seed_fraction must lie in (0, 1)");
  if (cycles < 1) throw ConfigError("run.cycles must be >= 1");
  if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("label.theta must lie in (0, 1]");
  if (graph.k < 0) throw ConfigError("graph.k must be >= 0");
  if (graph.rounds < 1) throw ConfigError("graph.rounds must be >= 1");
  if (graph.agg_nodes && *graph.agg_nodes == 0) throw ConfigError("graph.agg_nodes must be positive");
  if (!(graph.pool_factor > 0.0)) throw ConfigError("graph.pool_factor must be > 0");
  if (!(target_ratio > 0.0 && target_ratio <= 1.0)) throw ConfigError("run.target_ratio must lie in (0, 1]");
  if (scene_path && scene_classes < 1) throw ConfigError("scene.classes is required with scene.path");
  partition.validate();
  if (!scene_path) scene.validate();
}

RunConfig run_config_from(const KeyValues& kv) {
  RunConfig cfg;
  bool learner_seed_set = false;
  for (const auto& [key, value] : kv) {
    if (key.rfind("scene.", 0) == 0) {
      if (key == "scene.path") {
        cfg.scene_path = value;
      } else if (key == "scene.classes") {
        cfg.scene_classes = parse_number<int>(key, value);
      } else if (key == "scene.output") {
        // gen-scene only; harmless here
      } else {
        static const std::set<std::string> scene_keys = {"scene.extent", "scene.points", "scene.weights",
                                                         "scene.clutter", "scene.noise", "scene.color_noise",
                                                         "scene.seed"};
        if (!scene_keys.count(key)) throw ConfigError("unknown config key " + key);
      }
    } else if (key == "run.strategy") {
      cfg.strategy = parse_strategy(value);
    } else if (key == "run.batch") {
      cfg.batch = parse_number<int>(key, value);
    } else if (key == "run.seed_fraction") {
      cfg.seed_fraction = parse_number<double>(key, value);
    } else if (key == "run.cycles") {
      cfg.cycles = parse_number<int>(key, value);
    } else if (key == "run.seed") {
      cfg.rng_seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "run.output") {
      cfg.output = value;
    } else if (key == "run.target") {
      cfg.compute_target = parse_bool(key, value);
    } else if (key == "run.target_ratio") {
      cfg.target_ratio = parse_number<double>(key, value);
    } else if (key == "run.target_metric") {
      if (value == "miou") {
        cfg.target_metric = TargetMetric::MeanIoU;
      } else if (value == "accuracy") {
        cfg.target_metric = TargetMetric::Accuracy;
      } else {
        throw ConfigError("run.target_metric must be miou or accuracy");
      }
    } else if (key == "run.stop_at_target") {
      cfg.stop_at_target = parse_bool(key, value);
    } else if (key == "acq.uncertainty") {
      if (value == "mean") {
        cfg.uncertainty = SuperpointUncertainty::Mean;
      } else if (value == "margin") {
        cfg.uncertainty = SuperpointUncertainty::Margin;
      } else if (value != "auto") {
        throw ConfigError("acq.uncertainty must be auto, mean or margin");
      }
    } else if (key == "label.strategy") {
      if (value == "dominant") {
        cfg.label_strategy = LabelStrategy::Dominant;
      } else if (value == "noise_aware") {
        cfg.label_strategy = LabelStrategy::NoiseAware;
      } else {
        throw ConfigError("label.strategy must be dominant or noise_aware");
      }
    } else if (key == "label.theta") {
      cfg.theta = parse_number<double>(key, value);
    } else if (key == "label.budget") {
      cfg.budget = parse_number<long>(key, value);
    } else if (key == "graph.k") {
      cfg.graph.k = parse_number<int>(key, value);
    } else if (key == "graph.rounds") {
      cfg.graph.rounds = parse_number<int>(key, value);
    } else if (key == "graph.agg_nodes") {
      if (value == "all") {
        cfg.graph.agg_nodes.reset();
      } else {
        const long n = parse_number<long>(key, value);
        if (n < 1) throw ConfigError("graph.agg_nodes must be 'all' or a positive integer");
        cfg.graph.agg_nodes = static_cast<std::size_t>(n);
      }
    } else if (key == "graph.normalize") {
      cfg.graph.normalize = parse_bool(key, value);
    } else if (key == "graph.pool_factor") {
      cfg.graph.pool_factor = parse_number<double>(key, value);
    } else if (key == "graph.fps_nodes") {
      if (value == "all") {
        cfg.graph.fps_domain = FpsDomain::AllNodes;
      } else if (value == "agg") {
        cfg.graph.fps_domain = FpsDomain::AggregationNodes;
      } else {
        throw ConfigError("graph.fps_nodes must be all or agg");
      }
    } else if (key == "learner.kind") {
      cfg.learner.kind = parse_learner_kind(value);
    } else if (key == "learner.k") {
      cfg.learner.k = parse_number<int>(key, value);
    } else if (key == "learner.rho") {
      cfg.learner.rho = parse_number<double>(key, value);
    } else if (key == "learner.c_hi") {
      cfg.learner.c_hi = parse_number<double>(key, value);
    } else if (key == "learner.seed") {
      cfg.learner.rng_seed = parse_number<std::uint64_t>(key, value);
      learner_seed_set = true;
    } else if (key == "partition.voxel_size") {
      cfg.partition.voxel_size = parse_number<double>(key, value);
    } else if (key == "partition.color_threshold") {
      cfg.partition.color_threshold = parse_number<double>(key, value);
    } else if (key == "partition.normal_threshold") {
      cfg.partition.normal_threshold = parse_number<double>(key, value);
    } else if (key == "partition.min_region") {
      cfg.partition.min_region = parse_number<int>(key, value);
    } else if (key == "partition.seed") {
      cfg.partition.rng_seed = parse_number<std::uint64_t>(key, value);
    } else {
      throw ConfigError("unknown config key " + key);
    }
  }
  cfg.scene = scene_spec_from(kv, cfg.scene);
  if (!learner_seed_set) cfg.learner.rng_seed = cfg.rng_seed;
  if (kv.find("label.budget") == kv.end()) cfg.budget = cfg.batch;
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) { return run_config_from(load_key_values(path)); }

}  // namespace ssdr
