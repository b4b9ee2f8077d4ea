// ssdr: superpoint active-learning toolkit.
//
//   ssdr partition <cloud> --classes C [-o out]   append superpoint ids
//   ssdr gen-scene <spec-file> [-o out]           synthesize a labelled room
//   ssdr run <config-file> [-o log]               run an acquisition experiment
//   ssdr eval <pred> <gt>                         accuracy / IoU / mIoU
//
// Exit codes: 0 success, 1 configuration error, 2 data error.

#include "ssdr/config.hpp"
#include "ssdr/core_data.hpp"
#include "ssdr/errors.hpp"
#include "ssdr/harness.hpp"
#include "ssdr/partitioner.hpp"
#include "ssdr/scene.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kConfigError = 1;
constexpr int kDataError = 2;

// Labels from a file of bare integers or of 7/8-column cloud lines.
ssdr::Labels read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ssdr::DataError("cannot open " + path);
  ssdr::Labels out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;
    std::string field;
    if (tok.size() == 1) {
      field = tok[0];
    } else if (tok.size() == 7 || tok.size() == 8) {
      field = tok[6];
    } else {
      throw ssdr::DataError(path + ":" + std::to_string(line_no) + ": expected 1, 7 or 8 fields");
    }
    std::size_t used = 0;
    int v = -1;
    try {
      v = std::stoi(field, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != field.size() || v < 0) {
      throw ssdr::DataError(path + ":" + std::to_string(line_no) + ": invalid label '" + field + "'");
    }
    out.push_back(v);
  }
  return out;
}

template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw ssdr::DataError("cannot write " + path);
  fn(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superpoint active-learning selection toolkit"};
  app.require_subcommand(1);

  std::string cloud_path, out_path;
  int classes = 0;
  ssdr::PartitionerParams params;
  auto* partition_cmd = app.add_subcommand("partition", "Partition a cloud into superpoints (8-column output)");
  partition_cmd->add_option("cloud", cloud_path, "Input cloud (x y z r g b label)")->required();
  partition_cmd->add_option("--classes", classes, "Number of classes C")->required();
  partition_cmd->add_option("--voxel", params.voxel_size, "Voxel size in meters");
  partition_cmd->add_option("--color", params.color_threshold, "Max mean color distance");
  partition_cmd->add_option("--normal", params.normal_threshold, "Max normal angle in radians");
  partition_cmd->add_option("--min-region", params.min_region, "Minimum superpoint size");
  partition_cmd->add_option("--seed", params.rng_seed, "Seed for region growing order");
  partition_cmd->add_option("-o,--output", out_path, "Output file (default stdout)");

  std::string spec_path;
  auto* scene_cmd = app.add_subcommand("gen-scene", "Generate a synthetic labelled room");
  scene_cmd->add_option("spec", spec_path, "Scene spec file (scene.* keys)")->required();
  scene_cmd->add_option("-o,--output", out_path, "Output file (overrides scene.output)");

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "Run an active-learning experiment");
  run_cmd->add_option("config", config_path, "Run config file")->required();
  run_cmd->add_option("-o,--output", out_path, "Run log path (overrides run.output)");

  std::string pred_path, gt_path;
  auto* eval_cmd = app.add_subcommand("eval", "Score predicted labels against ground truth");
  eval_cmd->add_option("pred", pred_path, "Predicted labels")->required();
  eval_cmd->add_option("gt", gt_path, "Ground-truth labels")->required();
  eval_cmd->add_option("--classes", classes, "Number of classes (default: max label + 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*partition_cmd) {
      const ssdr::LoadedCloud loaded = ssdr::load_point_cloud(cloud_path, classes);
      const ssdr::SuperpointPartition partition = ssdr::generate_superpoints(loaded.cloud, params);
      with_output(out_path, [&](std::ostream& out) { ssdr::write_point_cloud(out, loaded.cloud, &partition); });
      std::cerr << loaded.cloud.size() << " points, " << partition.size() << " superpoints\n";
    } else if (*scene_cmd) {
      const ssdr::KeyValues kv = ssdr::load_key_values(spec_path);
      for (const auto& [key, value] : kv) {
        if (key.rfind("scene.", 0) != 0) throw ssdr::ConfigError("unknown scene key " + key);
      }
      const ssdr::SceneSpec spec = ssdr::scene_spec_from(kv);
      if (out_path.empty()) {
        if (auto it = kv.find("scene.output"); it != kv.end()) out_path = it->second;
      }
      const ssdr::PointCloud cloud = ssdr::generate_scene(spec);
      with_output(out_path, [&](std::ostream& out) { ssdr::write_point_cloud(out, cloud); });
    } else if (*run_cmd) {
      ssdr::RunConfig config = ssdr::load_run_config(config_path);
      if (!out_path.empty()) config.output = out_path;
      const ssdr::ExperimentResult result = ssdr::run_experiment(config);
      with_output(config.output.string(), [&](std::ostream& out) { result.write_jsonl(out); });
    } else if (*eval_cmd) {
      const ssdr::Labels pred = read_labels(pred_path);
      const ssdr::Labels gt = read_labels(gt_path);
      if (classes <= 0) {
        for (int v : pred) classes = std::max(classes, v + 1);
        for (int v : gt) classes = std::max(classes, v + 1);
      }
      const ssdr::Metrics m = ssdr::evaluate(pred, gt, classes);
      nlohmann::ordered_json j;
      j["accuracy"] = m.accuracy;
      j["miou"] = m.miou;
      auto ious = nlohmann::ordered_json::array();
      for (const auto& v : m.class_iou) ious.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json());
      j["class_iou"] = ious;
      std::cout << j.dump() << '\n';
    }
  } catch (const ssdr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ssdr::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  }
  return 0;
}
