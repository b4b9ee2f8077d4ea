#include "ssdr/core_data.hpp"

#include "ssdr/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace ssdr {

PointCloud::PointCloud(Positions positions, Colors colors, Labels gt_labels, int num_classes)
    : positions_(std::move(positions)),
      colors_(std::move(colors)),
      gt_labels_(std::move(gt_labels)),
      num_classes_(num_classes) {
  if (num_classes_ <= 0) throw DataError("number of classes must be positive");
  if (positions_.rows() == 0) throw DataError("point cloud is empty");
  if (colors_.rows() != positions_.rows() ||
      static_cast<Eigen::Index>(gt_labels_.size()) != positions_.rows()) {
    throw DataError("positions, colors and labels differ in length");
  }
  for (Eigen::Index i = 0; i < positions_.rows(); ++i) {
    if (!positions_.row(i).allFinite()) {
      throw DataError("non-finite coordinate at point " + std::to_string(i));
    }
    for (int c = 0; c < 3; ++c) {
      const double v = colors_(i, c);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw DataError("color outside [0,1] at point " + std::to_string(i));
      }
    }
    const ClassId label = gt_labels_[static_cast<std::size_t>(i)];
    if (label < 0 || label >= num_classes_) {
      throw DataError("label " + std::to_string(label) + " outside [0, " +
                      std::to_string(num_classes_) + ") at point " + std::to_string(i));
    }
  }
}

Positions PointCloud::normalized_positions() const {
  const Eigen::RowVector3d lo = positions_.colwise().minCoeff();
  const Eigen::RowVector3d extent = positions_.colwise().maxCoeff() - lo;
  Positions out(positions_.rows(), 3);
  for (int d = 0; d < 3; ++d) {
    if (extent(d) > 0.0) {
      out.col(d) = (positions_.col(d).array() - lo(d)) / extent(d);
    } else {
      out.col(d).setZero();
    }
  }
  return out;
}

SuperpointPartition SuperpointPartition::from_assignment(std::vector<int> assignment) {
  SuperpointPartition p;
  int max_id = -1;
  for (int id : assignment) {
    if (id < 0) throw DataError("negative superpoint id");
    max_id = std::max(max_id, id);
  }
  p.superpoints.resize(static_cast<std::size_t>(max_id + 1));
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    p.superpoints[static_cast<std::size_t>(assignment[i])].push_back(static_cast<int>(i));
  }
  p.assignment = std::move(assignment);
  return p;
}

SuperpointPartition SuperpointPartition::from_labels_compacted(const std::vector<int>& ids) {
  std::unordered_map<int, int> remap;
  std::vector<int> assignment(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto [it, inserted] = remap.try_emplace(ids[i], static_cast<int>(remap.size()));
    assignment[i] = it->second;
  }
  return from_assignment(std::move(assignment));
}

std::size_t ValidationReport::count(ViolationKind kind) const {
  std::size_t n = 0;
  for (const auto& v : violations) n += v.kind == kind;
  return n;
}

ValidationReport validate_partition(const SuperpointPartition& partition, const PointCloud& cloud) {
  ValidationReport report;
  const auto n = static_cast<std::size_t>(cloud.size());
  auto add = [&](ViolationKind kind, int point, int sp, std::string msg) {
    report.violations.push_back({kind, point, sp, std::move(msg)});
  };

  if (partition.assignment.size() != n) {
    add(ViolationKind::SizeMismatch, -1, -1,
        "assignment has " + std::to_string(partition.assignment.size()) + " entries for " +
            std::to_string(n) + " points");
  }

  std::vector<int> owner(n, -1);
  for (std::size_t s = 0; s < partition.superpoints.size(); ++s) {
    const auto& members = partition.superpoints[s];
    const int sp = static_cast<int>(s);
    if (members.empty()) add(ViolationKind::Empty, -1, sp, "superpoint is empty");
    for (int p : members) {
      if (p < 0 || static_cast<std::size_t>(p) >= n) {
        add(ViolationKind::OutOfRange, p, sp, "member index out of range");
        continue;
      }
      auto& o = owner[static_cast<std::size_t>(p)];
      if (o >= 0) {
        add(ViolationKind::Overlap, p, sp,
            "point already belongs to superpoint " + std::to_string(o));
      } else {
        o = sp;
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const int point = static_cast<int>(i);
    if (owner[i] < 0) {
      add(ViolationKind::Coverage, point, -1, "point belongs to no superpoint");
      continue;
    }
    if (i < partition.assignment.size() && partition.assignment[i] != owner[i]) {
      add(ViolationKind::AssignmentMismatch, point, partition.assignment[i],
          "assignment disagrees with member lists");
    }
  }
  return report;
}

Prediction Prediction::from_probs(RowMatrix probs, RowMatrix features) {
  Prediction p;
  p.pred_label.resize(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    p.pred_label[static_cast<std::size_t>(i)] = argmax_lowest(probs.row(i));
  }
  p.probs = std::move(probs);
  p.features = std::move(features);
  return p;
}

void validate_prediction(const Prediction& prediction, double tol) {
  if (static_cast<Eigen::Index>(prediction.pred_label.size()) != prediction.probs.rows()) {
    throw DataError("prediction label count differs from probability rows");
  }
  for (Eigen::Index i = 0; i < prediction.probs.rows(); ++i) {
    const auto row = prediction.probs.row(i);
    if ((row.array() < 0.0).any() || std::abs(row.sum() - 1.0) > tol) {
      throw DataError("probability row " + std::to_string(i) + " is not a distribution");
    }
    if (prediction.pred_label[static_cast<std::size_t>(i)] != argmax_lowest(row)) {
      throw DataError("pred_label disagrees with argmax at point " + std::to_string(i));
    }
  }
}

LoadedCloud parse_point_cloud(std::istream& in, int num_classes, const std::string& source) {
  std::vector<std::array<double, 6>> rows;
  Labels labels;
  std::vector<int> sp_ids;
  int columns = 0;
  std::string line;
  long line_no = 0;
  auto fail = [&](const std::string& why) {
    throw DataError(source + ":" + std::to_string(line_no) + ": " + why);
  };

  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.size() != 7 && tokens.size() != 8) {
      fail("expected 7 or 8 fields, got " + std::to_string(tokens.size()));
    }
    const int cols = static_cast<int>(tokens.size());
    if (columns == 0) columns = cols;
    if (cols != columns) fail("column count changed from " + std::to_string(columns));

    std::array<double, 6> values{};
    for (int k = 0; k < 6; ++k) {
      std::size_t used = 0;
      try {
        values[static_cast<std::size_t>(k)] = std::stod(tokens[static_cast<std::size_t>(k)], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tokens[static_cast<std::size_t>(k)].size()) {
        fail("cannot parse number '" + tokens[static_cast<std::size_t>(k)] + "'");
      }
    }
    auto parse_int = [&](const std::string& tok, const char* what) {
      std::size_t used = 0;
      long v = -1;
      try {
        v = std::stol(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || v < 0) fail(std::string("invalid ") + what + " '" + tok + "'");
      return static_cast<int>(v);
    };
    const int label = parse_int(tokens[6], "label");
    if (label >= num_classes) {
      fail("label " + std::to_string(label) + " >= number of classes " + std::to_string(num_classes));
    }
    rows.push_back(values);
    labels.push_back(label);
    if (cols == 8) sp_ids.push_back(parse_int(tokens[7], "superpoint id"));
  }
  if (rows.empty()) throw DataError(source + ": no points");

  bool rescale = false;
  for (const auto& r : rows) {
    for (int c = 3; c < 6; ++c) rescale = rescale || r[static_cast<std::size_t>(c)] > 1.0;
  }
  Positions pos(static_cast<Eigen::Index>(rows.size()), 3);
  Colors col(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (int c = 0; c < 3; ++c) {
      pos(ii, c) = rows[i][static_cast<std::size_t>(c)];
      col(ii, c) = rescale ? rows[i][static_cast<std::size_t>(c + 3)] / 255.0
                           : rows[i][static_cast<std::size_t>(c + 3)];
    }
  }
  LoadedCloud out{PointCloud(std::move(pos), std::move(col), std::move(labels), num_classes), std::nullopt};
  if (columns == 8) out.superpoint_ids = std::move(sp_ids);
  return out;
}

LoadedCloud load_point_cloud(const std::filesystem::path& path, int num_classes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_point_cloud(in, num_classes, path.string());
}

void write_point_cloud(std::ostream& out, const PointCloud& cloud, const SuperpointPartition* partition) {
  if (partition && static_cast<Eigen::Index>(partition->assignment.size()) != cloud.size()) {
    throw DataError("partition does not match cloud size");
  }
  char buf[256];
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.positions();
    const auto& c = cloud.colors();
    int len = std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g %.9g %.9g %d", p(i, 0), p(i, 1),
                            p(i, 2), c(i, 0), c(i, 1), c(i, 2),
                            cloud.gt_labels()[static_cast<std::size_t>(i)]);
    out.write(buf, len);
    if (partition) out << ' ' << partition->assignment[static_cast<std::size_t>(i)];
    out << '\n';
  }
}

void save_point_cloud(const std::filesystem::path& path, const PointCloud& cloud,
                      const SuperpointPartition* partition) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_point_cloud(out, cloud, partition);
}

Positions gather_positions(const PointCloud& cloud, std::span<const int> region) {
  Positions out(static_cast<Eigen::Index>(region.size()), 3);
  for (std::size_t k = 0; k < region.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = cloud.positions().row(region[k]);
  }
  return out;
}

}  // namespace ssdr
