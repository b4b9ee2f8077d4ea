#include "doctest.h"
#include "fixtures.hpp"

#include "ssdr/core_data.hpp"
#include "ssdr/errors.hpp"

#include <random>
#include <sstream>

using namespace ssdr;

TEST_CASE("point cloud rejects inconsistent input") {
  Positions pos = Positions::Zero(2, 3);
  Colors col = Colors::Constant(2, 3, 0.5);

  CHECK_NOTHROW(PointCloud(pos, col, {0, 1}, 2));
  CHECK_THROWS_AS(PointCloud(pos, col, {0}, 2), DataError);
  CHECK_THROWS_AS(PointCloud(pos, col, {0, 2}, 2), DataError);
  CHECK_THROWS_AS(PointCloud(pos, col, {0, -1}, 2), DataError);
  CHECK_THROWS_AS(PointCloud(pos, col, {0, 1}, 0), DataError);

  Colors bright = col;
  bright(1, 2) = 1.5;
  CHECK_THROWS_AS(PointCloud(pos, bright, {0, 1}, 2), DataError);

  Positions bad = pos;
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(PointCloud(bad, col, {0, 1}, 2), DataError);

  CHECK_THROWS_AS(PointCloud(Positions(0, 3), Colors(0, 3), {}, 2), DataError);
}

TEST_CASE("normalized positions span the unit box per axis") {
  Positions pos(3, 3);
  pos << 0, 5, 1,
         2, 5, 3,
         4, 5, 2;
  const PointCloud cloud(pos, Colors::Constant(3, 3, 0.0), {0, 0, 0}, 1);
  const Positions n = cloud.normalized_positions();
  CHECK(n(0, 0) == 0.0);
  CHECK(n(1, 0) == doctest::Approx(0.5));
  CHECK(n(2, 0) == 1.0);
  CHECK(n.col(1).isZero());  // degenerate axis
  CHECK(n(2, 2) == doctest::Approx(0.5));
}

TEST_CASE("partition validation reports each violation kind") {
  const PointCloud cloud = fixtures::line_cloud({0, 0, 1, 1}, 2);

  SUBCASE("valid two-way split") {
    const auto p = SuperpointPartition::from_assignment({0, 0, 1, 1});
    CHECK(validate_partition(p, cloud).ok());
  }
  SUBCASE("single superpoint") {
    const auto p = SuperpointPartition::from_assignment({0, 0, 0, 0});
    CHECK(validate_partition(p, cloud).ok());
  }
  SUBCASE("overlap") {
    auto p = SuperpointPartition::from_assignment({0, 0, 1, 1});
    p.superpoints[1].push_back(1);
    const auto report = validate_partition(p, cloud);
    CHECK(report.count(ViolationKind::Overlap) == 1);
  }
  SUBCASE("uncovered point") {
    auto p = SuperpointPartition::from_assignment({0, 0, 1, 1});
    p.superpoints[1].pop_back();
    const auto report = validate_partition(p, cloud);
    CHECK(report.count(ViolationKind::Coverage) == 1);
  }
  SUBCASE("empty superpoint") {
    const auto p = SuperpointPartition::from_assignment({0, 0, 2, 2});
    CHECK(validate_partition(p, cloud).count(ViolationKind::Empty) == 1);
  }
  SUBCASE("member out of range") {
    auto p = SuperpointPartition::from_assignment({0, 0, 1, 1});
    p.superpoints[1].push_back(9);
    CHECK(validate_partition(p, cloud).count(ViolationKind::OutOfRange) == 1);
  }
  SUBCASE("assignment vector disagrees with members") {
    auto p = SuperpointPartition::from_assignment({0, 0, 1, 1});
    p.assignment[0] = 1;
    CHECK(validate_partition(p, cloud).count(ViolationKind::AssignmentMismatch) >= 1);
  }
  SUBCASE("assignment length") {
    auto p = SuperpointPartition::from_assignment({0, 0, 1});
    CHECK(validate_partition(p, cloud).count(ViolationKind::SizeMismatch) == 1);
  }
}

TEST_CASE("compacted ids follow first appearance") {
  const auto p = SuperpointPartition::from_labels_compacted({7, 7, 3, 9, 3});
  CHECK(p.assignment == std::vector<int>{0, 0, 1, 2, 1});
  REQUIRE(p.size() == 3);
  CHECK(p.superpoints[1] == Region{2, 4});
}

TEST_CASE("prediction argmax breaks ties toward the lowest class") {
  RowMatrix probs(3, 3);
  probs << 0.2, 0.5, 0.3,
           0.4, 0.4, 0.2,
           0.1, 0.1, 0.8;
  const Prediction pred = Prediction::from_probs(probs, probs);
  CHECK(pred.pred_label == Labels{1, 0, 2});
  CHECK_NOTHROW(validate_prediction(pred));

  Prediction broken = pred;
  broken.probs(0, 0) = 0.3;
  CHECK_THROWS_AS(validate_prediction(broken), DataError);

  Prediction wrong_label = pred;
  wrong_label.pred_label[2] = 0;
  CHECK_THROWS_AS(validate_prediction(wrong_label), DataError);
}

TEST_CASE("text format parsing") {
  SUBCASE("seven columns with comments and 0-255 colors") {
    std::istringstream in("# header\n0 0 0 255 0 0 0\n\n1 2 3 0 128 255 1\n");
    const LoadedCloud loaded = parse_point_cloud(in, 2);
    CHECK(loaded.cloud.size() == 2);
    CHECK_FALSE(loaded.superpoint_ids.has_value());
    CHECK(loaded.cloud.colors()(0, 0) == doctest::Approx(1.0));
    CHECK(loaded.cloud.colors()(1, 1) == doctest::Approx(128.0 / 255.0));
    CHECK(loaded.cloud.gt_labels() == Labels{0, 1});
  }
  SUBCASE("eight columns carry superpoint ids") {
    std::istringstream in("0 0 0 0.1 0.1 0.1 0 4\n1 0 0 0.1 0.1 0.1 0 4\n");
    const LoadedCloud loaded = parse_point_cloud(in, 1);
    REQUIRE(loaded.superpoint_ids.has_value());
    CHECK(*loaded.superpoint_ids == std::vector<int>{4, 4});
  }
  SUBCASE("errors name the line") {
    std::istringstream in("0 0 0 0 0 0 0\n0 0 zero 0 0 0 0\n");
    try {
      parse_point_cloud(in, 1, "scene.txt");
      FAIL("expected a DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("scene.txt:2") != std::string::npos);
    }
  }
  SUBCASE("mixed column counts") {
    std::istringstream in("0 0 0 0 0 0 0\n0 0 0 0 0 0 0 1\n");
    CHECK_THROWS_AS(parse_point_cloud(in, 1), DataError);
  }
  SUBCASE("label outside the class range") {
    std::istringstream in("0 0 0 0 0 0 3\n");
    CHECK_THROWS_AS(parse_point_cloud(in, 2), DataError);
  }
  SUBCASE("empty input") {
    std::istringstream in("# nothing\n");
    CHECK_THROWS_AS(parse_point_cloud(in, 2), DataError);
  }
}

TEST_CASE("save then load reproduces the cloud to 9 significant digits") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coord(-50.0, 50.0), unit(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, 3);
  const Eigen::Index n = 200;
  Positions pos(n, 3);
  Colors col(n, 3);
  Labels gt(static_cast<std::size_t>(n));
  std::vector<int> ids(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int d = 0; d < 3; ++d) {
      pos(i, d) = coord(rng);
      col(i, d) = unit(rng);
    }
    gt[static_cast<std::size_t>(i)] = label(rng);
    ids[static_cast<std::size_t>(i)] = static_cast<int>(i / 10);
  }
  const PointCloud cloud(pos, col, gt, 4);
  const auto partition = SuperpointPartition::from_assignment(ids);

  std::stringstream buffer;
  write_point_cloud(buffer, cloud, &partition);
  const LoadedCloud back = parse_point_cloud(buffer, 4);

  CHECK(back.cloud.gt_labels() == gt);
  REQUIRE(back.superpoint_ids.has_value());
  CHECK(*back.superpoint_ids == ids);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int d = 0; d < 3; ++d) {
      CHECK(std::abs(back.cloud.positions()(i, d) - pos(i, d)) <= 1e-8 * std::max(1.0, std::abs(pos(i, d))));
      CHECK(std::abs(back.cloud.colors()(i, d) - col(i, d)) <= 1e-8);
    }
  }
}

TEST_CASE("gather_positions picks rows in region order") {
  const PointCloud cloud = fixtures::line_cloud({0, 0, 0, 0}, 1);
  const std::vector<int> region{3, 1};
  const Positions p = gather_positions(cloud, region);
  REQUIRE(p.rows() == 2);
  CHECK(p(0, 0) == 3.0);
  CHECK(p(1, 0) == 1.0);
}
