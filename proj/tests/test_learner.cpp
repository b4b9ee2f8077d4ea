#include "doctest.h"
#include "fixtures.hpp"

#include "ssdr/errors.hpp"
#include "ssdr/learner.hpp"
#include "ssdr/scene.hpp"

#include <random>

using namespace ssdr;

namespace {

LearnerSpec knn(int k) {
  LearnerSpec s;
  s.kind = LearnerKind::Knn;
  s.k = k;
  return s;
}

}  // namespace

TEST_CASE("knn with one neighbour applies Laplace smoothing") {
  Positions pos(3, 3);
  pos << 0, 0, 0,
         10, 0, 0,
         1, 0, 0;
  const PointCloud cloud(pos, Colors::Constant(3, 3, 0.2), {0, 1, 0}, 2);
  const std::vector<LabeledRegion> labeled{{{0}, 0, -1}, {{1}, 1, -1}};
  const Prediction pred = train(knn(1), cloud, labeled)->predict(cloud);
  CHECK(pred.probs(2, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(pred.probs(2, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(pred.pred_label == Labels{0, 1, 0});
  CHECK_NOTHROW(validate_prediction(pred));
}

TEST_CASE("knn with a single reference point") {
  const PointCloud cloud = fixtures::line_cloud({0, 1, 1, 0}, 2);
  const std::vector<LabeledRegion> labeled{{{1}, 1, -1}};
  const Prediction pred = train(knn(5), cloud, labeled)->predict(cloud);
  for (Eigen::Index i = 0; i < 4; ++i) {
    CHECK(pred.pred_label[static_cast<std::size_t>(i)] == 1);
    CHECK(pred.probs(i, 1) == doctest::Approx(2.0 / 3.0));  // k clamps to 1
  }
}

TEST_CASE("knn recovers the label at labeled points") {
  SceneSpec spec;
  spec.num_points = 3000;
  spec.rng_seed = 4;
  const PointCloud cloud = generate_scene(spec);
  std::vector<LabeledRegion> labeled;
  std::mt19937_64 rng(1);
  for (Eigen::Index i = 0; i < cloud.size(); i += 7) {
    labeled.push_back({{static_cast<int>(i)}, cloud.gt_labels()[static_cast<std::size_t>(i)], -1});
  }
  const Prediction pred = train(knn(1), cloud, labeled)->predict(cloud);
  CHECK_NOTHROW(validate_prediction(pred));
  for (const auto& r : labeled) CHECK(pred.pred_label[static_cast<std::size_t>(r.points[0])] == r.label);

  const Prediction wide = train(knn(9), cloud, labeled)->predict(cloud);
  CHECK_NOTHROW(validate_prediction(wide));
  CHECK(wide.features.cols() == cloud.num_classes() + 6);
}

TEST_CASE("knn needs labeled points") {
  const PointCloud cloud = fixtures::line_cloud({0, 1}, 2);
  CHECK_THROWS_AS(train(knn(3), cloud, {}), DataError);
  const std::vector<LabeledRegion> empty_region{{{}, 0, -1}};
  CHECK_THROWS_AS(train(knn(3), cloud, empty_region), DataError);
}

TEST_CASE("noisy oracle hits its accuracy and is seeded") {
  Labels gt(20000);
  for (std::size_t i = 0; i < gt.size(); ++i) gt[i] = static_cast<int>(i % 4);
  const PointCloud cloud = fixtures::line_cloud(gt, 4);
  for (double rho : {0.0, 0.3, 0.8, 1.0}) {
    LearnerSpec spec;
    spec.kind = LearnerKind::NoisyOracle;
    spec.rho = rho;
    spec.c_hi = 0.7;
    spec.rng_seed = 99;
    const Prediction pred = train(spec, cloud, {})->predict(cloud);
    CHECK_NOTHROW(validate_prediction(pred));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) hits += pred.pred_label[i] == gt[i];
    CHECK(std::abs(hits / double(gt.size()) - rho) <= 0.02);
    CHECK(pred.probs.rowwise().maxCoeff().minCoeff() == doctest::Approx(0.7));
    CHECK(pred.probs(0, (pred.pred_label[0] + 1) % 4) == doctest::Approx(0.1));

    const Prediction again = train(spec, cloud, {})->predict(cloud);
    CHECK(again.probs == pred.probs);
  }
}

TEST_CASE("learner spec validation") {
  LearnerSpec s;
  CHECK_NOTHROW(s.validate(3));
  s.k = 0;
  CHECK_THROWS_AS(s.validate(3), ConfigError);
  s = {};
  s.rho = 1.5;
  CHECK_THROWS_AS(s.validate(3), ConfigError);
  s = {};
  s.kind = LearnerKind::NoisyOracle;
  s.c_hi = 0.3;  // not above 1/C
  CHECK_THROWS_AS(s.validate(3), ConfigError);
  CHECK(parse_learner_kind("knn") == LearnerKind::Knn);
  CHECK(parse_learner_kind("noisy_oracle") == LearnerKind::NoisyOracle);
  CHECK_THROWS_AS(parse_learner_kind("svm"), ConfigError);
}

TEST_CASE("point features concatenate probabilities, position and color") {
  const PointCloud cloud = fixtures::line_cloud({0, 1, 0}, 2);
  const RowMatrix probs = fixtures::one_hot({0, 1, 0}, 2);
  const RowMatrix f = point_features(cloud, probs);
  REQUIRE(f.cols() == 8);
  CHECK(f(1, 1) == 1.0);
  CHECK(f(1, 2) == doctest::Approx(0.5));
  CHECK(f(2, 2) == 1.0);
  CHECK(f(0, 5) == doctest::Approx(0.5));
}
