#include "ssdr/learner.hpp"

#include "ssdr/errors.hpp"
#include "ssdr/kdtree.hpp"
#include "ssdr/parallel.hpp"

#include <random>

namespace ssdr {
namespace {

using Row6 = Eigen::Matrix<double, 1, 6>;

struct Normalizer {
  Eigen::RowVector3d lo;
  Eigen::RowVector3d extent;

  explicit Normalizer(const PointCloud& cloud) {
    lo = cloud.positions().colwise().minCoeff();
    extent = cloud.positions().colwise().maxCoeff() - lo;
  }

  Row6 embed(const PointCloud& cloud, Eigen::Index i) const {
    Row6 out;
    for (int d = 0; d < 3; ++d) {
      out(d) = extent(d) > 0.0 ? (cloud.positions()(i, d) - lo(d)) / extent(d) : 0.0;
    }
    out.tail<3>() = cloud.colors().row(i);
    return out;
  }
};

class KnnModel final : public SegmentationModel {
 public:
  KnnModel(const LearnerSpec& spec, const PointCloud& cloud, std::span<const LabeledRegion> labeled)
      : k_(spec.k), smoothing_(spec.smoothing), num_classes_(cloud.num_classes()), norm_(cloud) {
    std::size_t total = 0;
    for (const auto& r : labeled) total += r.points.size();
    if (total == 0) throw DataError("knn learner needs at least one labeled point");
    RowMatrix ref(static_cast<Eigen::Index>(total), 6);
    labels_.reserve(total);
    Eigen::Index row = 0;
    for (const auto& r : labeled) {
      for (int p : r.points) {
        ref.row(row++) = norm_.embed(cloud, p);
        labels_.push_back(r.label);
      }
    }
    tree_ = KdTree<double>(ref);
  }

  Prediction predict(const PointCloud& cloud) const override {
    if (cloud.num_classes() != num_classes_) throw DataError("class count differs from training cloud");
    const int k = std::min<int>(k_, static_cast<int>(tree_.size()));
    const double denom = k + num_classes_ * smoothing_;
    RowMatrix probs(cloud.size(), num_classes_);
    parallel_for(0, static_cast<std::size_t>(cloud.size()), [&](std::size_t i) {
      const auto ii = static_cast<Eigen::Index>(i);
      thread_local std::vector<KdTree<double>::Neighbor> hits;
      const Row6 q = norm_.embed(cloud, ii);
      tree_.knn_into(q.data(), k, hits);
      auto row = probs.row(ii);
      row.setConstant(smoothing_);
      for (const auto& hit : hits) row(labels_[static_cast<std::size_t>(hit.second)]) += 1.0;
      row /= denom;
    });
    RowMatrix features = point_features(cloud, probs);
    return Prediction::from_probs(std::move(probs), std::move(features));
  }

 private:
  int k_;
  double smoothing_;
  int num_classes_;
  Normalizer norm_;
  KdTree<double> tree_;
  Labels labels_;
};

class NoisyOracleModel final : public SegmentationModel {
 public:
  explicit NoisyOracleModel(const LearnerSpec& spec) : rho_(spec.rho), c_hi_(spec.c_hi), seed_(spec.rng_seed) {}

  Prediction predict(const PointCloud& cloud) const override {
    const int c = cloud.num_classes();
    if (c < 2) throw DataError("noisy oracle needs at least two classes");
    const double rest = (1.0 - c_hi_) / (c - 1);
    RowMatrix probs = RowMatrix::Constant(cloud.size(), c, rest);
    // One sequential stream in point order keeps predictions a pure
    // function of (seed, cloud).
    std::mt19937_64 rng(seed_);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> wrong(0, c - 2);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
      const ClassId truth = cloud.gt_labels()[static_cast<std::size_t>(i)];
      ClassId top = truth;
      if (!(coin(rng) < rho_)) {
        top = wrong(rng);
        if (top >= truth) ++top;
      }
      probs(i, top) = c_hi_;
    }
    RowMatrix features = point_features(cloud, probs);
    return Prediction::from_probs(std::move(probs), std::move(features));
  }

 private:
  double rho_;
  double c_hi_;
  std::uint64_t seed_;
};

}  // namespace

void LearnerSpec::validate(int num_classes) const {
  if (kind == LearnerKind::Knn && k < 1) throw ConfigError("learner.k must be >= 1");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("learner.rho must lie in [0, 1]");
  if (kind == LearnerKind::NoisyOracle && !(c_hi > 1.0 / num_classes && c_hi <= 1.0)) {
    throw ConfigError("learner.c_hi must lie in (1/C, 1]");
  }
  if (!(smoothing > 0.0)) throw ConfigError("learner smoothing must be > 0");
}

LearnerKind parse_learner_kind(const std::string& name) {
  if (name == "knn") return LearnerKind::Knn;
  if (name == "noisy_oracle") return LearnerKind::NoisyOracle;
  throw ConfigError("unknown learner kind '" + name + "'");
}

std::unique_ptr<SegmentationModel> train(const LearnerSpec& spec, const PointCloud& cloud,
                                         std::span<const LabeledRegion> labeled) {
  spec.validate(cloud.num_classes());
  if (spec.kind == LearnerKind::Knn) return std::make_unique<KnnModel>(spec, cloud, labeled);
  return std::make_unique<NoisyOracleModel>(spec);
}

RowMatrix point_features(const PointCloud& cloud, const RowMatrix& probs) {
  const Eigen::Index c = probs.cols();
  RowMatrix out(cloud.size(), c + 6);
  out.leftCols(c) = probs;
  out.middleCols(c, 3) = cloud.normalized_positions();
  out.rightCols(3) = cloud.colors();
  return out;
}

}  // namespace ssdr
