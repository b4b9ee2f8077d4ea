#pragma once

#include "ssdr/core_data.hpp"
#include "ssdr/labeling.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>

namespace ssdr {

enum class LearnerKind { NoisyOracle, Knn };

struct LearnerSpec {
  LearnerKind kind = LearnerKind::Knn;
  int k = 25;           // knn neighbours
  double rho = 0.8;     // noisy oracle accuracy
  double c_hi = 0.9;    // noisy oracle top probability
  double smoothing = 1.0;
  std::uint64_t rng_seed = 0;

  void validate(int num_classes) const;
};

LearnerKind parse_learner_kind(const std::string& name);

/// A trained segmentation model. Immutable; predict is safe to call concurrently.
class SegmentationModel {
 public:
  virtual ~SegmentationModel() = default;
  virtual Prediction predict(const PointCloud& cloud) const = 0;
};

/// Fits a model on the labeled regions (ignored by the noisy oracle).
std::unique_ptr<SegmentationModel> train(const LearnerSpec& spec, const PointCloud& cloud,
                                         std::span<const LabeledRegion> labeled);

/// Per-point feature rows: probabilities, min-max normalised position, color.
RowMatrix point_features(const PointCloud& cloud, const RowMatrix& probs);

}  // namespace ssdr
