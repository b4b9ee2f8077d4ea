#pragma once

#include "ssdr/core_data.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssdr {

using PointScores = Eigen::VectorXd;

namespace detail {
template <typename Derived>
void require_distribution(const Eigen::MatrixBase<Derived>& row, double tol = 1e-6) {
  if (row.size() == 0 || (row.array() < 0).any() || std::abs(double(row.sum()) - 1.0) > tol) {
    throw std::invalid_argument("probability row is not normalized");
  }
}
}  // namespace detail

/// Best-versus-second-best ratio p2 / p1 in [0,1]; 1 when p1 is 0.
template <typename Derived>
typename Derived::Scalar point_uncertainty_bvsb(const Eigen::MatrixBase<Derived>& row) {
  using Scalar = typename Derived::Scalar;
  detail::require_distribution(row);
  if (row.size() < 2) throw std::invalid_argument("BvSB needs at least two classes");
  Scalar best(0), second(0);
  for (Eigen::Index c = 0; c < row.size(); ++c) {
    const Scalar p = row(c);
    if (p > best) {
      second = best;
      best = p;
    } else if (p > second) {
      second = p;
    }
  }
  if (best == Scalar(0)) return Scalar(1);
  return second / best;
}

/// Shannon entropy with 0 ln 0 = 0.
template <typename Derived>
typename Derived::Scalar point_uncertainty_entropy(const Eigen::MatrixBase<Derived>& row) {
  using Scalar = typename Derived::Scalar;
  detail::require_distribution(row);
  Scalar h(0);
  for (Eigen::Index c = 0; c < row.size(); ++c) {
    const Scalar p = row(c);
    if (p > Scalar(0)) h -= p * std::log(p);
  }
  return h;
}

/// Least confidence: 1 - max p.
template <typename Derived>
typename Derived::Scalar point_uncertainty_lc(const Eigen::MatrixBase<Derived>& row) {
  detail::require_distribution(row);
  return typename Derived::Scalar(1) - row.maxCoeff();
}

enum class PointMeasure { BvSB, Entropy, LeastConfidence };

/// Scores every probability row of a prediction.
PointScores score_points(const RowMatrix& probs, PointMeasure measure);

/// Mean point uncertainty over a region.
double superpoint_uncertainty_mean(const PointScores& scores, std::span<const int> region);

/// Sum over points predicted as the region's dominant predicted class minus
/// the sum over the rest. Can be negative.
double superpoint_uncertainty_margin(const PointScores& scores, const Labels& pred_labels,
                                     std::span<const int> region);

struct ClassWeights {
  Eigen::VectorXd w;
  double operator()(ClassId c) const { return w(c); }
};

/// w(c) = exp(-|{s : Do(s) = c}| / |U u L|) over the dominant classes of all
/// labeled and unlabeled superpoints.
ClassWeights class_weights(std::span<const ClassId> dominant_classes, int num_classes);

enum class SuperpointUncertainty { Mean, Margin };

struct SuperpointScore {
  int superpoint = -1;
  double uncertainty = 0.0;
  ClassId dominant = 0;
  double score = 0.0;
};

/// Stable descending sort by score, ties toward the lower superpoint id,
/// truncated to the first `limit` entries.
std::vector<SuperpointScore> rank_descending(std::vector<SuperpointScore> scores, std::size_t limit);

/// ClassBal ranking: score = u(s) * w(Do(s)) with u from the chosen mode and
/// Do the dominant predicted class. Returns min(M, |unlabeled|) entries.
std::vector<SuperpointScore> classbal_rank(std::span<const int> unlabeled, const SuperpointPartition& partition,
                                           const PointScores& scores, const Labels& pred_labels,
                                           const ClassWeights& weights, std::size_t pool_size,
                                           SuperpointUncertainty mode);

/// Uncertainty-only ranking (mean point score, unit weights).
std::vector<SuperpointScore> uncertainty_rank(std::span<const int> unlabeled, const SuperpointPartition& partition,
                                              const PointScores& scores, const Labels& pred_labels,
                                              std::size_t count);

/// Uniform sample of `count` ids without replacement; deterministic per seed.
std::vector<int> random_select(std::span<const int> pool, std::size_t count, std::uint64_t rng_seed);

enum class Strategy { Random, Entropy, LeastConfidence, BvSB, ClassBal, Ssdr };

Strategy parse_strategy(const std::string& name);
std::string to_string(Strategy strategy);

}  // namespace ssdr
