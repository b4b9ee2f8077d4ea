#include "ssdr/acquisition.hpp"

#include "ssdr/errors.hpp"
#include "ssdr/parallel.hpp"
#include "ssdr/partitioner.hpp"

#include <algorithm>
#include <random>

namespace ssdr {

PointScores score_points(const RowMatrix& probs, PointMeasure measure) {
  PointScores out(probs.rows());
  parallel_for(0, static_cast<std::size_t>(probs.rows()), [&](std::size_t i) {
    const auto row = probs.row(static_cast<Eigen::Index>(i));
    switch (measure) {
      case PointMeasure::BvSB: out(static_cast<Eigen::Index>(i)) = point_uncertainty_bvsb(row); break;
      case PointMeasure::Entropy: out(static_cast<Eigen::Index>(i)) = point_uncertainty_entropy(row); break;
      case PointMeasure::LeastConfidence: out(static_cast<Eigen::Index>(i)) = point_uncertainty_lc(row); break;
    }
  });
  return out;
}

double superpoint_uncertainty_mean(const PointScores& scores, std::span<const int> region) {
  if (region.empty()) throw std::invalid_argument("uncertainty of an empty region");
  double sum = 0.0;
  for (int p : region) sum += scores(p);
  return sum / static_cast<double>(region.size());
}

double superpoint_uncertainty_margin(const PointScores& scores, const Labels& pred_labels,
                                     std::span<const int> region) {
  if (region.empty()) throw std::invalid_argument("uncertainty of an empty region");
  const ClassId dom = dominant_class(region, pred_labels);
  double agree = 0.0, disagree = 0.0;
  for (int p : region) {
    if (pred_labels[static_cast<std::size_t>(p)] == dom) {
      agree += scores(p);
    } else {
      disagree += scores(p);
    }
  }
  return agree - disagree;
}

ClassWeights class_weights(std::span<const ClassId> dominant_classes, int num_classes) {
  if (dominant_classes.empty()) throw std::invalid_argument("class weights need at least one superpoint");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(num_classes);
  for (ClassId c : dominant_classes) {
    if (c < 0 || c >= num_classes) throw std::invalid_argument("class id out of range");
    counts(c) += 1.0;
  }
  const double total = static_cast<double>(dominant_classes.size());
  return ClassWeights{(-counts.array() / total).exp().matrix()};
}

std::vector<SuperpointScore> rank_descending(std::vector<SuperpointScore> scores, std::size_t limit) {
  std::stable_sort(scores.begin(), scores.end(), [](const SuperpointScore& a, const SuperpointScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.superpoint < b.superpoint;
  });
  if (scores.size() > limit) scores.resize(limit);
  return scores;
}

std::vector<SuperpointScore> classbal_rank(std::span<const int> unlabeled, const SuperpointPartition& partition,
                                           const PointScores& scores, const Labels& pred_labels,
                                           const ClassWeights& weights, std::size_t pool_size,
                                           SuperpointUncertainty mode) {
  if (unlabeled.empty()) throw std::invalid_argument("no unlabeled superpoints to rank");
  if (pool_size == 0) throw std::invalid_argument("pool size must be >= 1");
  std::vector<SuperpointScore> all(unlabeled.size());
  parallel_for(0, unlabeled.size(), [&](std::size_t k) {
    const int s = unlabeled[k];
    const auto& region = partition.superpoints[static_cast<std::size_t>(s)];
    SuperpointScore& out = all[k];
    out.superpoint = s;
    out.dominant = dominant_class(region, pred_labels);
    out.uncertainty = mode == SuperpointUncertainty::Mean
                          ? superpoint_uncertainty_mean(scores, region)
                          : superpoint_uncertainty_margin(scores, pred_labels, region);
    out.score = out.uncertainty * weights(out.dominant);
  });
  return rank_descending(std::move(all), pool_size);
}

std::vector<SuperpointScore> uncertainty_rank(std::span<const int> unlabeled, const SuperpointPartition& partition,
                                              const PointScores& scores, const Labels& pred_labels,
                                              std::size_t count) {
  if (unlabeled.empty()) throw std::invalid_argument("no unlabeled superpoints to rank");
  std::vector<SuperpointScore> all(unlabeled.size());
  parallel_for(0, unlabeled.size(), [&](std::size_t k) {
    const int s = unlabeled[k];
    const auto& region = partition.superpoints[static_cast<std::size_t>(s)];
    all[k] = {s, superpoint_uncertainty_mean(scores, region), dominant_class(region, pred_labels), 0.0};
    all[k].score = all[k].uncertainty;
  });
  return rank_descending(std::move(all), count);
}

std::vector<int> random_select(std::span<const int> pool, std::size_t count, std::uint64_t rng_seed) {
  if (count > pool.size()) throw std::invalid_argument("cannot sample more items than the pool holds");
  std::vector<int> items(pool.begin(), pool.end());
  std::mt19937_64 rng(rng_seed);
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, items.size() - 1);
    std::swap(items[i], items[pick(rng)]);
  }
  items.resize(count);
  return items;
}

Strategy parse_strategy(const std::string& name) {
  if (name == "random") return Strategy::Random;
  if (name == "entropy") return Strategy::Entropy;
  if (name == "lc") return Strategy::LeastConfidence;
  if (name == "bvsb") return Strategy::BvSB;
  if (name == "classbal") return Strategy::ClassBal;
  if (name == "ssdr") return Strategy::Ssdr;
  throw ConfigError("unknown strategy '" + name + "'");
}

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::Random: return "random";
    case Strategy::Entropy: return "entropy";
    case Strategy::LeastConfidence: return "lc";
    case Strategy::BvSB: return "bvsb";
    case Strategy::ClassBal: return "classbal";
    case Strategy::Ssdr: return "ssdr";
  }
  return "unknown";
}

}  // namespace ssdr
