#pragma once

#include "ssdr/core_data.hpp"

#include <random>
#include <vector>

namespace fixtures {

// Points along the x axis at unit spacing, grey, with the given labels.
inline ssdr::PointCloud line_cloud(const ssdr::Labels& labels, int num_classes) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  ssdr::Positions pos = ssdr::Positions::Zero(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) pos(i, 0) = static_cast<double>(i);
  ssdr::Colors col = ssdr::Colors::Constant(n, 3, 0.5);
  return ssdr::PointCloud(pos, col, labels, num_classes);
}

inline ssdr::RowMatrix one_hot(const ssdr::Labels& labels, int num_classes) {
  ssdr::RowMatrix p = ssdr::RowMatrix::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) p(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return p;
}

inline ssdr::Prediction prediction_from_labels(const ssdr::Labels& labels, int num_classes) {
  ssdr::RowMatrix p = one_hot(labels, num_classes);
  ssdr::RowMatrix f = p;
  return ssdr::Prediction::from_probs(std::move(p), std::move(f));
}

// Random distribution row over c classes.
inline Eigen::RowVectorXd random_distribution(std::mt19937_64& rng, int c) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  Eigen::RowVectorXd row(c);
  for (int k = 0; k < c; ++k) row(k) = u(rng);
  return row / row.sum();
}

}  // namespace fixtures
