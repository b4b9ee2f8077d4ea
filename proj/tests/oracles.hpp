#pragma once

// Brute-force reference implementations, written independently of the
// library so the tests compare two different computations.

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline double sq(const Mat& a, Eigen::Index i, const Mat& b, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index d = 0; d < a.cols(); ++d) {
    const double t = a(i, d) - b(j, d);
    s += t * t;
  }
  return s;
}

// O(|A||B|) chamfer distance with squared Euclidean terms.
inline double chamfer(const Mat& a, const Mat& b) {
  auto directed = [](const Mat& from, const Mat& to) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < from.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < to.rows(); ++j) best = std::min(best, sq(from, i, to, j));
      total += best;
    }
    return total / static_cast<double>(from.rows());
  };
  return directed(a, b) + directed(b, a);
}

// Greedy max-min selection recomputing every minimum from scratch.
inline std::vector<int> fps(const Mat& f, int count, int start) {
  std::vector<int> picked{start};
  while (static_cast<int>(picked.size()) < count) {
    int best = -1;
    double best_min = -1.0;
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      bool taken = false;
      for (int p : picked) taken = taken || p == i;
      if (taken) continue;
      double m = std::numeric_limits<double>::infinity();
      for (int p : picked) m = std::min(m, std::sqrt(sq(f, i, f, p)));
      if (m > best_min) {
        best_min = m;
        best = static_cast<int>(i);
      }
    }
    picked.push_back(best);
  }
  return picked;
}

}  // namespace oracle
