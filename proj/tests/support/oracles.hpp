#pragma once

// Independent reference implementations. They follow the textbook
// definitions directly and share no code with the library.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "valdet/model.hpp"

namespace valdet::testkit {

struct AlphaOracle {
  double alpha = 1.0;
  double d_o = 0.0;
  double d_e = 0.0;
  bool defined = false;  // at least one unit with >= 2 values
};

/// Nominal alpha by explicit pair enumeration: D_o averages disagreement over
/// ordered within-unit pairs (each unit weighted by 1/(m_u - 1)), D_e over all
/// ordered pairs of pairable values.
inline AlphaOracle alpha_by_pairs(const std::vector<std::vector<int>>& units) {
  std::vector<int> pool;
  double disagree_within = 0.0;
  for (const auto& u : units) {
    if (u.size() < 2) continue;
    double d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
      for (std::size_t j = 0; j < u.size(); ++j)
        if (i != j && u[i] != u[j]) d += 1.0;
    disagree_within += d / static_cast<double>(u.size() - 1);
    pool.insert(pool.end(), u.begin(), u.end());
  }
  AlphaOracle r;
  if (pool.empty()) return r;
  r.defined = true;
  const double n = static_cast<double>(pool.size());
  double disagree_all = 0.0;
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = 0; j < pool.size(); ++j)
      if (i != j && pool[i] != pool[j]) disagree_all += 1.0;
  r.d_o = disagree_within / n;
  r.d_e = disagree_all / (n * (n - 1.0));
  r.alpha = r.d_e == 0.0 ? 1.0 : 1.0 - r.d_o / r.d_e;
  return r;
}

struct MetricsOracle {
  std::vector<double> precision, recall, f1;
  double macro = 0.0;
  double accuracy = 0.0;
};

/// Per-class scores from a full (true, pred) pair-count table.
inline MetricsOracle metrics_by_pair_counts(const std::vector<int>& y, const std::vector<int>& p,
                                            const std::vector<int>& classes) {
  const std::size_t k = classes.size();
  std::vector<std::vector<double>> table(k, std::vector<double>(k, 0.0));
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] == classes[a] && p[i] == classes[b]) table[a][b] += 1.0;
  MetricsOracle m;
  double diag = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    double tp = table[c][c], col = 0.0, row = 0.0;
    for (std::size_t o = 0; o < k; ++o) {
      col += table[o][c];
      row += table[c][o];
    }
    diag += tp;
    const double pr = col > 0 ? tp / col : 0.0;
    const double rc = row > 0 ? tp / row : 0.0;
    m.precision.push_back(pr);
    m.recall.push_back(rc);
    m.f1.push_back(pr + rc > 0 ? 2 * pr * rc / (pr + rc) : 0.0);
    m.macro += m.f1.back() / static_cast<double>(k);
  }
  m.accuracy = y.empty() ? 0.0 : diag / static_cast<double>(y.size());
  return m;
}

/// Minimum of (lambda/2)(w1^2 + w2^2 + b^2) + mean hinge over the dense grid
/// (w1, w2, b) in [-3, 3]^3 with the given step. Labels are 0/1.
inline double svm_grid_minimum(const Eigen::MatrixXd& x, const std::vector<int>& labels, double lambda,
                               double step = 0.01) {
  const int steps = static_cast<int>(std::lround(6.0 / step));
  const std::size_t n = labels.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] ? 1.0 : -1.0;
  double best = INFINITY;
  for (int a = 0; a <= steps; ++a) {
    const double w1 = -3.0 + a * step;
    for (int c = 0; c <= steps; ++c) {
      const double w2 = -3.0 + c * step;
      std::vector<double> partial(n);
      for (std::size_t i = 0; i < n; ++i) partial[i] = w1 * x(i, 0) + w2 * x(i, 1);
      for (int e = 0; e <= steps; ++e) {
        const double b = -3.0 + e * step;
        double hinge = 0.0;
        for (std::size_t i = 0; i < n; ++i) hinge += std::max(0.0, 1.0 - y[i] * (partial[i] + b));
        const double obj = 0.5 * lambda * (w1 * w1 + w2 * w2 + b * b) + hinge / static_cast<double>(n);
        if (obj < best) best = obj;
      }
    }
  }
  return best;
}

/// Ten 2-D points, not linearly separable (one point of each class sits on
/// the wrong side), used against svm_grid_minimum.
inline ml::Dataset svm_reference_fixture() {
  ml::Dataset ds;
  ds.features.resize(10, 2);
  ds.features << 1.0, 2.0, 2.0, 1.5, 1.5, 0.5, 2.5, 2.5, -0.5, 0.2,  //
      -1.0, -1.5, -2.0, -0.5, -1.5, -2.0, 0.5, -1.0, 1.2, 0.3;
  ds.labels = {1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
  for (int i = 0; i < 10; ++i) ds.ids.push_back("f" + std::to_string(i));
  return ds;
}

}  // namespace valdet::testkit
