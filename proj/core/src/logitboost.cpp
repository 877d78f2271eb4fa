#include "valdet/logitboost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "valdet/error.hpp"

namespace valdet::ml {

namespace {

using SortedIndex = std::vector<std::vector<std::size_t>>;

SortedIndex presort(const Eigen::MatrixXd& x) {
  SortedIndex order(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto& idx = order[static_cast<std::size_t>(f)];
    idx.resize(static_cast<std::size_t>(x.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return x(static_cast<Eigen::Index>(a), f) < x(static_cast<Eigen::Index>(b), f);
    });
  }
  return order;
}

Stump fit_stump_sorted(const Eigen::MatrixXd& x, const SortedIndex& order, const Eigen::VectorXd& z,
                       const Eigen::VectorXd& w) {
  const double w_total = w.sum();
  const double s_total = w.dot(z);
  const double mean = w_total > 0.0 ? s_total / w_total : 0.0;
  Stump best{0, std::numeric_limits<double>::infinity(), mean, mean};
  // Score = S_l^2/W_l + S_r^2/W_r; the constant fit scores S^2/W.
  double best_score = w_total > 0.0 ? s_total * s_total / w_total : 0.0;
  const double eps = 1e-12 * (1.0 + std::abs(best_score));

  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    const auto& idx = order[static_cast<std::size_t>(f)];
    double w_left = 0.0;
    double s_left = 0.0;
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(idx[k]);
      w_left += w(i);
      s_left += w(i) * z(i);
      const double v = x(i, f);
      const double v_next = x(static_cast<Eigen::Index>(idx[k + 1]), f);
      if (v_next <= v) continue;
      const double w_right = w_total - w_left;
      if (w_left <= 0.0 || w_right <= 0.0) continue;
      const double s_right = s_total - s_left;
      const double score = s_left * s_left / w_left + s_right * s_right / w_right;
      if (score > best_score + eps) {
        best_score = score;
        best = Stump{static_cast<std::size_t>(f), 0.5 * (v + v_next), s_left / w_left, s_right / w_right};
      }
    }
  }
  return best;
}

}  // namespace

double log_loss(const Eigen::VectorXd& p, const std::vector<int>& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = std::clamp(p(i), 1e-15, 1.0 - 1e-15);
    total -= labels[static_cast<std::size_t>(i)] == 1 ? std::log(pi) : std::log1p(-pi);
  }
  return total / static_cast<double>(p.size());
}

Stump fit_regression_stump(const Eigen::MatrixXd& x, const Eigen::VectorXd& z, const Eigen::VectorXd& w) {
  if (x.rows() != z.size() || z.size() != w.size()) throw InvalidArgument("stump inputs are not aligned");
  if (x.cols() == 0) throw InvalidArgument("stump needs at least one feature");
  return fit_stump_sorted(x, presort(x), z, w);
}

BoostModel train_logitboost(const Dataset& ds, const LogitBoostParams& params, std::uint64_t /*seed*/,
                            std::vector<double>* loss_trace) {
  if (params.rounds < 1) throw InvalidArgument("LogitBoost needs at least one round");
  require_binary_both_classes(ds);
  if (ds.dim() == 0) throw InvalidArgument("LogitBoost needs at least one feature");

  const auto n = static_cast<Eigen::Index>(ds.size());
  const auto order = presort(ds.features);
  Eigen::VectorXd F = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd p(n), z(n), w(n);

  auto probabilities = [&] {
    for (Eigen::Index i = 0; i < n; ++i) p(i) = sigmoid(2.0 * F(i));
  };
  probabilities();
  if (loss_trace) {
    loss_trace->clear();
    loss_trace->push_back(log_loss(p, ds.labels));
  }

  // Same quantity as log_loss, computed from scores without clamping.
  auto total_loss = [&](const Eigen::VectorXd& scores) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double margin = 2.0 * scores(i) * (ds.labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0);
      total += margin > 0.0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
    }
    return total;
  };
  double loss = total_loss(F);
  Eigen::VectorXd delta(n);

  BoostModel model;
  model.dim = ds.dim();
  model.stumps.reserve(params.rounds);
  for (std::size_t m = 0; m < params.rounds; ++m) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double y = ds.labels[static_cast<std::size_t>(i)];
      const double pq = p(i) * (1.0 - p(i));
      const double response = pq > 0.0 ? (y - p(i)) / pq : (y > p(i) ? params.max_response : -params.max_response);
      z(i) = std::clamp(response, -params.max_response, params.max_response);
      w(i) = std::max(pq, params.weight_floor);
    }
    Stump stump = fit_stump_sorted(ds.features, order, z, w);
    for (Eigen::Index i = 0; i < n; ++i) delta(i) = 0.5 * stump(ds.features.row(i));
    // The stump is a per-leaf Newton step, which can overshoot on noisy data;
    // halve it until the training loss does not go up.
    double scale = 1.0;
    double next = total_loss(F + delta);
    for (int halvings = 0; next > loss && halvings < 40; ++halvings) {
      scale *= 0.5;
      next = total_loss(F + scale * delta);
    }
    if (next > loss) scale = 0.0, next = loss;
    F += scale * delta;
    if (!F.allFinite()) throw NumericError("LogitBoost score became non-finite at round " + std::to_string(m + 1));
    stump.left *= scale;
    stump.right *= scale;
    loss = next;
    model.stumps.push_back(stump);
    probabilities();
    if (loss_trace) loss_trace->push_back(log_loss(p, ds.labels));
  }
  return model;
}

}  // namespace valdet::ml
