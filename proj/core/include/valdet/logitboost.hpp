#pragma once

#include <cstdint>
#include <vector>

#include "valdet/model.hpp"

namespace valdet::ml {

struct LogitBoostParams {
  std::size_t rounds = 100;
  double max_response = 4.0;   // |z| clamp
  double weight_floor = 1e-8;  // floor on p(1-p)
};

/// Binary LogitBoost with weighted least-squares regression stumps:
/// p = sigmoid(2F), z = (y - p) / (p(1-p)) clamped, w = p(1-p) floored,
/// F += stump / 2, with the stump halved (and stored halved) whenever the
/// full step would raise the training loss. When `loss_trace` is given it
/// receives the training
/// log-loss before the first round and after every round (rounds + 1 values).
/// No subsampling, so `seed` does not affect the result.
BoostModel train_logitboost(const Dataset& ds, const LogitBoostParams& params, std::uint64_t seed = 0,
                            std::vector<double>* loss_trace = nullptr);

/// Weighted least-squares stump over all features and midpoint thresholds.
/// Falls back to a constant stump when no feature has two distinct values.
Stump fit_regression_stump(const Eigen::MatrixXd& x, const Eigen::VectorXd& z, const Eigen::VectorXd& w);

/// Mean binary log-loss of probabilities p against 0/1 labels.
double log_loss(const Eigen::VectorXd& p, const std::vector<int>& labels);

}  // namespace valdet::ml
