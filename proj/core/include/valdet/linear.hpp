#pragma once

#include <cstdint>
#include <span>

#include "valdet/model.hpp"

namespace valdet::ml {

struct LogRegParams {
  double l2_lambda = 1e-2;
  std::size_t max_iters = 1000;
  double tol = 1e-6;
};

/// Mean logistic loss + (lambda/2)||w||^2; the bias is not penalized.
double logreg_objective(const Dataset& ds, const Eigen::VectorXd& w, double b, double l2_lambda);

struct LinearGradient {
  Eigen::VectorXd weights;
  double bias = 0.0;
};
LinearGradient logreg_gradient(const Dataset& ds, const Eigen::VectorXd& w, double b, double l2_lambda);

/// Full-batch gradient descent from (w = 0, b = prior log-odds), with
/// Barzilai-Borwein trial steps and Armijo backtracking. Stops when the
/// gradient norm drops below tol or after max_iters. Deterministic; `seed` is
/// recorded only.
LinearModel train_logreg(const Dataset& ds, const LogRegParams& params, std::uint64_t seed = 0);

struct SvmParams {
  double l2_lambda = 1e-2;
  std::size_t epochs = 50;
  // Folds used to collect out-of-fold decision values for Platt scaling.
  std::size_t calibration_folds = 3;
};

/// (lambda/2)(||w||^2 + b^2) + mean hinge loss. The bias is handled as an
/// extra constant feature and is therefore regularized too.
double svm_objective(const Dataset& ds, const Eigen::VectorXd& w, double b, double l2_lambda);

/// Pegasos stochastic subgradient descent with step 1/(lambda t) over seeded
/// per-epoch shuffles. Returns whichever of the last iterate and the
/// second-half average has the lower objective, then fits Platt scaling.
LinearModel train_linear_svm(const Dataset& ds, const SvmParams& params, std::uint64_t seed);
/// Same optimizer without calibration.
LinearModel train_linear_svm_uncalibrated(const Dataset& ds, const SvmParams& params, std::uint64_t seed);

/// Platt sigmoid fit (Newton with backtracking, smoothed targets).
PlattCalibration fit_platt(std::span<const double> decision, std::span<const int> labels);

}  // namespace valdet::ml
