#include "valdet/linear.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "valdet/crossval.hpp"
#include "valdet/error.hpp"

namespace valdet::ml {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

double logreg_objective(const Dataset& ds, const Eigen::VectorXd& w, double b, double l2_lambda) {
  const Eigen::VectorXd z = (ds.features * w).array() + b;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) loss += softplus(z(i)) - ds.labels[static_cast<std::size_t>(i)] * z(i);
  return loss / static_cast<double>(ds.size()) + 0.5 * l2_lambda * w.squaredNorm();
}

LinearGradient logreg_gradient(const Dataset& ds, const Eigen::VectorXd& w, double b, double l2_lambda) {
  const Eigen::VectorXd z = (ds.features * w).array() + b;
  Eigen::VectorXd resid(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) resid(i) = sigmoid(z(i)) - ds.labels[static_cast<std::size_t>(i)];
  const double n = static_cast<double>(ds.size());
  LinearGradient g;
  g.weights = ds.features.transpose() * resid / n + l2_lambda * w;
  g.bias = resid.sum() / n;
  return g;
}

LinearModel train_logreg(const Dataset& ds, const LogRegParams& params, std::uint64_t /*seed*/) {
  require_binary_both_classes(ds);
  if (params.l2_lambda < 0.0) throw InvalidArgument("l2_lambda must be >= 0");

  const auto d = static_cast<Eigen::Index>(ds.dim());
  const double prior = static_cast<double>(ds.count(1)) / static_cast<double>(ds.size());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = std::log(prior / (1.0 - prior));

  double f = logreg_objective(ds, w, b, params.l2_lambda);
  auto g = logreg_gradient(ds, w, b, params.l2_lambda);
  double step = 1.0;
  for (std::size_t it = 0; it < params.max_iters; ++it) {
    if (!std::isfinite(f)) throw NumericError("logistic loss became non-finite at iteration " + std::to_string(it));
    const double gnorm2 = g.weights.squaredNorm() + g.bias * g.bias;
    if (std::sqrt(gnorm2) < params.tol) break;

    double t = step;
    Eigen::VectorXd w_new;
    double b_new = 0.0;
    double f_new = 0.0;
    for (;;) {
      w_new = w - t * g.weights;
      b_new = b - t * g.bias;
      f_new = logreg_objective(ds, w_new, b_new, params.l2_lambda);
      if (f_new <= f - 1e-4 * t * gnorm2) break;
      t *= 0.5;
      if (t < 1e-20) break;
    }
    if (t < 1e-20) break;  // no descent possible at machine precision

    auto g_new = logreg_gradient(ds, w_new, b_new, params.l2_lambda);
    // Barzilai-Borwein trial step for the next iteration.
    const Eigen::VectorXd s_w = w_new - w;
    const double s_b = b_new - b;
    const Eigen::VectorXd y_w = g_new.weights - g.weights;
    const double y_b = g_new.bias - g.bias;
    const double sy = s_w.dot(y_w) + s_b * y_b;
    const double ss = s_w.squaredNorm() + s_b * s_b;
    step = sy > 0.0 ? ss / sy : std::min(1.0, 2.0 * t);

    w = std::move(w_new);
    b = b_new;
    f = f_new;
    g = std::move(g_new);
  }
  if (!std::isfinite(f)) throw NumericError("logistic loss is non-finite");
  return LinearModel{std::move(w), b, ModelKind::LogReg, std::nullopt};
}

double svm_objective(const Dataset& ds, const Eigen::VectorXd& w, double b, double l2_lambda) {
  const Eigen::VectorXd z = (ds.features * w).array() + b;
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double y = ds.labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    hinge += std::max(0.0, 1.0 - y * z(i));
  }
  return 0.5 * l2_lambda * (w.squaredNorm() + b * b) + hinge / static_cast<double>(ds.size());
}

LinearModel train_linear_svm_uncalibrated(const Dataset& ds, const SvmParams& params, std::uint64_t seed) {
  require_binary_both_classes(ds);
  if (params.l2_lambda <= 0.0) throw InvalidArgument("svm l2_lambda must be > 0");
  if (params.epochs < 1) throw InvalidArgument("svm needs at least one epoch");

  const auto d = static_cast<Eigen::Index>(ds.dim());
  const double lambda = params.l2_lambda;
  // Augmented weight vector: last coordinate is the bias.
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(d + 1);
  std::size_t averaged = 0;

  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  const std::size_t total = params.epochs * ds.size();
  const std::size_t average_from = total / 2;
  std::size_t t = 0;
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const auto row = ds.features.row(static_cast<Eigen::Index>(i));
      const double y = ds.labels[i] == 1 ? 1.0 : -1.0;
      const double margin = y * (row.dot(w.head(d)) + w(d));
      w *= (1.0 - eta * lambda);
      if (margin < 1.0) {
        w.head(d).noalias() += (eta * y) * row.transpose();
        w(d) += eta * y;
      }
      if (t > average_from) {
        ++averaged;
        avg += (w - avg) / static_cast<double>(averaged);
      }
    }
  }
  if (!w.allFinite()) throw NumericError("svm weights became non-finite");

  const double f_last = svm_objective(ds, w.head(d), w(d), lambda);
  const double f_avg = averaged ? svm_objective(ds, avg.head(d), avg(d), lambda) : f_last;
  const Eigen::VectorXd& best = f_avg < f_last ? avg : w;
  return LinearModel{best.head(d), best(d), ModelKind::Svm, std::nullopt};
}

LinearModel train_linear_svm(const Dataset& ds, const SvmParams& params, std::uint64_t seed) {
  LinearModel model = train_linear_svm_uncalibrated(ds, params, seed);

  const std::size_t min_class = std::min(ds.count(0), ds.count(1));
  const std::size_t folds = std::min(params.calibration_folds, min_class);
  std::vector<double> decisions(ds.size());
  if (folds >= 2) {
    const auto fold_rows = stratified_folds(ds.labels, folds, seed ^ 0x5bd1e995ULL);
    for (std::size_t k = 0; k < folds; ++k) {
      std::vector<std::size_t> train_rows;
      for (std::size_t j = 0; j < folds; ++j) {
        if (j != k) train_rows.insert(train_rows.end(), fold_rows[j].begin(), fold_rows[j].end());
      }
      const auto fold_model = train_linear_svm_uncalibrated(ds.subset(train_rows), params, seed + k + 1);
      for (std::size_t r : fold_rows[k]) {
        decisions[r] = ds.features.row(static_cast<Eigen::Index>(r)).dot(fold_model.weights) + fold_model.bias;
      }
    }
  } else {
    // Too few samples per class for held-out scores; fall back to in-sample.
    const Eigen::VectorXd f = (ds.features * model.weights).array() + model.bias;
    for (std::size_t i = 0; i < ds.size(); ++i) decisions[i] = f(static_cast<Eigen::Index>(i));
  }
  model.calibration = fit_platt(decisions, ds.labels);
  return model;
}

PlattCalibration fit_platt(std::span<const double> f, std::span<const int> labels) {
  if (f.size() != labels.size() || f.empty()) throw InvalidArgument("platt fit needs aligned, non-empty inputs");
  double prior1 = 0.0;
  double prior0 = 0.0;
  for (int l : labels) (l == 1 ? prior1 : prior0) += 1.0;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);
  std::vector<double> target(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) target[i] = labels[i] == 1 ? hi : lo;

  auto objective = [&](double a, double b) {
    double val = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double z = f[i] * a + b;
      val += z >= 0.0 ? target[i] * z + std::log1p(std::exp(-z)) : (target[i] - 1.0) * z + std::log1p(std::exp(z));
    }
    return val;
  };

  double a = 0.0;
  double b = std::log((prior0 + 1.0) / (prior1 + 1.0));
  double fval = objective(a, b);
  constexpr double kSigma = 1e-12;
  for (int it = 0; it < 100; ++it) {
    double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double z = f[i] * a + b;
      double p, q;
      if (z >= 0.0) {
        p = std::exp(-z) / (1.0 + std::exp(-z));
        q = 1.0 / (1.0 + std::exp(-z));
      } else {
        p = 1.0 / (1.0 + std::exp(z));
        q = std::exp(z) / (1.0 + std::exp(z));
      }
      const double d2 = p * q;
      h11 += f[i] * f[i] * d2;
      h22 += d2;
      h21 += f[i] * d2;
      const double d1 = target[i] - p;
      g1 += f[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    while (step >= 1e-10) {
      const double na = a + step * da;
      const double nb = b + step * db;
      const double nf = objective(na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        a = na;
        b = nb;
        fval = nf;
        break;
      }
      step *= 0.5;
    }
    if (step < 1e-10) break;
  }
  if (!std::isfinite(a) || !std::isfinite(b)) throw NumericError("platt calibration diverged");
  return PlattCalibration{a, b};
}

}  // namespace valdet::ml
