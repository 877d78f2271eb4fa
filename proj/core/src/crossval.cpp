#include "valdet/crossval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "valdet/error.hpp"

namespace valdet::ml {

nlohmann::json ParamSet::to_json(ModelKind kind) const {
  switch (kind) {
    case ModelKind::LogReg: return {{"l2_lambda", l2_lambda}, {"max_iters", max_iters}, {"tol", tol}};
    case ModelKind::Svm: return {{"l2_lambda", l2_lambda}, {"epochs", epochs}};
    case ModelKind::LogitBoost: return {{"rounds", rounds}};
  }
  return {};
}

Model train_model(const Dataset& ds, ModelKind kind, const ParamSet& params, std::uint64_t seed) {
  switch (kind) {
    case ModelKind::LogReg:
      return train_logreg(ds, LogRegParams{params.l2_lambda, params.max_iters, params.tol}, seed);
    case ModelKind::Svm:
      return train_linear_svm(ds, SvmParams{params.l2_lambda, params.epochs, 3}, seed);
    case ModelKind::LogitBoost:
      return train_logitboost(ds, LogitBoostParams{params.rounds, 4.0, 1e-8}, seed);
  }
  throw InvalidArgument("unknown model kind");
}

std::vector<ParamSet> default_grid(ModelKind kind) {
  std::vector<ParamSet> grid;
  if (kind == ModelKind::LogitBoost) {
    for (std::size_t r : {50, 100, 200}) {
      ParamSet p;
      p.rounds = r;
      grid.push_back(p);
    }
    return grid;
  }
  for (double l : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
    ParamSet p;
    p.l2_lambda = l;
    grid.push_back(p);
  }
  return grid;
}

const char* to_string(TargetMetric m) {
  switch (m) {
    case TargetMetric::F1Positive: return "f1_class1";
    case TargetMetric::F1Macro: return "f1_macro";
    case TargetMetric::Accuracy: return "accuracy";
  }
  return "?";
}

TargetMetric parse_target_metric(std::string_view s) {
  if (s == "f1_class1" || s == "f1") return TargetMetric::F1Positive;
  if (s == "f1_macro") return TargetMetric::F1Macro;
  if (s == "accuracy") return TargetMetric::Accuracy;
  throw InvalidArgument("unknown target metric '" + std::string(s) + "'");
}

double score(const MetricsReport& r, TargetMetric m) {
  switch (m) {
    case TargetMetric::F1Positive: return r.f1_of(1);
    case TargetMetric::F1Macro: return r.f1_macro;
    case TargetMetric::Accuracy: return r.accuracy;
  }
  return 0.0;
}

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& labels, std::size_t k,
                                                       std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("cross-validation needs k >= 2");
  if (labels.size() < k) throw InvalidArgument("cannot split " + std::to_string(labels.size()) + " rows into " +
                                               std::to_string(k) + " folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t offset = 0;
  for (auto& [cls, rows] : by_class) {
    if (rows.size() < k) {
      throw InvalidArgument("class " + std::to_string(cls) + " has only " + std::to_string(rows.size()) +
                            " rows, so some of the " + std::to_string(k) + " folds would lack it; use a smaller k");
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t j = 0; j < rows.size(); ++j) folds[(offset + j) % k].push_back(rows[j]);
    offset += rows.size();
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

CvGridResult cross_validate_grid(const Dataset& ds, ModelKind kind, const std::vector<ParamSet>& grid, std::size_t k,
                                 TargetMetric metric, std::uint64_t seed) {
  if (grid.empty()) throw InvalidArgument("parameter grid is empty");
  require_binary_both_classes(ds);
  const auto folds = stratified_folds(ds.labels, k, seed);

  CvGridResult result;
  result.kind = kind;
  result.metric = metric;
  result.folds = k;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CvConfigResult cfg;
    cfg.params = grid[g];
    for (std::size_t f = 0; f < k; ++f) {
      std::vector<std::size_t> train_rows;
      for (std::size_t j = 0; j < k; ++j) {
        if (j != f) train_rows.insert(train_rows.end(), folds[j].begin(), folds[j].end());
      }
      std::sort(train_rows.begin(), train_rows.end());
      const Dataset train = ds.subset(train_rows);
      const Dataset test = ds.subset(folds[f]);
      const Model model = train_model(train, kind, grid[g], seed + f);
      const auto report = compute_metrics(test.labels, predict(model, test.features), {0, 1});
      cfg.fold_scores.push_back(score(report, metric));
    }
    const double n = static_cast<double>(cfg.fold_scores.size());
    cfg.mean = std::accumulate(cfg.fold_scores.begin(), cfg.fold_scores.end(), 0.0) / n;
    double var = 0.0;
    for (double s : cfg.fold_scores) var += (s - cfg.mean) * (s - cfg.mean);
    cfg.stddev = std::sqrt(var / n);
    result.configs.push_back(std::move(cfg));
  }
  for (std::size_t g = 1; g < result.configs.size(); ++g) {
    if (result.configs[g].mean > result.configs[result.best].mean) result.best = g;
  }
  return result;
}

nlohmann::json CvGridResult::to_json() const {
  nlohmann::json configs_json = nlohmann::json::array();
  for (const auto& c : configs) {
    configs_json.push_back(
        {{"params", c.params.to_json(kind)}, {"fold_scores", c.fold_scores}, {"mean", c.mean}, {"std", c.stddev}});
  }
  return {{"kind", ml::to_string(kind)},
          {"metric", ml::to_string(metric)},
          {"folds", folds},
          {"configs", configs_json},
          {"best", best},
          {"best_params", configs.at(best).params.to_json(kind)},
          {"best_mean", configs.at(best).mean}};
}

}  // namespace valdet::ml
