#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "valdet/linear.hpp"
#include "valdet/logitboost.hpp"
#include "valdet/metrics.hpp"
#include "valdet/model.hpp"

namespace valdet::ml {

/// One grid point. Each model kind reads only the fields it uses.
struct ParamSet {
  double l2_lambda = 1e-2;      // logreg, svm
  std::size_t rounds = 100;     // logitboost
  std::size_t epochs = 50;      // svm
  std::size_t max_iters = 1000; // logreg
  double tol = 1e-6;            // logreg

  nlohmann::json to_json(ModelKind kind) const;
};

Model train_model(const Dataset& ds, ModelKind kind, const ParamSet& params, std::uint64_t seed);

/// lambda in {1e-4, 1e-3, 1e-2, 1e-1, 1} for linear models; rounds in
/// {50, 100, 200} for LogitBoost.
std::vector<ParamSet> default_grid(ModelKind kind);

enum class TargetMetric { F1Positive, F1Macro, Accuracy };
const char* to_string(TargetMetric m);
TargetMetric parse_target_metric(std::string_view s);
double score(const MetricsReport& r, TargetMetric m);

/// Seeded stratified split: each class is shuffled and dealt round-robin, so
/// per-fold class counts differ by at most one. Throws when a class has
/// fewer than k members.
std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& labels, std::size_t k,
                                                       std::uint64_t seed);

struct CvConfigResult {
  ParamSet params;
  std::vector<double> fold_scores;
  double mean = 0.0;
  double stddev = 0.0;
};

struct CvGridResult {
  ModelKind kind = ModelKind::LogReg;
  TargetMetric metric = TargetMetric::F1Positive;
  std::size_t folds = 5;
  std::vector<CvConfigResult> configs;
  std::size_t best = 0;  // first maximal mean in grid order

  const CvConfigResult& best_config() const { return configs.at(best); }
  nlohmann::json to_json() const;
};

CvGridResult cross_validate_grid(const Dataset& ds, ModelKind kind, const std::vector<ParamSet>& grid,
                                 std::size_t k = 5, TargetMetric metric = TargetMetric::F1Positive,
                                 std::uint64_t seed = 0);

}  // namespace valdet::ml
