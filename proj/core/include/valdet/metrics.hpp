#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace valdet::ml {

/// Per-class precision/recall/F1 with the 0/0 -> 0 convention.
struct MetricsReport {
  std::vector<int> classes;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<std::size_t> support;  // true count per class
  double f1_macro = 0.0;
  double accuracy = 0.0;

  /// Index of `cls` in `classes`; throws when absent.
  std::size_t index_of(int cls) const;
  double f1_of(int cls) const { return f1[index_of(cls)]; }

  nlohmann::json to_json(const std::vector<std::string>& class_names = {}) const;
  std::string to_table(const std::vector<std::string>& class_names = {}) const;
};

MetricsReport compute_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                              const std::vector<int>& classes);

/// Unweighted mean of per-class F1.
double f1_macro(const std::vector<double>& per_class_f1);

enum class Normalize { None, Row, Column };

struct ConfusionMatrix {
  std::vector<int> classes;
  Eigen::MatrixXd counts;  // [true][pred]
  Normalize mode = Normalize::None;
  Eigen::MatrixXd values;  // counts, or row/column fractions

  nlohmann::json to_json(const std::vector<std::string>& class_names = {}) const;
};

ConfusionMatrix confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 const std::vector<int>& classes, Normalize normalize = Normalize::None);

}  // namespace valdet::ml
