#include "valdet/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "valdet/error.hpp"

namespace valdet::ml {

std::size_t MetricsReport::index_of(int cls) const {
  auto it = std::find(classes.begin(), classes.end(), cls);
  if (it == classes.end()) throw InvalidArgument("class " + std::to_string(cls) + " not in report");
  return static_cast<std::size_t>(it - classes.begin());
}

namespace {

std::string class_name(const std::vector<int>& classes, const std::vector<std::string>& names, std::size_t i) {
  return i < names.size() ? names[i] : std::to_string(classes[i]);
}

std::size_t class_index(const std::vector<int>& classes, int label) {
  auto it = std::find(classes.begin(), classes.end(), label);
  if (it == classes.end()) throw InvalidArgument("label " + std::to_string(label) + " is not among the classes");
  return static_cast<std::size_t>(it - classes.begin());
}

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

double f1_macro(const std::vector<double>& per_class_f1) {
  if (per_class_f1.empty()) return 0.0;
  return std::accumulate(per_class_f1.begin(), per_class_f1.end(), 0.0) / static_cast<double>(per_class_f1.size());
}

MetricsReport compute_metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                              const std::vector<int>& classes) {
  if (y_true.size() != y_pred.size()) {
    throw InvalidArgument("metric inputs differ in length: " + std::to_string(y_true.size()) + " vs " +
                          std::to_string(y_pred.size()));
  }
  const auto cm = confusion_matrix(y_true, y_pred, classes);
  MetricsReport r;
  r.classes = classes;
  const auto K = static_cast<Eigen::Index>(classes.size());
  double correct = 0.0;
  for (Eigen::Index c = 0; c < K; ++c) {
    const double tp = cm.counts(c, c);
    const double pred_c = cm.counts.col(c).sum();
    const double true_c = cm.counts.row(c).sum();
    const double p = safe_div(tp, pred_c);
    const double rc = safe_div(tp, true_c);
    r.precision.push_back(p);
    r.recall.push_back(rc);
    r.f1.push_back(safe_div(2.0 * p * rc, p + rc));
    r.support.push_back(static_cast<std::size_t>(true_c));
    correct += tp;
  }
  r.f1_macro = f1_macro(r.f1);
  r.accuracy = safe_div(correct, static_cast<double>(y_true.size()));
  return r;
}

nlohmann::json MetricsReport::to_json(const std::vector<std::string>& class_names) const {
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t i = 0; i < classes.size(); ++i) {
    per_class.push_back({{"class", class_name(classes, class_names, i)},
                         {"precision", precision[i]},
                         {"recall", recall[i]},
                         {"f1", f1[i]},
                         {"support", support[i]}});
  }
  return {{"per_class", per_class}, {"f1_macro", f1_macro}, {"accuracy", accuracy}};
}

std::string MetricsReport::to_table(const std::vector<std::string>& class_names) const {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-16s %9s %9s %9s %8s\n", "class", "precision", "recall", "f1", "support");
  out << buf;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%-16s %9.3f %9.3f %9.3f %8zu\n", class_name(classes, class_names, i).c_str(),
                  precision[i], recall[i], f1[i], support[i]);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "%-16s %29.3f\n%-16s %29.3f\n", "f1-macro", f1_macro, "accuracy", accuracy);
  out << buf;
  return out.str();
}

ConfusionMatrix confusion_matrix(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 const std::vector<int>& classes, Normalize normalize) {
  if (y_true.size() != y_pred.size()) {
    throw InvalidArgument("confusion inputs differ in length: " + std::to_string(y_true.size()) + " vs " +
                          std::to_string(y_pred.size()));
  }
  ConfusionMatrix cm;
  cm.classes = classes;
  cm.mode = normalize;
  const auto K = static_cast<Eigen::Index>(classes.size());
  cm.counts = Eigen::MatrixXd::Zero(K, K);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    cm.counts(static_cast<Eigen::Index>(class_index(classes, y_true[i])),
              static_cast<Eigen::Index>(class_index(classes, y_pred[i]))) += 1.0;
  }
  cm.values = cm.counts;
  if (normalize == Normalize::Row) {
    for (Eigen::Index r = 0; r < K; ++r) {
      const double s = cm.counts.row(r).sum();
      if (s > 0.0) cm.values.row(r) /= s;
    }
  } else if (normalize == Normalize::Column) {
    for (Eigen::Index c = 0; c < K; ++c) {
      const double s = cm.counts.col(c).sum();
      if (s > 0.0) cm.values.col(c) /= s;
    }
  }
  return cm;
}

nlohmann::json ConfusionMatrix::to_json(const std::vector<std::string>& class_names) const {
  nlohmann::json names = nlohmann::json::array();
  for (std::size_t i = 0; i < classes.size(); ++i) names.push_back(class_name(classes, class_names, i));
  auto rows = [](const Eigen::MatrixXd& m) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      out.push_back(row);
    }
    return out;
  };
  const char* mode_name = mode == Normalize::Row ? "row" : mode == Normalize::Column ? "column" : "none";
  return {{"classes", names}, {"normalize", mode_name}, {"counts", rows(counts)}, {"values", rows(values)}};
}

}  // namespace valdet::ml
