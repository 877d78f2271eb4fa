#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace valdet::ml {

/// Row-aligned features, labels and ids.
struct Dataset {
  Eigen::MatrixXd features;  // N x d
  std::vector<int> labels;
  std::vector<std::string> ids;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  /// Checks alignment and finiteness.
  void validate() const;
  Dataset subset(const std::vector<std::size_t>& rows) const;
  std::size_t count(int label) const;
};

/// Throws unless labels are {0,1} with both present.
void require_binary_both_classes(const Dataset& ds);

enum class ModelKind { LogReg, Svm, LogitBoost };
const char* to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

/// p = 1 / (1 + exp(a * f + b)) for decision value f.
struct PlattCalibration {
  double a = -1.0;
  double b = 0.0;
  double probability(double decision) const;
};

struct LinearModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  ModelKind kind = ModelKind::LogReg;  // LogReg or Svm
  std::optional<PlattCalibration> calibration;
};

/// x[feature] <= threshold -> left, else right.
struct Stump {
  std::size_t feature = 0;
  double threshold = 0.0;
  double left = 0.0;
  double right = 0.0;
  double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

/// Additive score F(x) = sum_m 0.5 * stump_m(x).
struct BoostModel {
  std::vector<Stump> stumps;
  std::size_t dim = 0;
  double score(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

using Model = std::variant<LinearModel, BoostModel>;

ModelKind kind_of(const Model& m);
std::size_t input_dim(const Model& m);

/// w.x + b for linear models, F(x) for boosting.
Eigen::VectorXd decision_function(const Model& m, const Eigen::MatrixXd& x);
/// Class-1 probabilities: logreg sigmoid(w.x+b), boost sigmoid(2F), svm
/// Platt sigmoid (throws without calibration).
Eigen::VectorXd predict_proba(const Model& m, const Eigen::MatrixXd& x);
/// Hard labels: svm by decision sign, the others by p >= 0.5.
std::vector<int> predict(const Model& m, const Eigen::MatrixXd& x);

double sigmoid(double z);

/// Persisted models carry their seed and free-form provenance (grid, etc.).
struct SavedModel {
  Model model;
  std::uint64_t seed = 0;
  nlohmann::json provenance = nlohmann::json::object();
};

nlohmann::json to_json(const SavedModel& m);
SavedModel model_from_json(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const SavedModel& m);
SavedModel load_model(const std::filesystem::path& path);

}  // namespace valdet::ml
