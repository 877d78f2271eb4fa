#include "valdet/model.hpp"

#include <cmath>
#include <limits>

#include "valdet/error.hpp"
#include "valdet/io.hpp"

namespace valdet::ml {

void Dataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size() || ids.size() != labels.size()) {
    throw InvalidArgument("dataset rows, labels and ids are not aligned");
  }
  if (!features.allFinite()) throw InvalidArgument("dataset contains non-finite features");
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  out.ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(labels[rows[i]]);
    out.ids.push_back(ids[rows[i]]);
  }
  return out;
}

std::size_t Dataset::count(int label) const {
  std::size_t n = 0;
  for (int l : labels) n += (l == label);
  return n;
}

void require_binary_both_classes(const Dataset& ds) {
  ds.validate();
  for (int l : ds.labels) {
    if (l != 0 && l != 1) throw InvalidArgument("binary training expects labels in {0,1}, got " + std::to_string(l));
  }
  if (ds.count(0) == 0 || ds.count(1) == 0) {
    throw InvalidArgument("training data contains a single class; both 0 and 1 are required");
  }
}

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::LogReg: return "logreg";
    case ModelKind::Svm: return "svm";
    case ModelKind::LogitBoost: return "logitboost";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "logreg" || s == "logitregression" || s == "logistic") return ModelKind::LogReg;
  if (s == "svm") return ModelKind::Svm;
  if (s == "logitboost" || s == "boost") return ModelKind::LogitBoost;
  throw InvalidArgument("unknown model kind '" + std::string(s) + "'");
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double PlattCalibration::probability(double decision) const { return sigmoid(-(a * decision + b)); }

double Stump::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return x(static_cast<Eigen::Index>(feature)) <= threshold ? left : right;
}

double BoostModel::score(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  double f = 0.0;
  for (const auto& s : stumps) f += 0.5 * s(x);
  return f;
}

ModelKind kind_of(const Model& m) {
  if (const auto* lin = std::get_if<LinearModel>(&m)) return lin->kind;
  return ModelKind::LogitBoost;
}

std::size_t input_dim(const Model& m) {
  if (const auto* lin = std::get_if<LinearModel>(&m)) return static_cast<std::size_t>(lin->weights.size());
  return std::get<BoostModel>(m).dim;
}

Eigen::VectorXd decision_function(const Model& m, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != input_dim(m)) {
    throw InvalidArgument("feature dimension " + std::to_string(x.cols()) + " does not match model dimension " +
                          std::to_string(input_dim(m)));
  }
  if (const auto* lin = std::get_if<LinearModel>(&m)) {
    return (x * lin->weights).array() + lin->bias;
  }
  const auto& boost = std::get<BoostModel>(m);
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = boost.score(x.row(i));
  return out;
}

Eigen::VectorXd predict_proba(const Model& m, const Eigen::MatrixXd& x) {
  if (const auto* lin = std::get_if<LinearModel>(&m); lin && lin->kind == ModelKind::Svm && !lin->calibration) {
    throw InvalidArgument("svm probabilities need a fitted calibration");
  }
  const Eigen::VectorXd f = decision_function(m, x);
  Eigen::VectorXd p(f.size());
  const auto kind = kind_of(m);
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    switch (kind) {
      case ModelKind::LogReg: p(i) = sigmoid(f(i)); break;
      case ModelKind::LogitBoost: p(i) = sigmoid(2.0 * f(i)); break;
      case ModelKind::Svm: p(i) = std::get<LinearModel>(m).calibration->probability(f(i)); break;
    }
  }
  return p;
}

std::vector<int> predict(const Model& m, const Eigen::MatrixXd& x) {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  if (kind_of(m) == ModelKind::Svm) {
    const Eigen::VectorXd f = decision_function(m, x);
    for (Eigen::Index i = 0; i < f.size(); ++i) out[static_cast<std::size_t>(i)] = f(i) >= 0.0 ? 1 : 0;
    return out;
  }
  const Eigen::VectorXd p = predict_proba(m, x);
  for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p(i) >= 0.5 ? 1 : 0;
  return out;
}

nlohmann::json to_json(const SavedModel& saved) {
  nlohmann::json j;
  j["kind"] = to_string(kind_of(saved.model));
  j["dim"] = input_dim(saved.model);
  j["seed"] = saved.seed;
  j["provenance"] = saved.provenance;
  if (const auto* lin = std::get_if<LinearModel>(&saved.model)) {
    j["weights"] = std::vector<double>(lin->weights.data(), lin->weights.data() + lin->weights.size());
    j["bias"] = lin->bias;
    if (lin->calibration) {
      j["calibration"] = {{"a", lin->calibration->a}, {"b", lin->calibration->b}};
    } else {
      j["calibration"] = nullptr;
    }
  } else {
    const auto& boost = std::get<BoostModel>(saved.model);
    nlohmann::json stumps = nlohmann::json::array();
    for (const auto& s : boost.stumps) {
      // +inf thresholds (constant stumps) are not representable in JSON.
      nlohmann::json thr = std::isfinite(s.threshold) ? nlohmann::json(s.threshold) : nlohmann::json("inf");
      stumps.push_back({{"feature", s.feature}, {"threshold", thr}, {"left", s.left}, {"right", s.right}});
    }
    j["stumps"] = stumps;
  }
  return j;
}

SavedModel model_from_json(const nlohmann::json& j) {
  try {
    SavedModel saved;
    saved.seed = j.value("seed", std::uint64_t{0});
    saved.provenance = j.value("provenance", nlohmann::json::object());
    const auto kind = parse_model_kind(j.at("kind").get<std::string>());
    const auto dim = j.at("dim").get<std::size_t>();
    if (kind == ModelKind::LogitBoost) {
      BoostModel boost;
      boost.dim = dim;
      for (const auto& s : j.at("stumps")) {
        Stump st;
        st.feature = s.at("feature").get<std::size_t>();
        st.threshold = s.at("threshold").is_string() ? std::numeric_limits<double>::infinity()
                                                     : s.at("threshold").get<double>();
        st.left = s.at("left").get<double>();
        st.right = s.at("right").get<double>();
        if (st.feature >= dim) throw ParseError("stump feature index out of range");
        boost.stumps.push_back(st);
      }
      if (boost.stumps.empty()) throw ParseError("boost model has no rounds");
      saved.model = std::move(boost);
    } else {
      LinearModel lin;
      lin.kind = kind;
      const auto w = j.at("weights").get<std::vector<double>>();
      if (w.size() != dim) throw ParseError("weight vector length does not match dim");
      lin.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
      lin.bias = j.at("bias").get<double>();
      if (j.contains("calibration") && !j["calibration"].is_null()) {
        lin.calibration = PlattCalibration{j["calibration"].at("a").get<double>(), j["calibration"].at("b").get<double>()};
      }
      saved.model = std::move(lin);
    }
    return saved;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const SavedModel& m) { io::write_file(path, to_json(m).dump(2)); }

SavedModel load_model(const std::filesystem::path& path) {
  io::require_file(path, "model file");
  try {
    return model_from_json(nlohmann::json::parse(io::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("model file is not valid JSON: " + std::string(e.what()));
  }
}

}  // namespace valdet::ml
