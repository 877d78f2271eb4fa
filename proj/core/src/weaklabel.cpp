#include "valdet/weaklabel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "valdet/error.hpp"
#include "valdet/io.hpp"

namespace valdet::weak {

const char* spam_label_name(int label) { return label == 1 ? "spam" : "non_spam"; }

int parse_spam_label(std::string_view s) {
  if (s == "spam" || s == "1" || s == "Spam") return 1;
  if (s == "non_spam" || s == "0" || s == "nonspam" || s == "non-spam") return 0;
  throw ParseError("unknown spam label '" + std::string(s) + "'");
}

LabelMap from_verdicts(const std::vector<spam::SpamRuleVerdict>& verdicts) {
  LabelMap out;
  for (const auto& v : verdicts) out[v.post_id] = v.is_spam ? 1 : 0;
  return out;
}

LabelMap read_label_csv(const fs::path& path) {
  io::require_file(path, "label file");
  const auto table = io::CsvTable::load(path);
  const auto c_id = table.column("post_id");
  const auto c_label = table.column("label");
  LabelMap out;
  for (const auto& row : table.rows()) {
    if (row.fields.size() <= std::max(c_id, c_label)) throw ParseError("short label row", row.line);
    try {
      if (!out.emplace(row.fields[c_id], parse_spam_label(text::trim(row.fields[c_label]))).second) {
        throw ParseError("duplicate post_id '" + row.fields[c_id] + "'", row.line);
      }
    } catch (const ParseError& e) {
      if (e.line()) throw;
      throw ParseError(e.what(), row.line);
    }
  }
  return out;
}

void write_label_csv(const fs::path& path, const LabelMap& labels) {
  std::string out = io::csv_line({"post_id", "label"});
  for (const auto& [id, l] : labels) out += io::csv_line({id, spam_label_name(l)});
  io::write_file(path, out);
}

ml::Dataset make_dataset(const embed::EmbeddingMatrix& embeddings, const LabelMap& labels) {
  ml::Dataset ds;
  ds.ids.reserve(labels.size());
  for (const auto& [id, l] : labels) {
    if (!embeddings.contains(id)) throw InvalidArgument("labeled post '" + id + "' has no embedding");
    ds.ids.push_back(id);
    ds.labels.push_back(l);
  }
  ds.features = embeddings.rows(ds.ids);
  return ds;
}

NoisyStageResult train_noisy_stage(const embed::EmbeddingMatrix& embeddings, const LabelMap& noisy_labels,
                                   double split_ratio, std::uint64_t seed, const ml::LogitBoostParams& params) {
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw InvalidArgument("split ratio must lie in (0, 1)");
  const auto all = make_dataset(embeddings, noisy_labels);
  if (all.size() < 2) throw InvalidArgument("need at least two labeled posts");

  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(split_ratio * static_cast<double>(all.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, all.size() - 1);
  std::vector<std::size_t> train_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> valid_rows(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(valid_rows.begin(), valid_rows.end());

  NoisyStageResult result;
  const auto train = all.subset(train_rows);
  const auto valid = all.subset(valid_rows);
  result.train_ids = train.ids;
  result.validation_ids = valid.ids;
  result.model = ml::train_logitboost(train, params, seed);

  const ml::Model model = result.model;
  result.validation_metrics = ml::compute_metrics(valid.labels, ml::predict(model, valid.features), {0, 1});
  const Eigen::VectorXd p = ml::predict_proba(model, all.features);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const double pi = p(static_cast<Eigen::Index>(i));
    const int model_label = pi >= 0.5 ? 1 : 0;
    if (model_label != all.labels[i]) {
      result.disagreements.push_back({all.ids[i], all.labels[i], model_label, model_label ? pi : 1.0 - pi});
    }
  }
  return result;
}

nlohmann::json EditLedger::to_json() const {
  nlohmann::json entries_json = nlohmann::json::array();
  for (const auto& e : entries) {
    entries_json.push_back({{"post_id", e.post_id},
                            {"old_label", spam_label_name(e.old_label)},
                            {"new_label", spam_label_name(e.new_label)},
                            {"confidence", e.confidence},
                            {"reason", e.reason}});
  }
  return {{"confidence_threshold", confidence_threshold}, {"entries", entries_json}};
}

EditResult edit_labels(const LabelMap& noisy_labels, const ml::Model& model, const embed::EmbeddingMatrix& embeddings,
                       double confidence_threshold) {
  if (!(confidence_threshold > 0.5 && confidence_threshold <= 1.0)) {
    throw InvalidArgument("confidence threshold must lie in (0.5, 1]");
  }
  const auto ds = make_dataset(embeddings, noisy_labels);
  const Eigen::VectorXd p = ml::predict_proba(model, ds.features);

  EditResult result;
  result.labels = noisy_labels;
  result.ledger.confidence_threshold = confidence_threshold;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double pi = p(static_cast<Eigen::Index>(i));
    const int model_label = pi >= 0.5 ? 1 : 0;
    if (model_label == ds.labels[i]) continue;
    const double confidence = model_label ? pi : 1.0 - pi;
    if (confidence >= confidence_threshold) {
      result.labels[ds.ids[i]] = model_label;
      result.ledger.entries.push_back({ds.ids[i], ds.labels[i], model_label, confidence, "auto"});
    } else {
      result.review.push_back({ds.ids[i], ds.labels[i], model_label, confidence, ""});
    }
  }
  return result;
}

void apply_review_decisions(EditResult& result, const std::vector<ReviewRow>& decided) {
  for (const auto& row : decided) {
    if (row.decision.empty() || row.decision == "keep") continue;
    const int label = parse_spam_label(row.decision);
    auto it = result.labels.find(row.post_id);
    if (it == result.labels.end()) throw InvalidArgument("review decision for unknown post '" + row.post_id + "'");
    if (it->second == label) continue;
    result.ledger.entries.push_back({row.post_id, it->second, label, row.confidence, "manual"});
    it->second = label;
  }
}

void write_review_csv(const fs::path& path, const std::vector<ReviewRow>& rows) {
  std::ostringstream out;
  out.precision(6);
  out << io::csv_line({"post_id", "rule_label", "model_label", "confidence", "decision"});
  for (const auto& r : rows) {
    out << io::csv_escape(r.post_id) << ',' << spam_label_name(r.rule_label) << ',' << spam_label_name(r.model_label)
        << ',' << r.confidence << ',' << io::csv_escape(r.decision) << '\n';
  }
  io::write_file(path, out.str());
}

std::vector<ReviewRow> read_review_csv(const fs::path& path) {
  io::require_file(path, "review file");
  const auto table = io::CsvTable::load(path);
  const auto c_id = table.column("post_id");
  const auto c_rule = table.column("rule_label");
  const auto c_model = table.column("model_label");
  const auto c_conf = table.column("confidence");
  const auto c_dec = table.column("decision");
  std::vector<ReviewRow> out;
  for (const auto& row : table.rows()) {
    const auto& f = row.fields;
    if (f.size() < table.header().size()) throw ParseError("short review row", row.line);
    ReviewRow r;
    r.post_id = f[c_id];
    r.rule_label = parse_spam_label(f[c_rule]);
    r.model_label = parse_spam_label(f[c_model]);
    r.confidence = std::stod(f[c_conf]);
    r.decision = text::trim(f[c_dec]);
    out.push_back(std::move(r));
  }
  return out;
}

nlohmann::json SpamModelSelection::to_json() const {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : candidates) {
    cands.push_back({{"kind", ml::to_string(c.kind)},
                     {"spam_f1", c.metrics.f1_of(1)},
                     {"metrics", c.metrics.to_json({"non_spam", "spam"})}});
  }
  return {{"best", ml::to_string(best_kind)}, {"candidates", cands}};
}

SpamModelSelection select_best_spam_model(const LabelMap& edited, const embed::EmbeddingMatrix& embeddings,
                                          const LabelMap& gold, std::uint64_t seed, const SpamModelParams& params) {
  for (const auto& [id, _] : gold) {
    if (edited.count(id)) throw InvalidArgument("gold test post '" + id + "' also appears in the training labels");
  }
  if (gold.empty()) throw InvalidArgument("gold test set is empty");
  const auto train = make_dataset(embeddings, edited);
  const auto test = make_dataset(embeddings, gold);

  SpamModelSelection sel;
  std::vector<ml::Model> models;
  models.emplace_back(ml::train_logitboost(train, params.boost, seed));
  models.emplace_back(ml::train_logreg(train, params.logreg, seed));
  models.emplace_back(ml::train_linear_svm(train, params.svm, seed));
  for (const auto& m : models) {
    sel.candidates.push_back({ml::kind_of(m), ml::compute_metrics(test.labels, ml::predict(m, test.features), {0, 1})});
  }
  // Later candidates win ties: LogitBoost < LogReg < SVM in precedence.
  std::size_t best = 0;
  for (std::size_t i = 1; i < sel.candidates.size(); ++i) {
    if (sel.candidates[i].metrics.f1_of(1) >= sel.candidates[best].metrics.f1_of(1)) best = i;
  }
  sel.best_kind = sel.candidates[best].kind;
  sel.best = models[best];
  return sel;
}

}  // namespace valdet::weak
