#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "valdet/crossval.hpp"
#include "valdet/embed.hpp"
#include "valdet/spamrules.hpp"

namespace valdet::weak {

namespace fs = std::filesystem;

/// post_id -> 1 (spam) / 0 (non-spam).
using LabelMap = std::map<std::string, int>;

const char* spam_label_name(int label);
int parse_spam_label(std::string_view s);

LabelMap from_verdicts(const std::vector<spam::SpamRuleVerdict>& verdicts);
/// CSV with post_id,label where label is spam/non_spam (or 1/0).
LabelMap read_label_csv(const fs::path& path);
void write_label_csv(const fs::path& path, const LabelMap& labels);

/// Rows for `labels` in map order; throws when an id has no embedding.
ml::Dataset make_dataset(const embed::EmbeddingMatrix& embeddings, const LabelMap& labels);

struct Disagreement {
  std::string post_id;
  int rule_label = 0;
  int model_label = 0;
  double confidence = 0.0;  // model probability of model_label
};

struct NoisyStageResult {
  ml::BoostModel model;
  std::vector<std::string> train_ids;
  std::vector<std::string> validation_ids;
  std::vector<Disagreement> disagreements;  // over all labeled posts
  ml::MetricsReport validation_metrics;     // against the rule labels
};

/// Seeded split (round(ratio * N) train rows), LogitBoost on the train part,
/// then every labeled post where the model's argmax differs from its rule
/// label.
NoisyStageResult train_noisy_stage(const embed::EmbeddingMatrix& embeddings, const LabelMap& noisy_labels,
                                   double split_ratio, std::uint64_t seed,
                                   const ml::LogitBoostParams& params = {});

struct EditEntry {
  std::string post_id;
  int old_label = 0;
  int new_label = 0;
  double confidence = 0.0;
  std::string reason;  // "auto" | "manual"
};

struct EditLedger {
  double confidence_threshold = 0.9;
  std::vector<EditEntry> entries;
  nlohmann::json to_json() const;
};

struct ReviewRow {
  std::string post_id;
  int rule_label = 0;
  int model_label = 0;
  double confidence = 0.0;
  std::string decision;  // filled in by a reviewer: spam | non_spam | keep | ""
};

struct EditResult {
  LabelMap labels;
  EditLedger ledger;
  std::vector<ReviewRow> review;
};

/// Flips labels where the model contradicts them with confidence >=
/// threshold; remaining disagreements go to the review list.
EditResult edit_labels(const LabelMap& noisy_labels, const ml::Model& model,
                       const embed::EmbeddingMatrix& embeddings, double confidence_threshold = 0.9);

/// Applies reviewer decisions, logging changed labels as manual edits.
void apply_review_decisions(EditResult& result, const std::vector<ReviewRow>& decided);

void write_review_csv(const fs::path& path, const std::vector<ReviewRow>& rows);
std::vector<ReviewRow> read_review_csv(const fs::path& path);

struct SpamModelParams {
  ml::LogitBoostParams boost{};
  ml::LogRegParams logreg{};
  ml::SvmParams svm{};
};

struct CandidateReport {
  ml::ModelKind kind;
  ml::MetricsReport metrics;  // on the gold set
};

struct SpamModelSelection {
  ml::ModelKind best_kind = ml::ModelKind::Svm;
  ml::Model best;
  std::vector<CandidateReport> candidates;  // LogitBoost, LogReg, SVM
  nlohmann::json to_json() const;
};

/// Trains LogitBoost, logistic regression and linear SVM on the edited
/// labels and keeps the one with the highest spam F1 on the gold set
/// (ties: SVM, then logistic regression, then LogitBoost).
SpamModelSelection select_best_spam_model(const LabelMap& edited, const embed::EmbeddingMatrix& embeddings,
                                          const LabelMap& gold, std::uint64_t seed,
                                          const SpamModelParams& params = {});

}  // namespace valdet::weak
