#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace valdet::annot {

namespace fs = std::filesystem;

enum class Label { Reflects, DoesntReflect, Unclear, Spam, NotAssigned };

constexpr Label kAllLabels[] = {Label::Reflects, Label::DoesntReflect, Label::Unclear, Label::Spam,
                                Label::NotAssigned};
constexpr Label kAssignableLabels[] = {Label::Reflects, Label::DoesntReflect, Label::Unclear, Label::Spam};

const char* to_string(Label l);
/// Canonical names plus the guideline wordings ("Reflects values",
/// "Doesn't reflect values"). Returns nullopt for anything else.
std::optional<Label> parse_label(std::string_view s);
bool annotator_assignable(Label l);

enum class Source { Expert, Crowd, Llm };
const char* to_string(Source s);
Source parse_source(std::string_view s);

struct AnnotationRecord {
  std::string post_id;
  Source source = Source::Crowd;
  std::string annotator_id;
  Label label = Label::Unclear;
  std::size_t pass = 0;  // LLM pass index, 0 otherwise
};

struct ImportSummary {
  std::vector<AnnotationRecord> records;
  std::map<std::string, std::size_t> per_post;  // record count per post
  std::vector<std::string> warnings;
};

/// CSV with post_id, annotator_id, label (optional source, pass). Rows whose
/// source column disagrees with `source` are rejected.
ImportSummary import_annotations(const fs::path& path, Source source);
ImportSummary parse_annotations(std::string_view csv, Source source);

/// Annotation CSV: post_id, source, annotator_id, pass, label.
void write_annotations_csv(const fs::path& path, const std::vector<AnnotationRecord>& records);
/// Reads every source present in the file.
std::vector<AnnotationRecord> read_annotations_csv(const fs::path& path);

struct MajorityResult {
  std::string post_id;
  Label label = Label::NotAssigned;
  std::map<Label, std::size_t> votes;
};

/// Label with at least two votes out of `expected` records, else NotAssigned.
MajorityResult majority_label(std::span<const AnnotationRecord> records, std::size_t expected = 3);
Label majority_of(std::span<const Label> labels);

/// Records grouped by post id (ordered), optionally filtered by source.
std::map<std::string, std::vector<AnnotationRecord>> group_by_post(const std::vector<AnnotationRecord>& records,
                                                                   std::optional<Source> source = std::nullopt);

using MergeMap = std::map<Label, Label>;
/// Unclear -> DoesntReflect and NotAssigned -> DoesntReflect.
MergeMap default_merge_map();
Label apply_merge(Label l, const MergeMap& merge);

struct CombinePolicy {
  bool spam_override = true;                 // crowd majority Spam -> Spam
  bool reflects_override = true;             // crowd majority Reflects -> Reflects
  bool unanimous_doesnt_reflect_override = true;
  MergeMap base_merge = default_merge_map();  // applied to the LLM majority
};

enum class OverrideReason { None, CrowdSpam, CrowdReflects, CrowdUnanimousDoesntReflect };
const char* to_string(OverrideReason r);

struct FinalLabel {
  std::string post_id;
  Label final_label = Label::DoesntReflect;
  Label base_label = Label::DoesntReflect;
  OverrideReason reason = OverrideReason::None;
};

/// Core rule on labels: base = merged LLM majority; crowd Spam majority,
/// then crowd Reflects majority, then crowd unanimity on DoesntReflect
/// override it. Unanimity is literal (Unclear votes do not count).
FinalLabel combine_label(Label llm_majority, std::span<const Label> crowd_labels, const CombinePolicy& policy = {});

/// One final label per post present in the LLM records; every such post must
/// also have crowd records.
std::vector<FinalLabel> combine_final(const std::vector<AnnotationRecord>& llm_records,
                                      const std::vector<AnnotationRecord>& crowd_records,
                                      const CombinePolicy& policy = {});

void write_final_labels_csv(const fs::path& path, const std::vector<FinalLabel>& labels);
std::vector<FinalLabel> read_final_labels_csv(const fs::path& path);

/// Share of id-aligned exact matches after merging both sides.
double accuracy_vs_expert(const std::map<std::string, Label>& labels, const std::map<std::string, Label>& expert,
                          const MergeMap& merge = default_merge_map());

/// Label -> class index in kAllLabels order (for metrics/confusion).
int label_index(Label l);

}  // namespace valdet::annot
