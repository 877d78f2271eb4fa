#include "valdet/annotations.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "valdet/error.hpp"
#include "valdet/io.hpp"
#include "valdet/text.hpp"

namespace valdet::annot {

const char* to_string(Label l) {
  switch (l) {
    case Label::Reflects: return "Reflects";
    case Label::DoesntReflect: return "DoesntReflect";
    case Label::Unclear: return "Unclear";
    case Label::Spam: return "Spam";
    case Label::NotAssigned: return "NotAssigned";
  }
  return "?";
}

std::optional<Label> parse_label(std::string_view raw) {
  const auto s = text::trim(raw);
  for (Label l : kAllLabels) {
    if (s == to_string(l)) return l;
  }
  std::string norm;
  for (char c : text::to_lower(s)) {
    if (c != ' ' && c != '\'' && c != '_' && c != '-') norm.push_back(c);
  }
  // Typographic apostrophe (U+2019) in "Doesn’t".
  for (auto pos = norm.find("\xE2\x80\x99"); pos != std::string::npos; pos = norm.find("\xE2\x80\x99")) {
    norm.erase(pos, 3);
  }
  if (norm == "reflects" || norm == "reflectsvalues" || norm == "reflect") return Label::Reflects;
  if (norm == "doesntreflect" || norm == "doesntreflectvalues") return Label::DoesntReflect;
  if (norm == "unclear") return Label::Unclear;
  if (norm == "spam") return Label::Spam;
  if (norm == "notassigned") return Label::NotAssigned;
  return std::nullopt;
}

bool annotator_assignable(Label l) { return l != Label::NotAssigned; }

const char* to_string(Source s) {
  switch (s) {
    case Source::Expert: return "expert";
    case Source::Crowd: return "crowd";
    case Source::Llm: return "llm";
  }
  return "?";
}

Source parse_source(std::string_view s) {
  if (s == "expert") return Source::Expert;
  if (s == "crowd") return Source::Crowd;
  if (s == "llm") return Source::Llm;
  throw ParseError("unknown annotation source '" + std::string(s) + "'");
}

ImportSummary parse_annotations(std::string_view csv, Source source) {
  ImportSummary summary;
  const auto table = io::CsvTable::parse(csv);
  if (table.header().empty()) {
    summary.warnings.push_back("annotation file is empty");
    return summary;
  }
  const auto c_post = table.column("post_id");
  const auto c_annot = table.column("annotator_id");
  const auto c_label = table.column("label");
  const auto c_source = table.find_column("source");
  const auto c_pass = table.find_column("pass");
  for (const auto& row : table.rows()) {
    const auto& f = row.fields;
    if (f.size() != table.header().size()) {
      throw ParseError("expected " + std::to_string(table.header().size()) + " fields", row.line);
    }
    AnnotationRecord rec;
    rec.post_id = f[c_post];
    rec.annotator_id = f[c_annot];
    rec.source = source;
    if (c_source && !f[*c_source].empty() && parse_source(f[*c_source]) != source) {
      throw ParseError("row source '" + f[*c_source] + "' does not match import source '" + to_string(source) + "'",
                       row.line);
    }
    const auto label = parse_label(f[c_label]);
    if (!label) throw ParseError("unknown label '" + f[c_label] + "'", row.line);
    if (!annotator_assignable(*label)) {
      throw ParseError("label NotAssigned cannot be given by an annotator", row.line);
    }
    rec.label = *label;
    if (c_pass && !f[*c_pass].empty()) rec.pass = std::stoul(f[*c_pass]);
    if (rec.post_id.empty()) throw ParseError("empty post_id", row.line);
    ++summary.per_post[rec.post_id];
    summary.records.push_back(std::move(rec));
  }
  if (summary.records.empty()) summary.warnings.push_back("annotation file has no records");
  return summary;
}

ImportSummary import_annotations(const fs::path& path, Source source) {
  io::require_file(path, "annotation file");
  return parse_annotations(io::read_file(path), source);
}

void write_annotations_csv(const fs::path& path, const std::vector<AnnotationRecord>& records) {
  std::string out = io::csv_line({"post_id", "source", "annotator_id", "pass", "label"});
  for (const auto& r : records) {
    out += io::csv_line({r.post_id, to_string(r.source), r.annotator_id, std::to_string(r.pass), to_string(r.label)});
  }
  io::write_file(path, out);
}

std::vector<AnnotationRecord> read_annotations_csv(const fs::path& path) {
  io::require_file(path, "annotation file");
  const auto table = io::CsvTable::load(path);
  std::vector<AnnotationRecord> out;
  if (table.header().empty()) return out;
  const auto c_post = table.column("post_id");
  const auto c_source = table.column("source");
  const auto c_annot = table.column("annotator_id");
  const auto c_pass = table.column("pass");
  const auto c_label = table.column("label");
  for (const auto& row : table.rows()) {
    const auto& f = row.fields;
    if (f.size() != table.header().size()) throw ParseError("malformed annotation row", row.line);
    const auto label = parse_label(f[c_label]);
    if (!label || !annotator_assignable(*label)) throw ParseError("bad label '" + f[c_label] + "'", row.line);
    out.push_back({f[c_post], parse_source(f[c_source]), f[c_annot], *label,
                   f[c_pass].empty() ? 0 : std::stoul(f[c_pass])});
  }
  return out;
}

Label majority_of(std::span<const Label> labels) {
  std::map<Label, std::size_t> votes;
  for (Label l : labels) ++votes[l];
  const std::size_t need = labels.size() / 2 + 1;
  for (const auto& [l, n] : votes) {
    if (n >= need) return l;
  }
  return Label::NotAssigned;
}

MajorityResult majority_label(std::span<const AnnotationRecord> records, std::size_t expected) {
  if (records.size() != expected) {
    throw InvalidArgument("majority vote expects " + std::to_string(expected) + " records, got " +
                          std::to_string(records.size()) +
                          (records.empty() ? std::string() : " for post '" + records.front().post_id + "'"));
  }
  MajorityResult r;
  if (!records.empty()) r.post_id = records.front().post_id;
  std::vector<Label> labels;
  for (const auto& rec : records) {
    ++r.votes[rec.label];
    labels.push_back(rec.label);
  }
  r.label = majority_of(labels);
  return r;
}

std::map<std::string, std::vector<AnnotationRecord>> group_by_post(const std::vector<AnnotationRecord>& records,
                                                                   std::optional<Source> source) {
  std::map<std::string, std::vector<AnnotationRecord>> out;
  for (const auto& r : records) {
    if (!source || r.source == *source) out[r.post_id].push_back(r);
  }
  return out;
}

MergeMap default_merge_map() {
  return {{Label::Unclear, Label::DoesntReflect}, {Label::NotAssigned, Label::DoesntReflect}};
}

Label apply_merge(Label l, const MergeMap& merge) {
  auto it = merge.find(l);
  return it == merge.end() ? l : it->second;
}

const char* to_string(OverrideReason r) {
  switch (r) {
    case OverrideReason::None: return "none";
    case OverrideReason::CrowdSpam: return "crowd_majority_spam";
    case OverrideReason::CrowdReflects: return "crowd_majority_reflects";
    case OverrideReason::CrowdUnanimousDoesntReflect: return "crowd_unanimous_doesnt_reflect";
  }
  return "?";
}

namespace {

OverrideReason parse_override_reason(std::string_view s) {
  for (auto r : {OverrideReason::None, OverrideReason::CrowdSpam, OverrideReason::CrowdReflects,
                 OverrideReason::CrowdUnanimousDoesntReflect}) {
    if (s == to_string(r)) return r;
  }
  throw ParseError("unknown override reason '" + std::string(s) + "'");
}

}  // namespace

FinalLabel combine_label(Label llm_majority, std::span<const Label> crowd_labels, const CombinePolicy& policy) {
  FinalLabel out;
  out.base_label = apply_merge(llm_majority, policy.base_merge);
  out.final_label = out.base_label;
  const Label crowd = crowd_labels.empty() ? Label::NotAssigned : majority_of(crowd_labels);
  const bool unanimous_dr =
      !crowd_labels.empty() &&
      std::all_of(crowd_labels.begin(), crowd_labels.end(), [](Label l) { return l == Label::DoesntReflect; });
  if (policy.spam_override && crowd == Label::Spam) {
    out.final_label = Label::Spam;
    out.reason = OverrideReason::CrowdSpam;
  } else if (policy.reflects_override && crowd == Label::Reflects) {
    out.final_label = Label::Reflects;
    out.reason = OverrideReason::CrowdReflects;
  } else if (policy.unanimous_doesnt_reflect_override && unanimous_dr) {
    out.final_label = Label::DoesntReflect;
    out.reason = OverrideReason::CrowdUnanimousDoesntReflect;
  }
  // Anything the merge map did not fold away still maps onto the binary side.
  if (out.final_label == Label::Unclear || out.final_label == Label::NotAssigned) {
    out.final_label = Label::DoesntReflect;
  }
  return out;
}

std::vector<FinalLabel> combine_final(const std::vector<AnnotationRecord>& llm_records,
                                      const std::vector<AnnotationRecord>& crowd_records,
                                      const CombinePolicy& policy) {
  const auto llm = group_by_post(llm_records, Source::Llm);
  const auto crowd = group_by_post(crowd_records, Source::Crowd);
  for (const auto& [id, _] : crowd) {
    if (!llm.count(id)) throw InvalidArgument("post '" + id + "' has crowd labels but no LLM labels");
  }
  std::vector<FinalLabel> out;
  for (const auto& [id, recs] : llm) {
    auto it = crowd.find(id);
    if (it == crowd.end()) throw InvalidArgument("post '" + id + "' has LLM labels but no crowd labels");
    std::vector<Label> llm_labels, crowd_labels;
    for (const auto& r : recs) llm_labels.push_back(r.label);
    for (const auto& r : it->second) crowd_labels.push_back(r.label);
    auto fl = combine_label(majority_of(llm_labels), crowd_labels, policy);
    fl.post_id = id;
    out.push_back(std::move(fl));
  }
  return out;
}

void write_final_labels_csv(const fs::path& path, const std::vector<FinalLabel>& labels) {
  std::string out = io::csv_line({"post_id", "final_label", "base_label", "override_reason"});
  for (const auto& l : labels) {
    out += io::csv_line({l.post_id, to_string(l.final_label), to_string(l.base_label), to_string(l.reason)});
  }
  io::write_file(path, out);
}

std::vector<FinalLabel> read_final_labels_csv(const fs::path& path) {
  io::require_file(path, "final label file");
  const auto table = io::CsvTable::load(path);
  const auto c_id = table.column("post_id");
  const auto c_final = table.column("final_label");
  const auto c_base = table.find_column("base_label");
  const auto c_reason = table.find_column("override_reason");
  std::vector<FinalLabel> out;
  for (const auto& row : table.rows()) {
    const auto& f = row.fields;
    if (f.size() != table.header().size()) throw ParseError("malformed final label row", row.line);
    FinalLabel fl;
    fl.post_id = f[c_id];
    const auto final_label = parse_label(f[c_final]);
    if (!final_label) throw ParseError("unknown label '" + f[c_final] + "'", row.line);
    fl.final_label = *final_label;
    fl.base_label = fl.final_label;
    if (c_base) {
      if (auto b = parse_label(f[*c_base])) fl.base_label = *b;
    }
    if (c_reason && !f[*c_reason].empty()) fl.reason = parse_override_reason(f[*c_reason]);
    out.push_back(std::move(fl));
  }
  return out;
}

double accuracy_vs_expert(const std::map<std::string, Label>& labels, const std::map<std::string, Label>& expert,
                          const MergeMap& merge) {
  if (labels.size() != expert.size()) {
    throw InvalidArgument("label sets differ in size: " + std::to_string(labels.size()) + " vs " +
                          std::to_string(expert.size()));
  }
  if (labels.empty()) throw InvalidArgument("no labels to compare");
  std::size_t matches = 0;
  for (const auto& [id, l] : labels) {
    auto it = expert.find(id);
    if (it == expert.end()) throw InvalidArgument("post '" + id + "' has no expert label");
    matches += apply_merge(l, merge) == apply_merge(it->second, merge);
  }
  return static_cast<double>(matches) / static_cast<double>(labels.size());
}

int label_index(Label l) { return static_cast<int>(l); }

}  // namespace valdet::annot
