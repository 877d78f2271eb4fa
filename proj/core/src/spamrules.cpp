#include "valdet/spamrules.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "valdet/error.hpp"
#include "valdet/io.hpp"

namespace valdet::spam {

void BigramRuleSet::validate() const {
  if (frequency_threshold < 1) throw InvalidArgument("frequency threshold must be >= 1");
  for (const auto& b : list1) {
    if (list2.count(b)) throw InvalidArgument("bigram '" + b + "' appears in both rule lists");
  }
}

const char* to_string(RuleStep s) {
  switch (s) {
    case RuleStep::None: return "none";
    case RuleStep::BigramsList1: return "bigrams_list1";
    case RuleStep::BigramsList2Link: return "bigrams_list2_link";
    case RuleStep::Links: return "links";
    case RuleStep::FrequentText: return "frequent_text";
  }
  return "?";
}

RuleStep parse_rule_step(std::string_view s) {
  for (auto step : {RuleStep::None, RuleStep::BigramsList1, RuleStep::BigramsList2Link, RuleStep::Links,
                    RuleStep::FrequentText}) {
    if (s == to_string(step)) return step;
  }
  throw ParseError("unknown rule step '" + std::string(s) + "'");
}

namespace {

std::set<std::string> load_phrase_list(const fs::path& path) {
  io::require_file(path, "rule list");
  std::set<std::string> out;
  for (const auto& raw : io::read_lines(path)) {
    auto line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto pieces = phrase_tokens(text::to_lower(line));
    if (pieces.empty()) continue;
    out.insert(text::join(pieces, "_"));
  }
  return out;
}

}  // namespace

std::vector<std::string> phrase_tokens(std::string_view rule) {
  std::vector<std::string> out;
  for (auto& piece : text::split(rule, '_')) {
    auto t = text::trim(piece);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

BigramRuleSet load_rules(const fs::path& list1_path, const fs::path& list2_path, const fs::path& allowlist_path) {
  BigramRuleSet rules;
  rules.list1 = load_phrase_list(list1_path);
  rules.list2 = load_phrase_list(list2_path);
  if (!allowlist_path.empty()) {
    io::require_file(allowlist_path, "frequent-text allowlist");
    for (const auto& raw : io::read_lines(allowlist_path)) {
      auto norm = text::normalize_for_dedup(raw);
      if (!norm.empty()) rules.frequent_text_allowlist.insert(std::move(norm));
    }
  }
  rules.validate();
  return rules;
}

bool contains_phrase(const text::Tokens& tokens, const std::vector<std::string>& phrase) {
  if (phrase.empty() || tokens.size() < phrase.size()) return false;
  return std::search(tokens.begin(), tokens.end(), phrase.begin(), phrase.end()) != tokens.end();
}

bool has_vk_link(std::string_view body, const std::vector<std::string>& link_patterns) {
  const auto lowered = text::to_lower(body);
  return std::any_of(link_patterns.begin(), link_patterns.end(),
                     [&](const std::string& p) { return lowered.find(text::to_lower(p)) != std::string::npos; });
}

namespace {

std::vector<std::vector<std::string>> compile(const std::set<std::string>& list) {
  std::vector<std::vector<std::string>> out;
  out.reserve(list.size());
  for (const auto& r : list) out.push_back(phrase_tokens(r));
  return out;
}

bool any_phrase(const text::Tokens& tokens, const std::vector<std::vector<std::string>>& phrases) {
  return std::any_of(phrases.begin(), phrases.end(),
                     [&](const auto& ph) { return contains_phrase(tokens, ph); });
}

std::unordered_map<std::string, std::size_t> text_counts(const corpus::Corpus& corpus) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& p : corpus) counts[text::normalize_for_dedup(p.text)] += p.occurrences;
  return counts;
}

}  // namespace

std::vector<SpamRuleVerdict> apply_rules(const corpus::Corpus& corpus, const BigramRuleSet& rules) {
  rules.validate();
  const auto list1 = compile(rules.list1);
  const auto list2 = compile(rules.list2);
  const auto counts = text_counts(corpus);

  std::vector<SpamRuleVerdict> verdicts;
  verdicts.reserve(corpus.size());
  for (const auto& post : corpus) {
    SpamRuleVerdict v{post.id, false, RuleStep::None};
    const bool link = has_vk_link(post.text, rules.link_patterns);
    if (any_phrase(post.tokens, list1)) {
      v.step = RuleStep::BigramsList1;
    } else if (link && any_phrase(post.tokens, list2)) {
      v.step = RuleStep::BigramsList2Link;
    } else if (link) {
      v.step = RuleStep::Links;
    } else {
      const auto norm = text::normalize_for_dedup(post.text);
      if (counts.at(norm) > rules.frequency_threshold && !rules.frequent_text_allowlist.count(norm)) {
        v.step = RuleStep::FrequentText;
      }
    }
    v.is_spam = v.step != RuleStep::None;
    verdicts.push_back(std::move(v));
  }
  return verdicts;
}

std::vector<FrequentText> frequent_texts(const corpus::Corpus& corpus, std::size_t threshold) {
  std::vector<FrequentText> out;
  for (auto& [t, n] : text_counts(corpus)) {
    if (n > threshold) out.push_back({t, n});
  }
  std::sort(out.begin(), out.end(), [](const FrequentText& a, const FrequentText& b) {
    return a.count != b.count ? a.count > b.count : a.text < b.text;
  });
  return out;
}

void write_verdicts_csv(const fs::path& path, const std::vector<SpamRuleVerdict>& verdicts) {
  std::string out = io::csv_line({"post_id", "is_spam", "step"});
  for (const auto& v : verdicts) out += io::csv_line({v.post_id, v.is_spam ? "1" : "0", to_string(v.step)});
  io::write_file(path, out);
}

std::vector<SpamRuleVerdict> read_verdicts_csv(const fs::path& path) {
  io::require_file(path, "spam verdicts");
  const auto table = io::CsvTable::load(path);
  const auto c_id = table.column("post_id");
  const auto c_spam = table.column("is_spam");
  const auto c_step = table.column("step");
  std::vector<SpamRuleVerdict> out;
  for (const auto& row : table.rows()) {
    if (row.fields.size() <= std::max({c_id, c_spam, c_step})) throw ParseError("short verdict row", row.line);
    SpamRuleVerdict v{row.fields[c_id], row.fields[c_spam] == "1", parse_rule_step(row.fields[c_step])};
    if (v.is_spam != (v.step != RuleStep::None)) throw ParseError("verdict/step mismatch", row.line);
    out.push_back(std::move(v));
  }
  return out;
}

void write_frequent_texts_csv(const fs::path& path, const std::vector<FrequentText>& texts) {
  std::string out = io::csv_line({"text", "count"});
  for (const auto& t : texts) out += io::csv_line({t.text, std::to_string(t.count)});
  io::write_file(path, out);
}

}  // namespace valdet::spam
