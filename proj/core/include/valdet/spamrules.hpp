#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "valdet/corpus.hpp"

namespace valdet::spam {

namespace fs = std::filesystem;

/// Phrase rules are stored underscore-joined ("play_zonk"); longer phrases
/// such as "join_the_game" match as contiguous token runs.
struct BigramRuleSet {
  std::set<std::string> list1;  // unconditional spam phrases
  std::set<std::string> list2;  // spam only together with a VK link
  std::vector<std::string> link_patterns{"vk.com/", "vkontakte.ru/"};
  std::set<std::string> frequent_text_allowlist;  // normalized texts
  std::size_t frequency_threshold = 5;            // spam when count > threshold

  void validate() const;
};

enum class RuleStep { None, BigramsList1, BigramsList2Link, Links, FrequentText };
const char* to_string(RuleStep s);
RuleStep parse_rule_step(std::string_view s);

struct SpamRuleVerdict {
  std::string post_id;
  bool is_spam = false;
  RuleStep step = RuleStep::None;
};

/// Reads one underscore-joined phrase per line; blank lines and '#'
/// comments are skipped. The allowlist holds one raw text per line and is
/// normalized on load. An empty allowlist path means no allowlist.
BigramRuleSet load_rules(const fs::path& list1_path, const fs::path& list2_path,
                         const fs::path& allowlist_path = {});

/// Splits a rule entry into its token sequence, dropping empty pieces.
std::vector<std::string> phrase_tokens(std::string_view rule);
bool contains_phrase(const text::Tokens& tokens, const std::vector<std::string>& phrase);
bool has_vk_link(std::string_view text, const std::vector<std::string>& link_patterns);

std::vector<SpamRuleVerdict> apply_rules(const corpus::Corpus& corpus, const BigramRuleSet& rules);

struct FrequentText {
  std::string text;  // normalized
  std::size_t count = 0;
};

/// Texts (normalized) occurring more than `threshold` times, counting each
/// post's folded duplicates. Sorted by count descending, then text.
std::vector<FrequentText> frequent_texts(const corpus::Corpus& corpus, std::size_t threshold);

void write_verdicts_csv(const fs::path& path, const std::vector<SpamRuleVerdict>& verdicts);
std::vector<SpamRuleVerdict> read_verdicts_csv(const fs::path& path);
void write_frequent_texts_csv(const fs::path& path, const std::vector<FrequentText>& texts);

}  // namespace valdet::spam
