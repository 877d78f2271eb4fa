#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <unordered_map>
#include <vector>

#include "valdet/text.hpp"

namespace valdet::corpus {

namespace fs = std::filesystem;

struct RawPost {
  std::string id;
  std::string user_id;
  std::string text;
};

using RawCorpus = std::vector<RawPost>;

struct Post {
  std::string id;
  std::string user_id;
  std::string text;  // cleaned, PII replaced by placeholders
  text::Tokens tokens;
  std::size_t word_count = 0;
  // Number of raw posts with the same normalized text folded into this one.
  std::size_t occurrences = 1;
};

/// Cleaned posts in input order with an id index.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Post> posts);

  const std::vector<Post>& posts() const { return posts_; }
  std::size_t size() const { return posts_.size(); }
  bool empty() const { return posts_.empty(); }
  const Post& operator[](std::size_t i) const { return posts_[i]; }
  const Post* find(const std::string& id) const;
  bool contains(const std::string& id) const { return index_.count(id) > 0; }
  std::vector<std::string> ids() const;

  auto begin() const { return posts_.begin(); }
  auto end() const { return posts_.end(); }

  /// Subset in this corpus' order.
  Corpus filter(const std::vector<std::string>& keep_ids) const;

 private:
  std::vector<Post> posts_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class PiiCategory { Phone, Email, Card, UserMention };
const char* to_string(PiiCategory c);
std::optional<PiiCategory> parse_pii_category(std::string_view s);
/// Fixed replacement token per category, e.g. "PIIPHONE".
const char* placeholder(PiiCategory c);

struct PiiPattern {
  PiiCategory category;
  std::string source;
  std::regex regex;
};

/// Patterns are applied in order. The built-in set covers VK mentions
/// ("[id123|Name]", "@id123"), emails, 16-digit card numbers and Russian
/// phone numbers.
std::vector<PiiPattern> default_pii_patterns();
/// Pattern file: one "category<whitespace>regex" per line; '#' starts a
/// comment line. Categories: phone, email, card, user_mention.
std::vector<PiiPattern> load_pii_patterns(const fs::path& path);

struct ScrubResult {
  std::string text;
  std::map<PiiCategory, std::size_t> substitutions;
};
ScrubResult scrub_pii(std::string_view text, const std::vector<PiiPattern>& patterns);

struct CorpusConfig {
  std::size_t short_post_threshold = 35;
  double cyrillic_min_fraction = 0.5;
  bool dedup_normalization = true;
  std::vector<PiiPattern> pii_patterns = default_pii_patterns();
  text::Lemmatizer lemmatizer;

  void validate() const;
};

struct CleaningReport {
  std::size_t input = 0;
  std::size_t output = 0;
  std::size_t dropped_non_cyrillic = 0;
  std::size_t dropped_too_short = 0;
  std::size_t dropped_duplicate = 0;
  std::map<PiiCategory, std::size_t> pii_substitutions;

  std::size_t total_dropped() const { return dropped_non_cyrillic + dropped_too_short + dropped_duplicate; }
  std::string to_json() const;
};

enum class InputFormat { Jsonl, Csv };
/// Picks Csv for ".csv" and Jsonl otherwise.
InputFormat format_for(const fs::path& path);

RawCorpus ingest_posts(const fs::path& path, InputFormat format);
RawCorpus parse_jsonl_posts(std::string_view data);
RawCorpus parse_csv_posts(std::string_view data);

/// Fraction of alphabetic characters that are Cyrillic, ignoring PII
/// placeholders. Zero when the text has no letters.
double cyrillic_fraction(std::string_view text);
/// True when two consecutive tokens are both Cyrillic words.
bool has_cyrillic_phrase(const text::Tokens& tokens);

struct CleanResult {
  Corpus corpus;
  CleaningReport report;
};
CleanResult clean_corpus(const RawCorpus& raw, const CorpusConfig& cfg = {});

/// Builds a Post from already-clean text (tokenizes, counts words).
Post make_post(std::string id, std::string user_id, std::string text, const text::Lemmatizer& lemmatizer = {});

std::vector<std::string> sample_one_per_user(const Corpus& corpus, std::size_t n, std::uint64_t seed);

/// Corpus JSONL: id, user_id, text, tokens, word_count, occurrences, short.
void write_corpus_jsonl(const fs::path& path, const Corpus& corpus, std::size_t short_post_threshold = 35);
/// Reads corpus JSONL; tokens are recomputed when absent.
Corpus read_corpus_jsonl(const fs::path& path);
void write_raw_jsonl(const fs::path& path, const RawCorpus& raw);

RawCorpus to_raw(const Corpus& corpus);

}  // namespace valdet::corpus
