#include "valdet/corpus.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "valdet/error.hpp"
#include "valdet/io.hpp"

namespace valdet::corpus {

using nlohmann::json;

Corpus::Corpus(std::vector<Post> posts) : posts_(std::move(posts)) {
  index_.reserve(posts_.size());
  for (std::size_t i = 0; i < posts_.size(); ++i) {
    if (!index_.emplace(posts_[i].id, i).second) {
      throw InvalidArgument("duplicate post id in corpus: " + posts_[i].id);
    }
  }
}

const Post* Corpus::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &posts_[it->second];
}

std::vector<std::string> Corpus::ids() const {
  std::vector<std::string> out;
  out.reserve(posts_.size());
  for (const auto& p : posts_) out.push_back(p.id);
  return out;
}

Corpus Corpus::filter(const std::vector<std::string>& keep_ids) const {
  std::unordered_set<std::string> keep(keep_ids.begin(), keep_ids.end());
  std::vector<Post> out;
  for (const auto& p : posts_) {
    if (keep.count(p.id)) out.push_back(p);
  }
  return Corpus(std::move(out));
}

const char* to_string(PiiCategory c) {
  switch (c) {
    case PiiCategory::Phone: return "phone";
    case PiiCategory::Email: return "email";
    case PiiCategory::Card: return "card";
    case PiiCategory::UserMention: return "user_mention";
  }
  return "?";
}

std::optional<PiiCategory> parse_pii_category(std::string_view s) {
  if (s == "phone") return PiiCategory::Phone;
  if (s == "email") return PiiCategory::Email;
  if (s == "card") return PiiCategory::Card;
  if (s == "user_mention" || s == "user" || s == "mention") return PiiCategory::UserMention;
  return std::nullopt;
}

const char* placeholder(PiiCategory c) {
  switch (c) {
    case PiiCategory::Phone: return "PIIPHONE";
    case PiiCategory::Email: return "PIIEMAIL";
    case PiiCategory::Card: return "PIICARD";
    case PiiCategory::UserMention: return "PIIUSER";
  }
  return "PII";
}

namespace {

PiiPattern make_pattern(PiiCategory c, std::string source) {
  try {
    std::regex re(source, std::regex::ECMAScript | std::regex::optimize);
    return PiiPattern{c, std::move(source), std::move(re)};
  } catch (const std::regex_error& e) {
    throw InvalidArgument("invalid PII pattern '" + source + "': " + e.what());
  }
}

}  // namespace

std::vector<PiiPattern> default_pii_patterns() {
  std::vector<PiiPattern> out;
  out.push_back(make_pattern(PiiCategory::UserMention, R"(\[(?:id|club|public)\d+\|[^\]]*\])"));
  out.push_back(make_pattern(PiiCategory::UserMention, R"(@(?:id|club|public)\d+\b)"));
  out.push_back(make_pattern(PiiCategory::Email, R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9.\-]+\.[A-Za-z]{2,})"));
  out.push_back(make_pattern(PiiCategory::Card, R"(\b(?:\d{4}[ \-]?){3}\d{4}\b)"));
  out.push_back(make_pattern(PiiCategory::Phone,
                             R"((?:\+7|\b8)[ \-]?\(?\d{3}\)?[ \-]?\d{3}[ \-]?\d{2}[ \-]?\d{2}\b)"));
  return out;
}

std::vector<PiiPattern> load_pii_patterns(const fs::path& path) {
  std::vector<PiiPattern> out;
  std::size_t line_no = 0;
  for (const auto& raw : io::read_lines(path)) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto sep = line.find_first_of(" \t");
    if (sep == std::string::npos) throw ParseError("PII pattern line needs '<category> <regex>'", line_no);
    const auto cat = parse_pii_category(line.substr(0, sep));
    if (!cat) throw ParseError("unknown PII category '" + line.substr(0, sep) + "'", line_no);
    out.push_back(make_pattern(*cat, text::trim(line.substr(sep + 1))));
  }
  return out;
}

ScrubResult scrub_pii(std::string_view input, const std::vector<PiiPattern>& patterns) {
  ScrubResult result;
  result.text = std::string(input);
  for (const auto& p : patterns) {
    std::string out;
    std::size_t hits = 0;
    auto begin = std::sregex_iterator(result.text.begin(), result.text.end(), p.regex);
    std::size_t last = 0;
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
      const auto pos = static_cast<std::size_t>(it->position());
      out.append(result.text, last, pos - last);
      out += placeholder(p.category);
      last = pos + static_cast<std::size_t>(it->length());
      ++hits;
    }
    if (hits) {
      out.append(result.text, last, std::string::npos);
      result.text = std::move(out);
      result.substitutions[p.category] += hits;
    }
  }
  return result;
}

void CorpusConfig::validate() const {
  if (!(cyrillic_min_fraction > 0.0 && cyrillic_min_fraction <= 1.0)) {
    throw InvalidArgument("cyrillic_min_fraction must be in (0, 1]");
  }
  if (short_post_threshold < 1) throw InvalidArgument("short_post_threshold must be >= 1");
}

std::string CleaningReport::to_json() const {
  json pii = json::object();
  for (auto c : {PiiCategory::Phone, PiiCategory::Email, PiiCategory::Card, PiiCategory::UserMention}) {
    auto it = pii_substitutions.find(c);
    pii[to_string(c)] = it == pii_substitutions.end() ? 0 : it->second;
  }
  json j{{"input", input},
         {"output", output},
         {"dropped", {{"non_cyrillic", dropped_non_cyrillic},
                      {"too_short", dropped_too_short},
                      {"duplicate", dropped_duplicate}}},
         {"pii_substitutions", pii}};
  return j.dump(2);
}

InputFormat format_for(const fs::path& path) {
  return path.extension() == ".csv" ? InputFormat::Csv : InputFormat::Jsonl;
}

namespace {

void check_unique(const RawCorpus& posts) {
  std::unordered_set<std::string> seen;
  for (const auto& p : posts) {
    if (!seen.insert(p.id).second) throw Error("duplicate post id '" + p.id + "'");
  }
}

std::string string_field(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("record missing field '") + key + "'", line);
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw ParseError(std::string("field '") + key + "' must be a string", line);
}

}  // namespace

RawCorpus parse_jsonl_posts(std::string_view data) {
  RawCorpus out;
  std::istringstream in{std::string(data)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON record: ") + e.what(), line_no);
    }
    if (!obj.is_object()) throw ParseError("record is not a JSON object", line_no);
    RawPost p{string_field(obj, "id", line_no), string_field(obj, "user_id", line_no),
              string_field(obj, "text", line_no)};
    if (p.id.empty()) throw ParseError("empty post id", line_no);
    out.push_back(std::move(p));
  }
  check_unique(out);
  return out;
}

RawCorpus parse_csv_posts(std::string_view data) {
  const auto table = io::CsvTable::parse(data);
  RawCorpus out;
  if (table.header().empty()) return out;
  const auto c_id = table.column("id");
  const auto c_user = table.column("user_id");
  const auto c_text = table.column("text");
  for (const auto& row : table.rows()) {
    if (row.fields.size() != table.header().size()) {
      throw ParseError("expected " + std::to_string(table.header().size()) + " fields, got " +
                           std::to_string(row.fields.size()),
                       row.line);
    }
    RawPost p{row.fields[c_id], row.fields[c_user], row.fields[c_text]};
    if (p.id.empty()) throw ParseError("empty post id", row.line);
    out.push_back(std::move(p));
  }
  check_unique(out);
  return out;
}

RawCorpus ingest_posts(const fs::path& path, InputFormat format) {
  io::require_file(path, "post export");
  const auto data = io::read_file(path);
  return format == InputFormat::Csv ? parse_csv_posts(data) : parse_jsonl_posts(data);
}

double cyrillic_fraction(std::string_view input) {
  std::string stripped(input);
  for (auto c : {PiiCategory::Phone, PiiCategory::Email, PiiCategory::Card, PiiCategory::UserMention}) {
    const std::string ph = placeholder(c);
    for (auto pos = stripped.find(ph); pos != std::string::npos; pos = stripped.find(ph, pos)) {
      stripped.replace(pos, ph.size(), " ");
    }
  }
  std::size_t letters = 0;
  std::size_t cyrillic = 0;
  for (char32_t cp : text::decode_utf8(stripped)) {
    if (!text::is_alpha(cp)) continue;
    ++letters;
    if (text::is_cyrillic(cp)) ++cyrillic;
  }
  return letters == 0 ? 0.0 : static_cast<double>(cyrillic) / static_cast<double>(letters);
}

bool has_cyrillic_phrase(const text::Tokens& tokens) {
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (text::is_cyrillic_word(tokens[i - 1]) && text::is_cyrillic_word(tokens[i])) return true;
  }
  return false;
}

Post make_post(std::string id, std::string user_id, std::string body, const text::Lemmatizer& lemmatizer) {
  Post p;
  p.id = std::move(id);
  p.user_id = std::move(user_id);
  p.tokens = text::tokenize(body, lemmatizer);
  p.text = std::move(body);
  p.word_count = p.tokens.size();
  return p;
}

CleanResult clean_corpus(const RawCorpus& raw, const CorpusConfig& cfg) {
  cfg.validate();
  CleanResult result;
  auto& report = result.report;
  report.input = raw.size();

  std::vector<Post> kept;
  std::unordered_map<std::string, std::size_t> first_by_key;
  for (const auto& rp : raw) {
    auto scrubbed = scrub_pii(rp.text, cfg.pii_patterns);
    for (const auto& [cat, n] : scrubbed.substitutions) report.pii_substitutions[cat] += n;

    if (cyrillic_fraction(scrubbed.text) < cfg.cyrillic_min_fraction) {
      ++report.dropped_non_cyrillic;
      continue;
    }
    Post post = make_post(rp.id, rp.user_id, text::trim(scrubbed.text), cfg.lemmatizer);
    if (!has_cyrillic_phrase(post.tokens)) {
      ++report.dropped_too_short;
      continue;
    }
    auto key = cfg.dedup_normalization ? text::normalize_for_dedup(post.text) : post.text;
    auto [it, inserted] = first_by_key.emplace(std::move(key), kept.size());
    if (!inserted) {
      ++kept[it->second].occurrences;
      ++report.dropped_duplicate;
      continue;
    }
    kept.push_back(std::move(post));
  }
  report.output = kept.size();
  result.corpus = Corpus(std::move(kept));
  return result;
}

std::vector<std::string> sample_one_per_user(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
  std::vector<std::string> users;
  std::unordered_map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto& slot = by_user[corpus[i].user_id];
    if (slot.empty()) users.push_back(corpus[i].user_id);
    slot.push_back(i);
  }
  if (users.size() < n) {
    throw InvalidArgument("requested " + std::to_string(n) + " users but only " + std::to_string(users.size()) +
                          " distinct users are available");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(users.begin(), users.end(), rng);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& posts = by_user[users[k]];
    std::uniform_int_distribution<std::size_t> pick(0, posts.size() - 1);
    out.push_back(corpus[posts[pick(rng)]].id);
  }
  return out;
}

void write_corpus_jsonl(const fs::path& path, const Corpus& corpus, std::size_t short_post_threshold) {
  std::string out;
  for (const auto& p : corpus) {
    json j{{"id", p.id},
           {"user_id", p.user_id},
           {"text", p.text},
           {"tokens", p.tokens},
           {"word_count", p.word_count},
           {"occurrences", p.occurrences},
           {"short", p.word_count <= short_post_threshold}};
    out += j.dump();
    out.push_back('\n');
  }
  io::write_file(path, out);
}

Corpus read_corpus_jsonl(const fs::path& path) {
  io::require_file(path, "corpus file");
  std::istringstream in(io::read_file(path));
  std::string line;
  std::size_t line_no = 0;
  std::vector<Post> posts;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed corpus record: ") + e.what(), line_no);
    }
    Post p;
    p.id = string_field(obj, "id", line_no);
    p.user_id = string_field(obj, "user_id", line_no);
    p.text = string_field(obj, "text", line_no);
    if (auto it = obj.find("tokens"); it != obj.end()) {
      p.tokens = it->get<text::Tokens>();
    } else {
      p.tokens = text::tokenize(p.text);
    }
    p.word_count = p.tokens.size();
    p.occurrences = obj.value("occurrences", std::size_t{1});
    posts.push_back(std::move(p));
  }
  return Corpus(std::move(posts));
}

void write_raw_jsonl(const fs::path& path, const RawCorpus& raw) {
  std::string out;
  for (const auto& p : raw) {
    out += json{{"id", p.id}, {"user_id", p.user_id}, {"text", p.text}}.dump();
    out.push_back('\n');
  }
  io::write_file(path, out);
}

RawCorpus to_raw(const Corpus& corpus) {
  RawCorpus out;
  out.reserve(corpus.size());
  for (const auto& p : corpus) out.push_back({p.id, p.user_id, p.text});
  return out;
}

}  // namespace valdet::corpus
