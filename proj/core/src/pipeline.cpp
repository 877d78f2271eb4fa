#include "valdet/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "valdet/activeloop.hpp"
#include "valdet/alpha.hpp"
#include "valdet/annotations.hpp"
#include "valdet/corpus.hpp"
#include "valdet/crossval.hpp"
#include "valdet/embed.hpp"
#include "valdet/error.hpp"
#include "valdet/io.hpp"
#include "valdet/llm_client.hpp"
#include "valdet/metrics.hpp"
#include "valdet/model.hpp"
#include "valdet/spamrules.hpp"
#include "valdet/text.hpp"
#include "valdet/topicmodel.hpp"
#include "valdet/weaklabel.hpp"

#ifndef VALDET_VERSION
#define VALDET_VERSION "0.0.0"
#endif

namespace valdet::pipeline {

using nlohmann::json;

// ---- config ----

Config Config::load(const fs::path& path) {
  io::require_file(path, "config file");
  auto base = fs::absolute(path).parent_path();
  return parse(io::read_file(path), base);
}

Config Config::parse(const std::string& text, const fs::path& base_dir) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError("config: " + e.message(), e.line());
  }
  Config cfg;
  cfg.base_dir_ = base_dir;
  for (const auto& [section, node] : tree) {
    if (node.empty()) {
      cfg.entries_[section] = text::trim(node.data());
      continue;
    }
    for (const auto& [key, value] : node) cfg.entries_[section + "." + key] = text::trim(value.data());
  }
  return cfg;
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const auto& s = entries_.at(key);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw InvalidArgument("config " + key + ": expected a number, got '" + s + "'");
  }
  return v;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const auto& s = entries_.at(key);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw InvalidArgument("config " + key + ": expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
  return static_cast<std::size_t>(get_u64(key, fallback));
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto s = text::to_lower(entries_.at(key));
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  throw InvalidArgument("config " + key + ": expected a boolean, got '" + entries_.at(key) + "'");
}

std::vector<std::string> Config::get_list(const std::string& key, const std::string& fallback) const {
  std::vector<std::string> out;
  for (const auto& part : text::split(get(key, fallback), ',')) {
    auto t = text::trim(part);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::optional<fs::path> Config::path(const std::string& key) const {
  const auto v = get(key);
  if (v.empty()) return std::nullopt;
  fs::path p(v);
  return p.is_absolute() ? p : base_dir_ / p;
}

fs::path Config::require_path(const std::string& key) const {
  auto p = path(key);
  if (!p) throw InvalidArgument("config key " + key + " is required for this stage");
  return *p;
}

void Config::set(const std::string& key, const std::string& value) { entries_[key] = value; }

std::string Config::hash() const {
  std::string canon;
  for (const auto& [k, v] : entries_) canon += k + "=" + v + "\n";
  return io::sha256(canon).substr(0, 12);
}

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{
      "ingest",       "clean",         "spam-rules",       "artm-grid",  "spam-train",  "spam-apply",
      "llm-annotate", "import-crowd",  "merge-labels",     "alpha-report", "confusion-report", "al-select",
      "sample-users", "assemble",      "train",            "evaluate",   "predict",     "report"};
  return names;
}

bool is_stage(const std::string& name) {
  const auto& n = stage_names();
  return std::find(n.begin(), n.end(), name) != n.end();
}

fs::path resolve_run_dir(const Config& cfg) {
  const fs::path root = cfg.path("run.root").value_or(cfg.base_dir() / "runs");
  const auto suffix = "-" + cfg.hash();
  std::optional<fs::path> newest;
  if (fs::exists(root)) {
    for (const auto& entry : fs::directory_iterator(root)) {
      const auto name = entry.path().filename().string();
      if (!entry.is_directory() || name.size() <= suffix.size()) continue;
      if (name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
      if (!newest || name > newest->filename().string()) newest = entry.path();
    }
  }
  if (newest) return *newest;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
  return root / (std::string(stamp) + suffix);
}

// ---- stages ----

namespace {

struct Ctx {
  const Config& cfg;
  fs::path run;
  std::uint64_t seed = 0;
  std::ostream& log;
  bool force = false;
  std::vector<fs::path> outputs;
  json summary = json::object();

  fs::path at(const fs::path& rel) const { return run / rel; }
  fs::path need(const fs::path& rel, std::string_view what) const {
    auto p = at(rel);
    io::require_file(p, what);
    return p;
  }
  void wrote(const fs::path& p) { outputs.push_back(p); }
  void write_json(const fs::path& rel, const json& j) {
    io::write_file(at(rel), j.dump(2) + "\n");
    wrote(at(rel));
  }
};

using InputFn = std::function<std::vector<fs::path>(const Ctx&)>;
using RunFn = std::function<void(Ctx&)>;

struct StageDef {
  InputFn inputs;
  RunFn run;
};

json read_json(const fs::path& p, std::string_view what) {
  io::require_file(p, what);
  try {
    return json::parse(io::read_file(p));
  } catch (const json::parse_error& e) {
    throw ParseError(p.string() + ": " + e.what(), 0);
  }
}

std::optional<fs::path> existing_path(const Config& cfg, const std::string& key, std::string_view what) {
  auto p = cfg.path(key);
  if (p) io::require_file(*p, what);
  return p;
}

fs::path corpus_path(const Ctx& c) { return c.need("corpus.jsonl", "cleaned corpus (run the clean stage)"); }

// Embeddings: an external file when configured, else hashed from the run
// corpus and cached next to it.
std::vector<fs::path> embedding_inputs(const Ctx& c) {
  if (auto p = existing_path(c.cfg, "paths.embeddings", "embedding file")) return {*p};
  return {corpus_path(c)};
}

embed::EmbeddingMatrix embeddings_for(const Ctx& c, const corpus::Corpus& corpus) {
  if (auto p = c.cfg.path("paths.embeddings")) {
    std::optional<std::size_t> dim;
    if (c.cfg.has("embed.expected_dim")) dim = c.cfg.get_size("embed.expected_dim", 0);
    return embed::load_embeddings(*p, dim);
  }
  const auto corpus_sha = io::sha256_file(c.at("corpus.jsonl"));
  const auto dim = c.cfg.get_size("embed.dim", 512);
  const auto cache = c.at("embeddings/hashed.bin");
  const auto meta = c.at("embeddings/hashed.json");
  const json want{{"corpus_sha256", corpus_sha},
                  {"dim", dim},
                  {"min_ngram", c.cfg.get_size("embed.min_ngram", 3)},
                  {"max_ngram", c.cfg.get_size("embed.max_ngram", 5)},
                  {"seed", io::derive_seed(c.cfg.seed(), "embed")}};
  if (fs::exists(cache) && fs::exists(meta) && read_json(meta, "embedding cache metadata") == want) {
    return embed::load_embeddings(cache, dim);
  }
  embed::HashEmbedOptions opts;
  opts.min_ngram = want["min_ngram"].get<std::size_t>();
  opts.max_ngram = want["max_ngram"].get<std::size_t>();
  auto m = embed::hash_embed(corpus, dim, want["seed"].get<std::uint64_t>(), opts);
  embed::save_embeddings_binary(cache, m);
  io::write_file(meta, want.dump(2) + "\n");
  return m;
}

std::vector<al::RoundManifest> load_rounds(const Ctx& c) {
  std::vector<al::RoundManifest> rounds;
  for (std::size_t k = 1;; ++k) {
    const auto p = c.at("rounds/round-" + std::to_string(k) + ".json");
    if (!fs::exists(p)) break;
    rounds.push_back(al::load_round(p));
  }
  return rounds;
}

std::vector<fs::path> round_files(const Ctx& c) {
  std::vector<fs::path> out;
  for (std::size_t k = 1;; ++k) {
    auto p = c.at("rounds/round-" + std::to_string(k) + ".json");
    if (!fs::exists(p)) break;
    out.push_back(p);
  }
  return out;
}

std::vector<fs::path> require_rounds(const Ctx& c) {
  auto files = round_files(c);
  if (files.empty()) c.need("rounds/round-1.json", "selection round manifest (run al-select)");
  return files;
}

std::map<std::string, annot::Label> final_label_map(const fs::path& p) {
  std::map<std::string, annot::Label> out;
  for (const auto& l : annot::read_final_labels_csv(p)) out[l.post_id] = l.final_label;
  return out;
}

json counts_json(const std::map<std::string, std::size_t>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

void write_round(Ctx& c, const al::RoundManifest& r, const corpus::Corpus& corpus) {
  const auto name = "rounds/round-" + std::to_string(r.round);
  al::save_round(c.at(name + ".json"), r);
  c.wrote(c.at(name + ".json"));
  const auto threshold = c.cfg.get_size("clean.short_post_threshold", 35);
  std::string csv = io::csv_line({"post_id", "user_id", "text", "word_count", "short", "probability"});
  for (std::size_t i = 0; i < r.ids.size(); ++i) {
    const auto* p = corpus.find(r.ids[i]);
    if (!p) throw InvalidArgument("selected post '" + r.ids[i] + "' is not in the corpus");
    std::ostringstream prob;
    if (!r.probabilities.empty()) prob << r.probabilities[i];
    csv += io::csv_line({p->id, p->user_id, p->text, std::to_string(p->word_count),
                         p->word_count < threshold ? "1" : "0", prob.str()});
  }
  io::write_file(c.at(name + "-export.csv"), csv);
  c.wrote(c.at(name + "-export.csv"));
}

// ingest

void run_ingest(Ctx& c) {
  const auto src = c.cfg.require_path("paths.posts");
  const auto fmt_name = c.cfg.get("paths.posts_format", "auto");
  corpus::InputFormat fmt = corpus::format_for(src);
  if (fmt_name == "jsonl") fmt = corpus::InputFormat::Jsonl;
  else if (fmt_name == "csv") fmt = corpus::InputFormat::Csv;
  else if (fmt_name != "auto") throw InvalidArgument("paths.posts_format must be auto, jsonl or csv");
  const auto raw = corpus::ingest_posts(src, fmt);
  corpus::write_raw_jsonl(c.at("raw_posts.jsonl"), raw);
  c.wrote(c.at("raw_posts.jsonl"));
  std::set<std::string> users;
  for (const auto& p : raw) users.insert(p.user_id);
  c.summary = {{"posts", raw.size()}, {"users", users.size()}};
  c.write_json("ingest_report.json", c.summary);
}

// clean

void run_clean(Ctx& c) {
  const auto raw = corpus::ingest_posts(c.need("raw_posts.jsonl", "raw posts (run the ingest stage)"),
                                        corpus::InputFormat::Jsonl);
  corpus::CorpusConfig cc;
  cc.short_post_threshold = c.cfg.get_size("clean.short_post_threshold", 35);
  cc.cyrillic_min_fraction = c.cfg.get_double("clean.cyrillic_min_fraction", 0.5);
  cc.dedup_normalization = c.cfg.get_bool("clean.dedup", true);
  if (auto p = c.cfg.path("paths.pii_patterns")) cc.pii_patterns = corpus::load_pii_patterns(*p);
  auto res = corpus::clean_corpus(raw, cc);
  corpus::write_corpus_jsonl(c.at("corpus.jsonl"), res.corpus, cc.short_post_threshold);
  c.wrote(c.at("corpus.jsonl"));
  c.summary = json::parse(res.report.to_json());
  c.write_json("cleaning_report.json", c.summary);
}

// spam-rules

void run_spam_rules(Ctx& c) {
  const auto corpus = corpus::read_corpus_jsonl(corpus_path(c));
  auto rules = spam::load_rules(c.cfg.require_path("paths.rules_list1"), c.cfg.require_path("paths.rules_list2"),
                                c.cfg.path("paths.frequent_allowlist").value_or(fs::path{}));
  rules.frequency_threshold = c.cfg.get_size("spam.frequency_threshold", rules.frequency_threshold);
  rules.validate();
  const auto verdicts = spam::apply_rules(corpus, rules);
  spam::write_verdicts_csv(c.at("spam/rule_verdicts.csv"), verdicts);
  c.wrote(c.at("spam/rule_verdicts.csv"));
  spam::write_frequent_texts_csv(c.at("spam/frequent_texts.csv"), spam::frequent_texts(corpus, rules.frequency_threshold));
  c.wrote(c.at("spam/frequent_texts.csv"));
  std::map<std::string, std::size_t> by_step;
  std::size_t n_spam = 0;
  for (const auto& v : verdicts) {
    ++by_step[spam::to_string(v.step)];
    n_spam += v.is_spam;
  }
  c.summary = {{"posts", verdicts.size()}, {"spam", n_spam}, {"by_step", counts_json(by_step)}};
  c.write_json("spam/rules_report.json", c.summary);
}

// artm-grid

void run_artm_grid(Ctx& c) {
  const auto corpus = corpus::read_corpus_jsonl(corpus_path(c));
  const auto matrix = topic::build_matrix(corpus, c.cfg.get_size("artm.min_term_count", 2));
  topic::RegularizerSchedule schedule{
      {topic::RegularizerPhase{c.cfg.get_size("artm.decorrelation_iterations", 10),
                               c.cfg.get_double("artm.decorrelation_tau", 0.1), 0.0, 0.0},
       topic::RegularizerPhase{c.cfg.get_size("artm.sparse_iterations", 5), 0.0,
                               c.cfg.get_double("artm.sparse_phi_tau", -0.2),
                               c.cfg.get_double("artm.sparse_theta_tau", -2.0)}}};
  std::vector<std::size_t> topics;
  for (const auto& s : c.cfg.get_list("artm.topics", "10,20,30")) topics.push_back(std::stoul(s));
  std::vector<std::uint64_t> seeds;
  for (const auto& s : c.cfg.get_list("artm.seeds")) seeds.push_back(std::stoull(s));
  if (seeds.empty()) {
    for (std::uint64_t i = 0; i < c.cfg.get_size("artm.restarts", 3); ++i) seeds.push_back(c.seed + i);
  }
  topic::ArtmOptions opts;
  opts.top_k = c.cfg.get_size("artm.top_k", 10);
  const auto runs = topic::run_grid(matrix, topics, seeds, schedule, opts);
  topic::write_review_csv(c.at("topics/review.csv"), runs, matrix.vocabulary, opts.top_k);
  c.wrote(c.at("topics/review.csv"));
  std::string bigrams = io::csv_line({"bigram", "top_lists"});
  for (const auto& [b, n] : topic::aggregate_top_bigrams(runs)) bigrams += io::csv_line({b, std::to_string(n)});
  io::write_file(c.at("topics/top_bigrams.csv"), bigrams);
  c.wrote(c.at("topics/top_bigrams.csv"));
  json grid = json::array();
  for (const auto& r : runs) {
    grid.push_back({{"topics", r.topics},
                    {"seed", r.seed},
                    {"log_likelihood", r.result.log_likelihood},
                    {"phi_sparsity", r.result.phi_sparsity},
                    {"theta_sparsity", r.result.theta_sparsity},
                    {"top_bigrams", r.result.top_bigrams}});
  }
  c.summary = {{"documents", matrix.num_docs()}, {"terms", matrix.num_terms()}, {"runs", runs.size()}};
  c.write_json("topics/grid.json", {{"summary", c.summary}, {"runs", grid}});
}

// spam-train

std::vector<fs::path> spam_train_inputs(const Ctx& c) {
  std::vector<fs::path> in{corpus_path(c), c.need("spam/rule_verdicts.csv", "spam rule verdicts (run spam-rules)")};
  for (auto& p : embedding_inputs(c)) in.push_back(p);
  if (auto p = existing_path(c.cfg, "paths.spam_gold", "spam gold label file")) in.push_back(*p);
  if (auto p = existing_path(c.cfg, "paths.spam_review", "spam review decisions")) in.push_back(*p);
  return in;
}

void run_spam_train(Ctx& c) {
  const auto corpus = corpus::read_corpus_jsonl(corpus_path(c));
  const auto emb = embeddings_for(c, corpus);
  const auto noisy = weak::from_verdicts(spam::read_verdicts_csv(c.at("spam/rule_verdicts.csv")));

  ml::LogitBoostParams boost;
  boost.rounds = c.cfg.get_size("spam.boost_rounds", boost.rounds);
  const auto stage = weak::train_noisy_stage(emb, noisy, c.cfg.get_double("spam.train_fraction", 0.8), c.seed, boost);
  auto edit = weak::edit_labels(noisy, ml::Model(stage.model), emb, c.cfg.get_double("spam.edit_threshold", 0.9));
  if (auto p = c.cfg.path("paths.spam_review")) weak::apply_review_decisions(edit, weak::read_review_csv(*p));

  weak::write_review_csv(c.at("spam/review.csv"), edit.review);
  c.wrote(c.at("spam/review.csv"));
  weak::write_label_csv(c.at("spam/edited_labels.csv"), edit.labels);
  c.wrote(c.at("spam/edited_labels.csv"));
  c.write_json("spam/edit_ledger.json", edit.ledger.to_json());
  c.write_json("spam/noisy_stage.json", {{"train", stage.train_ids.size()},
                                         {"validation", stage.validation_ids.size()},
                                         {"disagreements", stage.disagreements.size()},
                                         {"validation_metrics", stage.validation_metrics.to_json({"non_spam", "spam"})}});

  weak::LabelMap gold;
  json warnings = json::array();
  if (auto p = c.cfg.path("paths.spam_gold")) {
    gold = weak::read_label_csv(*p);
  } else {
    for (const auto& id : stage.validation_ids) gold[id] = edit.labels.at(id);
    warnings.push_back("no paths.spam_gold: model selection uses edited labels of the held-out split");
  }
  weak::LabelMap train_labels;
  for (const auto& [id, y] : edit.labels) {
    if (!gold.count(id)) train_labels[id] = y;
  }
  weak::SpamModelParams params;
  params.boost = boost;
  params.logreg.l2_lambda = c.cfg.get_double("spam.l2_lambda", params.logreg.l2_lambda);
  params.svm.l2_lambda = c.cfg.get_double("spam.l2_lambda", params.svm.l2_lambda);
  const auto sel = weak::select_best_spam_model(train_labels, emb, gold, c.seed, params);
  ml::save_model(c.at("spam/model.json"), ml::SavedModel{sel.best, c.seed, sel.to_json()});
  c.wrote(c.at("spam/model.json"));
  c.summary = sel.to_json();
  c.summary["edits"] = edit.ledger.entries.size();
  c.summary["review_rows"] = edit.review.size();
  c.summary["warnings"] = warnings;
  c.write_json("spam/selection.json", c.summary);
}

// spam-apply

void run_spam_apply(Ctx& c) {
  const auto corpus = corpus::read_corpus_jsonl(corpus_path(c));
  const auto emb = embeddings_for(c, corpus);
  const auto saved = ml::load_model(c.need("spam/model.json", "spam model (run spam-train)"));
  const auto ids = corpus.ids();
  const auto x = emb.rows(ids);
  const auto proba = ml::predict_proba(saved.model, x);
  const auto labels = ml::predict(saved.model, x);
  std::map<std::string, bool> rule_spam;
  for (const auto& v : spam::read_verdicts_csv(c.need("spam/rule_verdicts.csv", "spam rule verdicts")))
    rule_spam[v.post_id] = v.is_spam;
  std::string csv = io::csv_line({"post_id", "rule_spam", "model_spam", "probability"});
  std::vector<std::string> pool;
  std::size_t n_spam = 0, n_rule = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::ostringstream p;
    p << proba[i];
    const bool rs = rule_spam.count(ids[i]) && rule_spam[ids[i]];
    csv += io::csv_line({ids[i], rs ? "1" : "0", labels[i] ? "1" : "0", p.str()});
    n_rule += rs;
    if (labels[i]) ++n_spam;
    else pool.push_back(ids[i]);
  }
  io::write_file(c.at("spam/predictions.csv"), csv);
  c.wrote(c.at("spam/predictions.csv"));
  io::write_lines(c.at("pool.txt"), pool);
  c.wrote(c.at("pool.txt"));
  c.summary = {{"posts", ids.size()}, {"model_spam", n_spam}, {"rule_spam", n_rule}, {"pool", pool.size()}};
  c.write_json("spam/apply_report.json", c.summary);
}

// llm-annotate

std::vector<fs::path> llm_inputs(const Ctx& c) {
  std::vector<fs::path> in{corpus_path(c)};
  for (auto& p : require_rounds(c)) in.push_back(p);
  if (auto p = existing_path(c.cfg, "paths.llm_fixture", "mock LLM fixture")) in.push_back(*p);
  if (auto p = existing_path(c.cfg, "llm.guideline_file", "annotation guideline")) in.push_back(*p);
  return in;
}

void run_llm_annotate(Ctx& c) {
  const auto corpus = corpus::read_corpus_jsonl(corpus_path(c));
  llm::LlmAnnotatorConfig lc;
  lc.endpoint = c.cfg.get("llm.endpoint", lc.endpoint);
  lc.model = c.cfg.get("llm.model", lc.model);
  lc.temperature = c.cfg.get_double("llm.temperature", 0.0);
  lc.passes = c.cfg.get_size("llm.passes", 3);
  lc.timeout = std::chrono::milliseconds(c.cfg.get_u64("llm.timeout_ms", 60000));
  lc.retry.max_attempts = c.cfg.get_size("llm.max_attempts", 3);
  lc.retry.initial_backoff = std::chrono::milliseconds(c.cfg.get_u64("llm.backoff_ms", 500));
  lc.max_concurrency = c.cfg.get_size("llm.max_concurrency", 4);
  if (auto p = c.cfg.path("llm.guideline_file")) lc.guideline = io::read_file(*p);
  lc.validate();

  std::vector<std::string> target;
  for (const auto& r : load_rounds(c)) target.insert(target.end(), r.ids.begin(), r.ids.end());

  const auto out_path = c.at("annotations/llm.csv");
  std::map<std::string, std::vector<annot::AnnotationRecord>> done;
  if (fs::exists(out_path)) {
    for (auto& r : annot::read_annotations_csv(out_path)) done[r.post_id].push_back(std::move(r));
  }
  std::vector<llm::PostToAnnotate> todo;
  for (const auto& id : target) {
    auto it = done.find(id);
    if (it != done.end() && it->second.size() == lc.passes) continue;
    done.erase(id);
    const auto* p = corpus.find(id);
    if (!p) throw InvalidArgument("selected post '" + id + "' is not in the corpus");
    todo.push_back({p->id, p->text});
  }
  c.log << "llm-annotate: " << todo.size() << " posts to annotate, " << lc.passes << " passes each\n";

  std::unique_ptr<llm::ChatTransport> transport;
  if (auto fixture = c.cfg.path("paths.llm_fixture")) {
    transport = std::make_unique<llm::MockChatTransport>(llm::MockChatTransport::from_file(*fixture));
  } else {
    const auto env = c.cfg.get("llm.api_key_env", "OPENAI_API_KEY");
    const char* key = std::getenv(env.c_str());
    if (!todo.empty() && (!key || !*key)) throw InvalidArgument("environment variable " + env + " is not set");
    transport = std::make_unique<llm::HttpChatTransport>(lc.endpoint, key ? key : "");
  }
  const auto result = llm::llm_annotate(todo, lc, *transport);

  std::vector<annot::AnnotationRecord> all;
  for (const auto& id : target) {
    if (auto it = done.find(id); it != done.end()) all.insert(all.end(), it->second.begin(), it->second.end());
  }
  all.insert(all.end(), result.records.begin(), result.records.end());
  annot::write_annotations_csv(out_path, all);
  c.wrote(out_path);
  c.write_json("annotations/llm_failures.json", result.failures_json());
  c.summary = {{"annotated_now", todo.size()},
               {"records", all.size()},
               {"failures", result.failures.size()},
               {"flagged_posts", result.flagged_posts.size()}};
  if (result.transport_failures() > 0) {
    throw Error(std::to_string(result.transport_failures()) +
                " LLM requests failed after retries; see annotations/llm_failures.json and rerun to resume");
  }
}

// import-crowd

std::vector<fs::path> import_inputs(const Ctx& c) {
  std::vector<fs::path> in{c.cfg.require_path("paths.crowd_annotations")};
  io::require_file(in.front(), "crowd annotation file");
  if (auto p = existing_path(c.cfg, "paths.expert_annotations", "expert annotation file")) in.push_back(*p);
  return in;
}

void run_import_crowd(Ctx& c) {
  const auto expected = c.cfg.get_size("labels.crowd_per_post", 3);
  auto crowd = annot::import_annotations(c.cfg.require_path("paths.crowd_annotations"), annot::Source::Crowd);
  for (const auto& [id, n] : crowd.per_post) {
    if (n != expected) {
      crowd.warnings.push_back("post '" + id + "' has " + std::to_string(n) + " crowd labels, expected " +
                               std::to_string(expected));
    }
  }
  annot::write_annotations_csv(c.at("annotations/crowd.csv"), crowd.records);
  c.wrote(c.at("annotations/crowd.csv"));
  c.summary = {{"crowd_records", crowd.records.size()}, {"crowd_posts", crowd.per_post.size()},
               {"warnings", crowd.warnings}};
  if (auto p = c.cfg.path("paths.expert_annotations")) {
    const auto expert = annot::import_annotations(*p, annot::Source::Expert);
    annot::write_annotations_csv(c.at("annotations/expert.csv"), expert.records);
    c.wrote(c.at("annotations/expert.csv"));
    c.summary["expert_records"] = expert.records.size();
    c.summary["expert_posts"] = expert.per_post.size();
  }
  c.write_json("annotations/import_report.json", c.summary);
}

// merge-labels

std::map<std::string, annot::Label> majority_map(const std::vector<annot::AnnotationRecord>& records) {
  std::map<std::string, annot::Label> out;
  for (const auto& [id, recs] : annot::group_by_post(records)) {
    std::vector<annot::Label> ls;
    for (const auto& r : recs) ls.push_back(r.label);
    out[id] = annot::majority_of(ls);
  }
  return out;
}

void run_merge_labels(Ctx& c) {
  const auto llm_all = annot::read_annotations_csv(c.need("annotations/llm.csv", "LLM annotations (run llm-annotate)"));
  const auto crowd_all =
      annot::read_annotations_csv(c.need("annotations/crowd.csv", "crowd annotations (run import-crowd)"));
  std::set<std::string> llm_ids, crowd_ids;
  for (const auto& r : llm_all) llm_ids.insert(r.post_id);
  for (const auto& r : crowd_all) crowd_ids.insert(r.post_id);
  std::vector<annot::AnnotationRecord> llm, crowd;
  for (const auto& r : llm_all) if (crowd_ids.count(r.post_id)) llm.push_back(r);
  for (const auto& r : crowd_all) if (llm_ids.count(r.post_id)) crowd.push_back(r);
  std::vector<std::string> awaiting_crowd, awaiting_llm;
  for (const auto& id : llm_ids) if (!crowd_ids.count(id)) awaiting_crowd.push_back(id);
  for (const auto& id : crowd_ids) if (!llm_ids.count(id)) awaiting_llm.push_back(id);

  const auto finals = annot::combine_final(llm, crowd);
  annot::write_final_labels_csv(c.at("labels/final_labels.csv"), finals);
  c.wrote(c.at("labels/final_labels.csv"));

  std::map<std::string, std::size_t> by_label, by_reason;
  std::map<std::string, annot::Label> final_map;
  for (const auto& f : finals) {
    ++by_label[annot::to_string(f.final_label)];
    ++by_reason[annot::to_string(f.reason)];
    final_map[f.post_id] = f.final_label;
  }
  c.summary = {{"posts", finals.size()},
               {"final_labels", counts_json(by_label)},
               {"override_reasons", counts_json(by_reason)},
               {"awaiting_crowd", awaiting_crowd.size()},
               {"awaiting_llm", awaiting_llm.size()}};
  const auto expert_path = c.at("annotations/expert.csv");
  if (fs::exists(expert_path)) {
    const auto expert = majority_map(annot::read_annotations_csv(expert_path));
    c.summary["accuracy_vs_expert"] = {{"llm", annot::accuracy_vs_expert(majority_map(llm), expert)},
                                       {"crowd", annot::accuracy_vs_expert(majority_map(crowd), expert)},
                                       {"final", annot::accuracy_vs_expert(final_map, expert)}};
  }
  c.write_json("labels/merge_report.json", c.summary);
}

// alpha-report

std::vector<fs::path> annotation_inputs(const Ctx& c, bool need_final) {
  std::vector<fs::path> in{c.need("annotations/crowd.csv", "crowd annotations (run import-crowd)")};
  for (const char* f : {"annotations/llm.csv", "annotations/expert.csv"}) {
    if (fs::exists(c.at(f))) in.push_back(c.at(f));
  }
  if (need_final) in.push_back(c.need("labels/final_labels.csv", "final labels (run merge-labels)"));
  return in;
}

void run_alpha_report(Ctx& c) {
  const auto crowd = annot::read_annotations_csv(c.at("annotations/crowd.csv"));
  const auto merge = annot::default_merge_map();
  json j{{"crowd", annot::krippendorff_alpha(crowd).to_json()},
         {"crowd_merged", annot::krippendorff_alpha(crowd, merge).to_json()}};
  if (fs::exists(c.at("annotations/llm.csv"))) {
    const auto llm = annot::read_annotations_csv(c.at("annotations/llm.csv"));
    if (!llm.empty()) j["llm_passes"] = annot::krippendorff_alpha(llm).to_json();
  }
  if (fs::exists(c.at("annotations/expert.csv"))) {
    const auto expert = annot::read_annotations_csv(c.at("annotations/expert.csv"));
    bool multi = false;
    for (const auto& [id, recs] : annot::group_by_post(expert)) multi |= recs.size() > 1;
    if (multi) j["expert"] = annot::krippendorff_alpha(expert).to_json();
  }
  c.summary = {{"crowd_alpha", j["crowd"]["alpha"]}, {"crowd_merged_alpha", j["crowd_merged"]["alpha"]}};
  c.write_json("reports/alpha.json", j);
}

// confusion-report

json confusion_between(const std::map<std::string, annot::Label>& truth,
                       const std::map<std::string, annot::Label>& pred) {
  std::vector<int> yt, yp, classes;
  std::vector<std::string> names;
  for (auto l : annot::kAllLabels) {
    classes.push_back(annot::label_index(l));
    names.push_back(annot::to_string(l));
  }
  for (const auto& [id, l] : truth) {
    auto it = pred.find(id);
    if (it == pred.end()) continue;
    yt.push_back(annot::label_index(l));
    yp.push_back(annot::label_index(it->second));
  }
  if (yt.empty()) return {{"posts", 0}};
  return {{"posts", yt.size()},
          {"counts", ml::confusion_matrix(yt, yp, classes).to_json(names)},
          {"row_normalized", ml::confusion_matrix(yt, yp, classes, ml::Normalize::Row).to_json(names)}};
}

void run_confusion_report(Ctx& c) {
  const auto crowd = majority_map(annot::read_annotations_csv(c.at("annotations/crowd.csv")));
  const auto finals = final_label_map(c.at("labels/final_labels.csv"));
  json j = json::object();
  std::map<std::string, annot::Label> llm;
  if (fs::exists(c.at("annotations/llm.csv"))) {
    llm = majority_map(annot::read_annotations_csv(c.at("annotations/llm.csv")));
    j["crowd_vs_llm"] = confusion_between(crowd, llm);
  }
  j["crowd_vs_final"] = confusion_between(crowd, finals);
  if (fs::exists(c.at("annotations/expert.csv"))) {
    const auto expert = majority_map(annot::read_annotations_csv(c.at("annotations/expert.csv")));
    j["expert_vs_crowd"] = confusion_between(expert, crowd);
    j["expert_vs_final"] = confusion_between(expert, finals);
    if (!llm.empty()) j["expert_vs_llm"] = confusion_between(expert, llm);
  }
  c.summary = {{"tables", j.size()}};
  c.write_json("reports/confusion.json", j);
}

// al-select, sample-users

std::vector<fs::path> selection_inputs(const Ctx& c) {
  std::vector<fs::path> in{corpus_path(c), c.need("pool.txt", "candidate pool (run spam-apply)")};
  for (auto& p : embedding_inputs(c)) in.push_back(p);
  for (auto& p : round_files(c)) in.push_back(p);
  if (fs::exists(c.at("labels/final_labels.csv"))) in.push_back(c.at("labels/final_labels.csv"));
  return in;
}

void run_al_select(Ctx& c) {
  const auto corpus = corpus::read_corpus_jsonl(corpus_path(c));
  const auto pool_all = io::read_lines(c.at("pool.txt"));
  const auto rounds = load_rounds(c);
  const auto batches = c.cfg.get_list("al.uncertainty_batches", "2038");
  const auto k = rounds.size() + 1;
  const auto seed = io::derive_seed(c.cfg.seed(), "al-select:round-" + std::to_string(k));
  const auto pool = al::remaining_pool(pool_all, rounds);

  al::RoundManifest r;
  r.round = k;
  json warnings = json::array();
  if (rounds.empty()) {
    const auto sel = al::select_random(pool, c.cfg.get_size("al.initial_random", 2000), seed);
    r.method = al::SelectionMethod::Random;
    r.ids = sel.ids;
    for (const auto& w : sel.warnings) warnings.push_back(w);
  } else {
    const auto done = static_cast<std::size_t>(std::count_if(rounds.begin(), rounds.end(), [](const auto& x) {
      return x.method == al::SelectionMethod::Uncertainty;
    }));
    if (done >= batches.size()) {
      c.summary = {{"round", nullptr}, {"note", "all configured uncertainty rounds are selected"}};
      c.log << "al-select: all configured uncertainty rounds are selected\n";
      return;
    }
    const auto labels = final_label_map(c.need("labels/final_labels.csv", "final labels (run merge-labels)"));
    const auto emb = embeddings_for(c, corpus);
    const auto train = al::assemble_training_set(rounds, labels, emb);
    for (const auto& w : train.warnings) warnings.push_back(w);
    ml::require_binary_both_classes(train.dataset);
    const auto kind = ml::parse_model_kind(c.cfg.get("al.selector_kind", "logreg"));
    ml::ParamSet ps;
    ps.l2_lambda = c.cfg.get_double("al.selector_lambda", ps.l2_lambda);
    const auto model = ml::train_model(train.dataset, kind, ps, seed);
    const auto model_rel = "rounds/selector-" + std::to_string(k) + ".json";
    ml::save_model(c.at(model_rel), ml::SavedModel{model, seed, ps.to_json(kind)});
    c.wrote(c.at(model_rel));

    al::SelectionConfig sc;
    sc.band_low = c.cfg.get_double("al.band_low", 0.3);
    sc.band_high = c.cfg.get_double("al.band_high", 0.7);
    sc.batch = std::stoul(batches[done]);
    sc.seed = seed;
    const auto sel = al::select_uncertain(model, emb, pool, sc);
    for (const auto& w : sel.warnings) warnings.push_back(w);
    r.method = al::SelectionMethod::Uncertainty;
    r.ids = sel.ids;
    r.probabilities = sel.probabilities;
    r.model_ref = model_rel;
    r.label_ref = "labels/final_labels.csv";
  }
  write_round(c, r, corpus);
  for (const auto& w : warnings) c.log << "al-select: warning: " << w.get<std::string>() << "\n";
  c.summary = {{"round", k}, {"method", al::to_string(r.method)}, {"selected", r.ids.size()}, {"warnings", warnings}};
}

void run_sample_users(Ctx& c) {
  const auto corpus = corpus::read_corpus_jsonl(corpus_path(c));
  const auto rounds = load_rounds(c);
  for (const auto& r : rounds) {
    if (r.method == al::SelectionMethod::UserBalanced) {
      c.summary = {{"round", r.round}, {"note", "user-balanced round already selected"}};
      c.log << "sample-users: user-balanced round already selected (round " << r.round << ")\n";
      return;
    }
  }
  const auto pool = al::remaining_pool(io::read_lines(c.at("pool.txt")), rounds);
  const auto k = rounds.size() + 1;
  const auto sel = al::select_user_balanced(corpus, pool, c.cfg.get_size("al.user_sample", 997),
                                            io::derive_seed(c.cfg.seed(), "sample-users"));
  al::RoundManifest r;
  r.round = k;
  r.method = al::SelectionMethod::UserBalanced;
  r.ids = sel.ids;
  write_round(c, r, corpus);
  c.summary = {{"round", k}, {"method", "user_balanced"}, {"selected", r.ids.size()}};
}

// assemble

std::vector<fs::path> assemble_inputs(const Ctx& c) {
  auto in = require_rounds(c);
  in.push_back(corpus_path(c));
  in.push_back(c.need("labels/final_labels.csv", "final labels (run merge-labels)"));
  for (auto& p : embedding_inputs(c)) in.push_back(p);
  return in;
}

void save_dataset(Ctx& c, const ml::Dataset& ds) {
  io::write_binary_matrix(c.at("dataset/features.bin"), io::LabeledMatrix{ds.features, ds.ids});
  c.wrote(c.at("dataset/features.bin"));
  std::string csv = io::csv_line({"post_id", "label"});
  for (std::size_t i = 0; i < ds.size(); ++i) csv += io::csv_line({ds.ids[i], std::to_string(ds.labels[i])});
  io::write_file(c.at("dataset/labels.csv"), csv);
  c.wrote(c.at("dataset/labels.csv"));
}

ml::Dataset load_dataset(const Ctx& c) {
  const auto m = io::read_binary_matrix(c.need("dataset/features.bin", "training dataset (run assemble)"));
  const auto table = io::CsvTable::load(c.need("dataset/labels.csv", "training labels (run assemble)"));
  const auto c_id = table.column("post_id");
  const auto c_label = table.column("label");
  ml::Dataset ds;
  ds.features = m.values;
  ds.ids = m.row_labels;
  if (table.rows().size() != ds.ids.size()) throw ParseError("dataset labels and features differ in length", 0);
  for (std::size_t i = 0; i < ds.ids.size(); ++i) {
    const auto& f = table.rows()[i].fields;
    if (f.at(c_id) != ds.ids[i]) throw ParseError("dataset labels out of order at '" + f.at(c_id) + "'",
                                                  table.rows()[i].line);
    ds.labels.push_back(std::stoi(f.at(c_label)));
  }
  ds.validate();
  return ds;
}

void run_assemble(Ctx& c) {
  const auto corpus = corpus::read_corpus_jsonl(corpus_path(c));
  const auto rounds = load_rounds(c);
  const auto labels = final_label_map(c.at("labels/final_labels.csv"));
  const auto emb = embeddings_for(c, corpus);
  const auto set = al::assemble_training_set(rounds, labels, emb);
  save_dataset(c, set.dataset);
  for (const auto& w : set.warnings) c.log << "assemble: warning: " << w << "\n";
  c.summary = set.report();
  c.write_json("dataset/assemble_report.json", c.summary);
}

// train

std::vector<fs::path> train_inputs(const Ctx& c) {
  return {c.need("dataset/features.bin", "training dataset (run assemble)"),
          c.need("dataset/labels.csv", "training labels (run assemble)")};
}

std::vector<ml::ParamSet> grid_for(const Config& cfg, ml::ModelKind kind) {
  auto grid = ml::default_grid(kind);
  const auto key = kind == ml::ModelKind::LogitBoost ? "train.rounds" : "train.lambdas";
  const auto values = cfg.get_list(key);
  if (values.empty()) return grid;
  std::vector<ml::ParamSet> out;
  for (const auto& v : values) {
    ml::ParamSet p;
    if (kind == ml::ModelKind::LogitBoost) p.rounds = std::stoul(v);
    else p.l2_lambda = std::stod(v);
    out.push_back(p);
  }
  return out;
}

void run_train(Ctx& c) {
  const auto ds = load_dataset(c);
  ml::require_binary_both_classes(ds);
  const auto metric = ml::parse_target_metric(c.cfg.get("train.metric", "f1_class1"));
  const auto folds = c.cfg.get_size("train.folds", 5);
  json results = json::array();
  std::optional<ml::CvGridResult> best;
  for (const auto& name : c.cfg.get_list("train.kinds", "svm,logreg,logitboost")) {
    const auto kind = ml::parse_model_kind(name);
    auto r = ml::cross_validate_grid(ds, kind, grid_for(c.cfg, kind), folds, metric, c.seed);
    results.push_back(r.to_json());
    c.log << "train: " << name << " best mean " << r.best_config().mean << "\n";
    if (!best || r.best_config().mean > best->best_config().mean) best = std::move(r);
  }
  if (!best) throw InvalidArgument("train.kinds is empty");
  const auto& bc = best->best_config();
  const auto model = ml::train_model(ds, best->kind, bc.params, c.seed);
  json prov{{"kind", ml::to_string(best->kind)},
            {"params", bc.params.to_json(best->kind)},
            {"metric", ml::to_string(metric)},
            {"cv_mean", bc.mean},
            {"cv_std", bc.stddev},
            {"training_posts", ds.size()}};
  ml::save_model(c.at("model/value_model.json"), ml::SavedModel{model, c.seed, prov});
  c.wrote(c.at("model/value_model.json"));
  c.write_json("model/cv.json", {{"results", results}, {"best", prov}});
  c.summary = prov;
}

// evaluate

std::vector<fs::path> evaluate_inputs(const Ctx& c) {
  std::vector<fs::path> in{c.need("model/value_model.json", "value model (run train)"),
                           c.need("model/cv.json", "cross-validation results (run train)")};
  if (auto p = existing_path(c.cfg, "paths.validation_labels", "validation label file")) {
    in.push_back(*p);
    for (auto& e : embedding_inputs(c)) in.push_back(e);
  }
  return in;
}

void run_evaluate(Ctx& c) {
  const auto cv = read_json(c.at("model/cv.json"), "cross-validation results");
  json metrics{{"best", cv["best"]}};
  json per_kind = json::object();
  for (const auto& r : cv["results"]) {
    const auto& b = r["configs"][r["best"].get<std::size_t>()];
    per_kind[r["kind"].get<std::string>()] = {{"params", b["params"]}, {"mean", b["mean"]}, {"std", b["std"]},
                                              {"fold_scores", b["fold_scores"]}};
  }
  metrics["cv"] = per_kind;
  if (auto p = c.cfg.path("paths.validation_labels")) {
    const auto saved = ml::load_model(c.at("model/value_model.json"));
    const auto corpus = corpus::read_corpus_jsonl(corpus_path(c));
    const auto emb = embeddings_for(c, corpus);
    const auto table = io::CsvTable::load(*p);
    const auto c_id = table.column("post_id");
    const auto c_label = table.find_column("final_label") ? *table.find_column("final_label") : table.column("label");
    std::vector<std::string> ids;
    std::vector<int> truth;
    for (const auto& row : table.rows()) {
      const auto l = annot::parse_label(row.fields.at(c_label));
      if (!l) throw ParseError("unknown label '" + row.fields.at(c_label) + "'", row.line);
      ids.push_back(row.fields.at(c_id));
      truth.push_back(al::binary_value_label(annot::apply_merge(*l, annot::default_merge_map())));
    }
    const auto pred = ml::predict(saved.model, emb.rows(ids));
    metrics["validation"] = ml::compute_metrics(truth, pred, {0, 1}).to_json({"doesnt_reflect", "reflects"});
  }
  c.summary = metrics["best"];
  c.write_json("metrics.json", metrics);
}

// predict

std::vector<fs::path> predict_inputs(const Ctx& c) {
  std::vector<fs::path> in{c.need("model/value_model.json", "value model (run train)"), corpus_path(c)};
  for (auto& p : embedding_inputs(c)) in.push_back(p);
  if (fs::exists(c.at("pool.txt"))) in.push_back(c.at("pool.txt"));
  return in;
}

void run_predict(Ctx& c) {
  const auto saved = ml::load_model(c.at("model/value_model.json"));
  const auto corpus = corpus::read_corpus_jsonl(corpus_path(c));
  const auto emb = embeddings_for(c, corpus);
  const bool filtered = fs::exists(c.at("pool.txt"));
  const auto ids = filtered ? io::read_lines(c.at("pool.txt")) : corpus.ids();
  if (ids.empty()) throw InvalidArgument("no posts to predict");
  const auto threshold = c.cfg.get_size("clean.short_post_threshold", 35);
  const auto x = emb.rows(ids);
  const auto proba = ml::predict_proba(saved.model, x);
  const auto labels = ml::predict(saved.model, x);
  std::string csv = io::csv_line({"post_id", "probability", "label", "word_count", "short"});
  std::size_t positive = 0, short_posts = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto* p = corpus.find(ids[i]);
    if (!p) throw InvalidArgument("post '" + ids[i] + "' is not in the corpus");
    std::ostringstream pr;
    pr << proba[i];
    const bool is_short = p->word_count < threshold;
    csv += io::csv_line({ids[i], pr.str(), std::to_string(labels[i]), std::to_string(p->word_count),
                         is_short ? "1" : "0"});
    positive += labels[i] == 1;
    short_posts += is_short;
  }
  io::write_file(c.at("predictions.csv"), csv);
  c.wrote(c.at("predictions.csv"));
  c.summary = {{"posts", ids.size()},
               {"spam_filtered", filtered},
               {"value_expressive", positive},
               {"value_expressive_proportion", static_cast<double>(positive) / static_cast<double>(ids.size())},
               {"short_posts", short_posts}};
  c.write_json("predict_report.json", c.summary);
}

// report

const std::vector<std::pair<std::string, std::string>>& report_parts() {
  static const std::vector<std::pair<std::string, std::string>> parts{
      {"ingest", "ingest_report.json"},
      {"clean", "cleaning_report.json"},
      {"spam_rules", "spam/rules_report.json"},
      {"spam_model", "spam/selection.json"},
      {"spam_apply", "spam/apply_report.json"},
      {"annotations", "annotations/import_report.json"},
      {"labels", "labels/merge_report.json"},
      {"alpha", "reports/alpha.json"},
      {"dataset", "dataset/assemble_report.json"},
      {"metrics", "metrics.json"},
      {"predict", "predict_report.json"}};
  return parts;
}

std::vector<fs::path> report_inputs(const Ctx& c) {
  std::vector<fs::path> in;
  for (const auto& [_, rel] : report_parts()) {
    if (fs::exists(c.at(rel))) in.push_back(c.at(rel));
  }
  return in;
}

void run_report(Ctx& c) {
  json j = json::object();
  for (const auto& [key, rel] : report_parts()) {
    if (fs::exists(c.at(rel))) j[key] = read_json(c.at(rel), rel);
  }
  j["rounds"] = json::array();
  for (const auto& r : load_rounds(c)) {
    j["rounds"].push_back({{"round", r.round}, {"method", al::to_string(r.method)}, {"size", r.ids.size()}});
  }
  c.summary = {{"sections", j.size()}};
  c.write_json("report.json", j);
}

std::vector<fs::path> corpus_only(const Ctx& c) { return {corpus_path(c)}; }

const std::map<std::string, StageDef>& stages() {
  static const std::map<std::string, StageDef> table{
      {"ingest",
       {[](const Ctx& c) {
          auto p = c.cfg.require_path("paths.posts");
          io::require_file(p, "raw posts file");
          return std::vector<fs::path>{p};
        },
        run_ingest}},
      {"clean",
       {[](const Ctx& c) {
          std::vector<fs::path> in{c.need("raw_posts.jsonl", "raw posts (run the ingest stage)")};
          if (auto p = existing_path(c.cfg, "paths.pii_patterns", "PII pattern file")) in.push_back(*p);
          return in;
        },
        run_clean}},
      {"spam-rules",
       {[](const Ctx& c) {
          std::vector<fs::path> in{corpus_path(c)};
          for (const char* k : {"paths.rules_list1", "paths.rules_list2"}) {
            auto p = c.cfg.require_path(k);
            io::require_file(p, "spam rule list");
            in.push_back(p);
          }
          if (auto p = existing_path(c.cfg, "paths.frequent_allowlist", "frequent-text allowlist")) in.push_back(*p);
          return in;
        },
        run_spam_rules}},
      {"artm-grid", {corpus_only, run_artm_grid}},
      {"spam-train", {spam_train_inputs, run_spam_train}},
      {"spam-apply",
       {[](const Ctx& c) {
          auto in = embedding_inputs(c);
          in.push_back(corpus_path(c));
          in.push_back(c.need("spam/model.json", "spam model (run spam-train)"));
          in.push_back(c.need("spam/rule_verdicts.csv", "spam rule verdicts (run spam-rules)"));
          return in;
        },
        run_spam_apply}},
      {"llm-annotate", {llm_inputs, run_llm_annotate}},
      {"import-crowd", {import_inputs, run_import_crowd}},
      {"merge-labels",
       {[](const Ctx& c) {
          auto in = annotation_inputs(c, false);
          in.push_back(c.need("annotations/llm.csv", "LLM annotations (run llm-annotate)"));
          return in;
        },
        run_merge_labels}},
      {"alpha-report", {[](const Ctx& c) { return annotation_inputs(c, false); }, run_alpha_report}},
      {"confusion-report", {[](const Ctx& c) { return annotation_inputs(c, true); }, run_confusion_report}},
      {"al-select", {selection_inputs, run_al_select}},
      {"sample-users", {selection_inputs, run_sample_users}},
      {"assemble", {assemble_inputs, run_assemble}},
      {"train", {train_inputs, run_train}},
      {"evaluate", {evaluate_inputs, run_evaluate}},
      {"predict", {predict_inputs, run_predict}},
      {"report", {report_inputs, run_report}},
  };
  return table;
}

std::string rel_to(const fs::path& p, const fs::path& run) {
  const auto r = fs::relative(p, run);
  const auto s = r.generic_string();
  if (!s.empty() && s.rfind("..", 0) != 0) return s;
  return fs::absolute(p).lexically_normal().generic_string();
}

json hash_files(const std::vector<fs::path>& files, const fs::path& run) {
  json j = json::object();
  for (const auto& f : files) j[rel_to(f, run)] = io::sha256_file(f);
  return j;
}

}  // namespace

StageResult run_stage(const std::string& stage, Config cfg, const RunOptions& options) {
  const auto& table = stages();
  auto it = table.find(stage);
  if (it == table.end()) {
    throw InvalidArgument("unknown stage '" + stage + "' (expected one of: " + text::join(stage_names(), ", ") + ")");
  }
  if (options.seed) cfg.set("run.seed", std::to_string(*options.seed));
  std::ostream& log = options.log ? *options.log : std::cerr;
  const auto run = options.run_dir ? *options.run_dir : resolve_run_dir(cfg);
  fs::create_directories(run);

  Ctx ctx{cfg, run, io::derive_seed(cfg.seed(), stage), log, options.force, {}, json::object()};
  const auto inputs = it->second.inputs(ctx);
  const auto input_hashes = hash_files(inputs, run);

  const auto manifest_path = run / "manifest.json";
  json manifest = fs::exists(manifest_path) ? read_json(manifest_path, "run manifest") : json::object();
  if (!manifest.contains("stages")) manifest["stages"] = json::object();
  manifest["config_hash"] = cfg.hash();
  manifest["config"] = cfg.entries();
  manifest["version"] = VALDET_VERSION;

  StageResult result{stage, run, false, {}, json::object()};
  if (!options.force && manifest["stages"].contains(stage)) {
    const auto& entry = manifest["stages"][stage];
    bool outputs_present = true;
    const json recorded = entry.value("outputs", json::object());
    for (const auto& [rel, _] : recorded.items()) {
      outputs_present &= fs::exists(run / rel);
    }
    if (entry.value("inputs", json::object()) == input_hashes && outputs_present) {
      log << stage << ": inputs unchanged, nothing to do (use --force to rerun)\n";
      result.skipped = true;
      result.summary = entry.value("summary", json::object());
      for (const auto& [rel, _] : recorded.items()) result.outputs.push_back(run / rel);
      return result;
    }
  }

  log << stage << ": running in " << run.string() << "\n";
  it->second.run(ctx);

  json entry{{"inputs", input_hashes},
             {"outputs", hash_files(ctx.outputs, run)},
             {"seed", ctx.seed},
             {"global_seed", cfg.seed()},
             {"version", VALDET_VERSION},
             {"summary", ctx.summary}};
  manifest["stages"][stage] = std::move(entry);
  io::write_file(manifest_path, manifest.dump(2) + "\n");
  result.outputs = ctx.outputs;
  result.summary = ctx.summary;
  return result;
}

}  // namespace valdet::pipeline
