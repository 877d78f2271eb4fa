#include "synth.hpp"

#include <atomic>
#include <set>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "valdet/io.hpp"
#include "valdet/text.hpp"

namespace valdet::testkit {

namespace {

const char* const kConsonants[] = {"б", "в", "г", "д", "ж", "з", "к", "л", "м", "н",
                                   "п", "р", "с", "т", "ф", "х", "ц", "ч", "ш"};
const char* const kVowels[] = {"а", "е", "и", "о", "у", "ы", "э", "ю", "я"};

std::string join_words(const std::vector<std::string>& words) { return text::join(words, " "); }

}  // namespace

std::string cyrillic_word(std::mt19937_64& rng, std::size_t syllables) {
  std::uniform_int_distribution<std::size_t> c(0, std::size(kConsonants) - 1), v(0, std::size(kVowels) - 1);
  std::string w;
  for (std::size_t i = 0; i < syllables; ++i) {
    w += kConsonants[c(rng)];
    w += kVowels[v(rng)];
  }
  return w;
}

std::vector<std::string> lexicon(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::set<std::string> seen;
  std::vector<std::string> out;
  std::uniform_int_distribution<std::size_t> syl(2, 4);
  while (out.size() < n) {
    auto w = cyrillic_word(rng, syl(rng));
    if (seen.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

fs::path scratch_dir(const std::string& name) {
  static std::atomic<int> counter{0};
  auto dir = fs::temp_directory_path() /
             ("valdet-" + name + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

SpamFixture make_spam_corpus(std::size_t n, double spam_fraction, double rule_hit, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto words = lexicon(460, seed ^ 0xabcdef);
  const std::vector<std::string> common(words.begin(), words.begin() + 60);
  const std::vector<std::string> ham(words.begin() + 60, words.begin() + 400);
  const std::vector<std::string> spam(words.begin() + 400, words.end());
  SpamFixture fx;
  for (std::size_t i = 0; i < 5; ++i) fx.list1.push_back(spam[2 * i] + "_" + spam[2 * i + 1]);

  std::bernoulli_distribution is_spam(spam_fraction), hit(rule_hit), from_topic(0.7);
  std::uniform_int_distribution<std::size_t> len(8, 20), pick_common(0, common.size() - 1),
      pick_ham(0, ham.size() - 1), pick_spam(10, spam.size() - 1), pick_rule(0, fx.list1.size() - 1);
  std::vector<corpus::Post> posts;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = is_spam(rng);
    std::vector<std::string> ws;
    const auto L = len(rng);
    for (std::size_t k = 0; k < L; ++k) {
      if (!from_topic(rng)) ws.push_back(common[pick_common(rng)]);
      else ws.push_back(y ? spam[pick_spam(rng)] : ham[pick_ham(rng)]);
    }
    if (y && hit(rng)) {
      const auto parts = text::split(fx.list1[pick_rule(rng)], '_');
      std::uniform_int_distribution<std::size_t> at(0, ws.size());
      ws.insert(ws.begin() + static_cast<std::ptrdiff_t>(at(rng)), parts.begin(), parts.end());
    }
    const auto id = "s" + std::to_string(i);
    posts.push_back(corpus::make_post(id, "u" + std::to_string(i % 500), join_words(ws)));
    fx.data.truth[id] = y;
  }
  fx.data.corpus = corpus::Corpus(std::move(posts));
  return fx;
}

LabeledCorpus make_value_corpus(std::size_t n, std::size_t users, double signal, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto words = lexicon(700, seed ^ 0x5eed);
  const std::vector<std::string> neutral(words.begin(), words.begin() + 600);
  const std::vector<std::string> value(words.begin() + 600, words.begin() + 650);
  const std::vector<std::string> plain(words.begin() + 650, words.end());
  std::bernoulli_distribution is_value(0.35), use_signal(signal);
  std::uniform_int_distribution<std::size_t> len(10, 30), pick_n(0, neutral.size() - 1),
      pick_v(0, value.size() - 1), pick_p(0, plain.size() - 1), pick_user(0, users - 1);
  LabeledCorpus out;
  std::vector<corpus::Post> posts;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = is_value(rng);
    std::vector<std::string> ws;
    const auto L = len(rng);
    for (std::size_t k = 0; k < L; ++k) {
      if (use_signal(rng)) ws.push_back(y ? value[pick_v(rng)] : plain[pick_p(rng)]);
      else ws.push_back(neutral[pick_n(rng)]);
    }
    const auto id = "v" + std::to_string(i);
    // Users are assigned so that every user id appears at least once.
    const auto user = i < users ? i : pick_user(rng);
    posts.push_back(corpus::make_post(id, "user" + std::to_string(user), join_words(ws)));
    out.truth[id] = y;
  }
  out.corpus = corpus::Corpus(std::move(posts));
  return out;
}

topic::DocTermMatrix two_block_matrix(std::size_t docs, std::size_t terms, std::size_t doc_len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  topic::DocTermMatrix m;
  for (std::size_t w = 0; w < terms; ++w) {
    m.vocabulary.push_back((w < terms / 2 ? "a" : "b") + std::to_string(1000 + w));
  }
  const auto half = terms / 2;
  std::uniform_int_distribution<std::size_t> pick(0, half - 1);
  for (std::size_t d = 0; d < docs; ++d) {
    const std::size_t offset = d < docs / 2 ? 0 : half;
    std::map<std::size_t, double> counts;
    for (std::size_t k = 0; k < doc_len; ++k) counts[offset + pick(rng)] += 1.0;
    std::vector<topic::DocTermMatrix::Entry> entries;
    for (const auto& [t, c] : counts) entries.push_back({t, c});
    m.docs.push_back(std::move(entries));
    m.doc_ids.push_back("d" + std::to_string(d));
  }
  return m;
}

ml::Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed, double noise) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd w(d);
  for (std::size_t j = 0; j < d; ++j) w[j] = g(rng);
  ml::Dataset ds;
  ds.features.resize(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) ds.features(i, j) = g(rng);
    const double s = ds.features.row(i).dot(w) + noise * g(rng);
    ds.labels.push_back(s > 0 ? 1 : 0);
    ds.ids.push_back("r" + std::to_string(i));
  }
  // Both classes guaranteed.
  ds.labels[0] = 0;
  ds.labels[1] = 1;
  return ds;
}

PipelineFixture write_pipeline_fixture(const fs::path& dir, std::size_t value_posts, std::size_t spam_posts,
                                       std::size_t users, double signal, std::uint64_t seed,
                                       const std::string& extra_config) {
  PipelineFixture fx;
  fx.dir = dir;
  fs::create_directories(dir);
  const auto values = make_value_corpus(value_posts, users, signal, seed);
  std::mt19937_64 rng(seed ^ 0x77);
  const auto spam_words = lexicon(80, seed ^ 0x5ba3);
  std::vector<std::string> list1;
  for (std::size_t i = 0; i < 4; ++i) list1.push_back(spam_words[2 * i] + "_" + spam_words[2 * i + 1]);
  std::uniform_int_distribution<std::size_t> len(12, 25), pick(8, spam_words.size() - 1), rule(0, list1.size() - 1),
      pick_user(0, users - 1);

  nlohmann::json by_content = nlohmann::json::object();
  std::string posts, crowd = "post_id,annotator_id,label\n";
  std::bernoulli_distribution noisy(0.1);
  const auto add = [&](const std::string& id, const std::string& user, const std::string& text, const char* llm,
                       const char* label) {
    posts += nlohmann::json{{"id", id}, {"user_id", user}, {"text", text}}.dump() + "\n";
    by_content[text] = nlohmann::json::array({llm});
    for (const char* who : {"crowd_a", "crowd_b", "crowd_c"}) {
      crowd += io::csv_line({id, who, noisy(rng) ? "Unclear" : label});
    }
  };
  for (const auto& p : values.corpus) {
    const int y = values.truth.at(p.id);
    fx.value_truth[p.id] = y;
    add(p.id, p.user_id, p.text, y ? "Reflects values" : "Doesn't reflect values", y ? "Reflects" : "DoesntReflect");
  }
  for (std::size_t i = 0; i < spam_posts; ++i) {
    std::vector<std::string> ws;
    const auto L = len(rng);
    for (std::size_t k = 0; k < L; ++k) ws.push_back(spam_words[pick(rng)]);
    const auto parts = text::split(list1[rule(rng)], '_');
    ws.insert(ws.begin() + static_cast<std::ptrdiff_t>(rng() % ws.size()), parts.begin(), parts.end());
    const auto id = "spam" + std::to_string(i);
    fx.spam_ids.insert(id);
    add(id, "user" + std::to_string(pick_user(rng)), join_words(ws), "Spam", "Spam");
  }
  io::write_file(dir / "posts.jsonl", posts);
  io::write_file(dir / "crowd.csv", crowd);
  io::write_file(dir / "llm_fixture.json", nlohmann::json{{"by_content", by_content}, {"default", {"Unclear"}}}.dump());
  io::write_file(dir / "list1.txt", text::join(list1, "\n") + "\n");
  io::write_file(dir / "list2.txt", "# phrases that count as spam only next to a link\nпереходи_сюда\n");

  fx.config = dir / "config.ini";
  io::write_file(fx.config, "[run]\nseed = " + std::to_string(seed) + "\nroot = runs\n\n"
                            "[paths]\nposts = posts.jsonl\nrules_list1 = list1.txt\nrules_list2 = list2.txt\n"
                            "crowd_annotations = crowd.csv\nllm_fixture = llm_fixture.json\n\n"
                            "[llm]\nbackoff_ms = 1\n\n" + extra_config);
  return fx;
}

}  // namespace valdet::testkit
