// Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "synth.hpp"
#include "valdet/activeloop.hpp"
#include "valdet/alpha.hpp"
#include "valdet/annotations.hpp"
#include "valdet/crossval.hpp"
#include "valdet/embed.hpp"
#include "valdet/io.hpp"
#include "valdet/linear.hpp"
#include "valdet/logitboost.hpp"
#include "valdet/metrics.hpp"
#include "valdet/pipeline.hpp"
#include "valdet/spamrules.hpp"
#include "valdet/topicmodel.hpp"
#include "valdet/weaklabel.hpp"

using namespace valdet;
using annot::Label;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum class Outcome { Pass, Fail, Skip };

struct Verdict {
  Outcome outcome = Outcome::Pass;
  std::string detail;
};

// Collects failed sub-checks; the first few are reported.
struct Checker {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  Verdict verdict(const std::string& summary) const {
    if (failures.empty()) return {Outcome::Pass, summary};
    std::string d = summary + "; failed: ";
    for (std::size_t i = 0; i < failures.size() && i < 3; ++i) d += (i ? " | " : "") + failures[i];
    if (failures.size() > 3) d += " (+" + std::to_string(failures.size() - 3) + " more)";
    return {Outcome::Fail, d};
  }
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << std::fixed << v;
  return s.str();
}

// 1. Krippendorff's alpha against the pair-enumeration oracle.
Verdict alpha_oracle() {
  Checker c;
  const auto worked = annot::krippendorff_alpha_units({{0, 0}, {1, 1}, {0, 1}, {1, 0}});
  c.expect(std::abs(worked.alpha - 0.125) < 1e-12, "worked example alpha " + fmt(worked.alpha, 12));

  // Units: every multiset of up to 3 codes over 3 categories. Fixtures: every
  // multiset of 1..4 such units.
  std::vector<std::vector<int>> units{{}};
  for (int a = 0; a < 3; ++a) {
    units.push_back({a});
    for (int b = a; b < 3; ++b) {
      units.push_back({a, b});
      for (int d = b; d < 3; ++d) units.push_back({a, b, d});
    }
  }
  std::size_t fixtures = 0;
  double worst = 0.0;
  std::vector<std::size_t> idx;
  std::function<void(std::size_t)> walk = [&](std::size_t start) {
    if (!idx.empty()) {
      std::vector<std::vector<int>> fx;
      for (auto i : idx) fx.push_back(units[i]);
      // Also run through the record-based entry point.
      std::vector<annot::AnnotationRecord> recs;
      for (std::size_t u = 0; u < fx.size(); ++u)
        for (std::size_t k = 0; k < fx[u].size(); ++k)
          recs.push_back({"u" + std::to_string(u), annot::Source::Crowd, "c" + std::to_string(k),
                          annot::kAssignableLabels[fx[u][k]], 0});
      const auto o = testkit::alpha_by_pairs(fx);
      if (o.defined) {
        const auto r = annot::krippendorff_alpha(recs);
        worst = std::max({worst, std::abs(r.alpha - o.alpha), std::abs(r.observed_disagreement - o.d_o),
                          std::abs(r.expected_disagreement - o.d_e)});
      }
      ++fixtures;
    }
    if (idx.size() == 4) return;
    for (std::size_t i = start; i < units.size(); ++i) {
      idx.push_back(i);
      walk(i);
      idx.pop_back();
    }
  };
  walk(0);
  c.expect(worst <= 1e-12, "max deviation " + std::to_string(worst));
  return c.verdict(std::to_string(fixtures) + " fixtures, max deviation " + std::to_string(worst) +
                   ", worked example " + fmt(worked.alpha, 6));
}

// 2. Final-label combination rule, exhaustively.
Verdict combination_rule() {
  Checker c;
  // LLM passes producing each base majority; the last one has no 2-of-3
  // majority and therefore acts as NotAssigned.
  const std::vector<std::pair<std::string, std::vector<Label>>> bases{
      {"Reflects", {Label::Reflects, Label::Reflects, Label::Reflects}},
      {"DoesntReflect", {Label::DoesntReflect, Label::DoesntReflect, Label::DoesntReflect}},
      {"Unclear", {Label::Unclear, Label::Unclear, Label::Unclear}},
      {"NotAssigned", {Label::Reflects, Label::Spam, Label::Unclear}}};
  std::vector<annot::AnnotationRecord> llm, crowd;
  struct Case {
    std::string id;
    Label base;
    Label a, b, d;
  };
  std::vector<Case> cases;
  for (const auto& [name, passes] : bases) {
    for (Label a : annot::kAllLabels)
      for (Label b : annot::kAllLabels)
        for (Label d : annot::kAllLabels) {
          const std::string id = name + "-" + annot::to_string(a) + "-" + annot::to_string(b) + "-" + annot::to_string(d);
          for (std::size_t p = 0; p < 3; ++p) llm.push_back({id, annot::Source::Llm, "llm", passes[p], p + 1});
          const Label triple[] = {a, b, d};
          for (std::size_t k = 0; k < 3; ++k)
            crowd.push_back({id, annot::Source::Crowd, "crowd" + std::to_string(k), triple[k], 0});
          cases.push_back({id, annot::majority_of(passes), a, b, d});
        }
  }
  const auto finals = annot::combine_final(llm, crowd);
  std::map<std::string, annot::FinalLabel> by_id;
  for (const auto& f : finals) by_id[f.post_id] = f;
  c.expect(finals.size() == cases.size(), "expected " + std::to_string(cases.size()) + " final labels");
  const auto merge = annot::default_merge_map();
  for (const auto& k : cases) {
    const auto it = by_id.find(k.id);
    if (it == by_id.end()) {
      c.expect(false, "missing " + k.id);
      continue;
    }
    const auto votes = [&](Label l) { return (k.a == l) + (k.b == l) + (k.d == l); };
    Label want = annot::apply_merge(k.base, merge);
    if (votes(Label::Spam) >= 2) want = Label::Spam;
    else if (votes(Label::Reflects) >= 2) want = Label::Reflects;
    else if (votes(Label::DoesntReflect) == 3) want = Label::DoesntReflect;
    const Label got = it->second.final_label;
    c.expect(got == want, k.id + " -> " + annot::to_string(got));
    c.expect(got != Label::Unclear && got != Label::NotAssigned, k.id + " emitted " + annot::to_string(got));
  }
  return c.verdict(std::to_string(cases.size()) + " (base, crowd triple) cases");
}

// 3. Topic model properties on planted blocks.
Verdict artm_properties() {
  Checker c;
  const auto m = testkit::two_block_matrix(200, 60, 30, 2024);
  const auto schedule = topic::RegularizerSchedule::spam_phrase_default();
  double worst_sum = 0.0, min_block = 1.0;
  bool zero_ok = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::vector<double> phi_zero;
    topic::ArtmOptions opts;
    opts.observer = [&](const topic::IterationInfo& info) {
      for (Eigen::Index t = 0; t < info.model.phi.cols(); ++t)
        worst_sum = std::max(worst_sum, std::abs(info.model.phi.col(t).sum() - 1.0));
      for (Eigen::Index d = 0; d < info.model.theta.cols(); ++d)
        worst_sum = std::max(worst_sum, std::abs(info.model.theta.col(d).sum() - 1.0));
      phi_zero.push_back(topic::zero_fraction(info.model.phi));
    };
    const auto r = topic::fit_artm(m, 2, schedule, seed, opts);
    std::set<int> blocks;
    for (Eigen::Index t = 0; t < 2; ++t) {
      const double a = r.model.phi.col(t).head(30).sum();
      blocks.insert(a >= 0.5 ? 0 : 1);
      min_block = std::min(min_block, std::max(a, 1.0 - a));
    }
    c.expect(blocks.size() == 2, "seed " + std::to_string(seed) + ": both topics on one block");
    // The sparse phase starts after the decorrelation iterations.
    const auto start = schedule.phases[0].iterations;
    for (std::size_t i = start; i < phi_zero.size(); ++i)
      zero_ok &= phi_zero[i] >= phi_zero[i - 1];
  }
  c.expect(min_block >= 0.95, "block mass " + fmt(min_block));
  c.expect(worst_sum <= 1e-9, "column sum deviation " + std::to_string(worst_sum));
  c.expect(zero_ok, "Phi zero fraction decreased during the sparse phase");

  double worst_drop = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::vector<double> ll;
    topic::ArtmOptions opts;
    opts.observer = [&](const topic::IterationInfo& info) { ll.push_back(info.log_likelihood); };
    topic::fit_artm(m, 3, topic::RegularizerSchedule::plain_em(40), seed, opts);
    for (std::size_t i = 1; i < ll.size(); ++i) worst_drop = std::max(worst_drop, ll[i - 1] - ll[i]);
  }
  c.expect(worst_drop <= 1e-9, "log-likelihood dropped by " + std::to_string(worst_drop));
  return c.verdict("min block mass " + fmt(min_block) + ", column sum deviation " + std::to_string(worst_sum) +
                   ", max log-likelihood drop " + std::to_string(std::max(0.0, worst_drop)));
}

// 4. Classifier numerics.
Verdict classifier_numerics() {
  Checker c;
  double worst_grad = 0.0;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto ds = testkit::random_dataset(50, 6, s);
    std::mt19937_64 rng(s + 100);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int point = 0; point < 10; ++point) {
      Eigen::VectorXd w(6);
      for (int j = 0; j < 6; ++j) w(j) = g(rng);
      const double b = g(rng), lambda = 0.1, h = 1e-5;
      const auto grad = ml::logreg_gradient(ds, w, b, lambda);
      Eigen::VectorXd an(7), num(7);
      an << grad.weights, grad.bias;
      for (int j = 0; j < 7; ++j) {
        Eigen::VectorXd wp = w, wm = w;
        double bp = b, bm = b;
        if (j < 6) wp(j) += h, wm(j) -= h;
        else bp += h, bm -= h;
        num(j) = (ml::logreg_objective(ds, wp, bp, lambda) - ml::logreg_objective(ds, wm, bm, lambda)) / (2 * h);
      }
      worst_grad = std::max(worst_grad, (an - num).norm() / num.norm());
    }
  }
  c.expect(worst_grad < 1e-5, "gradient relative error " + std::to_string(worst_grad));

  double worst_rise = 0.0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto ds = testkit::random_dataset(100, 4, s, 1.0);
    std::vector<double> trace;
    ml::train_logitboost(ds, {100}, s, &trace);
    for (std::size_t i = 1; i < trace.size(); ++i) worst_rise = std::max(worst_rise, trace[i] - trace[i - 1]);
  }
  c.expect(worst_rise <= 1e-9, "LogitBoost loss rose by " + std::to_string(worst_rise));

  const auto fx = testkit::svm_reference_fixture();
  const double lambda = 0.1;
  const double grid = testkit::svm_grid_minimum(fx.features, fx.labels, lambda, 0.01);
  const auto svm = ml::train_linear_svm(fx, {lambda, 500, 3}, 1);
  const double obj = ml::svm_objective(fx, svm.weights, svm.bias, lambda);
  c.expect(obj <= grid * 1.01, "svm objective " + fmt(obj, 6) + " vs grid " + fmt(grid, 6));

  double worst_metric = 0.0;
  std::mt19937_64 rng(77);
  for (int f = 0; f < 100; ++f) {
    const std::size_t n = 1 + rng() % 200, k = 2 + rng() % 4;
    std::vector<int> classes(k), y(n), p(n);
    std::iota(classes.begin(), classes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng() % k);
      p[i] = rng() % 2 ? y[i] : static_cast<int>(rng() % k);
    }
    const auto r = ml::compute_metrics(y, p, classes);
    const auto o = testkit::metrics_by_pair_counts(y, p, classes);
    for (std::size_t i = 0; i < k; ++i) {
      worst_metric = std::max({worst_metric, std::abs(r.precision[i] - o.precision[i]),
                               std::abs(r.recall[i] - o.recall[i]), std::abs(r.f1[i] - o.f1[i])});
    }
    worst_metric = std::max({worst_metric, std::abs(r.f1_macro - o.macro), std::abs(r.accuracy - o.accuracy)});
    const auto cm = ml::confusion_matrix(y, p, classes);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) {
        double count = 0;
        for (std::size_t i = 0; i < n; ++i) count += y[i] == classes[a] && p[i] == classes[b];
        worst_metric = std::max(worst_metric, std::abs(cm.counts(static_cast<Eigen::Index>(a),
                                                                 static_cast<Eigen::Index>(b)) - count));
      }
  }
  c.expect(worst_metric <= 1e-12, "metrics deviate by " + std::to_string(worst_metric));
  return c.verdict("grad rel err " + std::to_string(worst_grad) + ", svm " + fmt(obj, 6) + " vs grid " +
                   fmt(grid, 6) + ", metrics max deviation " + std::to_string(worst_metric));
}

// 5. Spam rules on a crafted corpus.
Verdict spam_rule_fixture() {
  auto post = [](const std::string& id, const std::string& text, std::size_t occurrences = 1) {
    auto p = corpus::make_post(id, "u-" + id, text);
    p.occurrences = occurrences;
    return p;
  };
  std::vector<corpus::Post> posts{
      post("p01", "Заходи и играй в play zonk каждый день"),
      post("p02", "вступай в группа друзей сегодня"),
      post("p03", "вступай группа по ссылке vk.com/club42"),
      post("p04", "смотри фото тут vk.com/photo1 красиво"),
      post("p05", "Доброе утро!"),
      post("p06", "доброе утро!"),
      post("p07", "Доброе   утро!"),
      post("p08", "ДОБРОЕ УТРО!"),
      post("p09", " Доброе утро! "),
      post("p10", "доброе\tутро!"),
      post("p11", "С днём рождения!", 7),
      post("p12", "сегодня гуляли в парке с детьми"),
  };
  spam::BigramRuleSet rules;
  rules.list1 = {"play_zonk"};
  rules.list2 = {"вступай_группа"};
  rules.frequent_text_allowlist = {text::normalize_for_dedup("С днём рождения!")};
  const std::vector<std::pair<bool, spam::RuleStep>> expected{
      {true, spam::RuleStep::BigramsList1},  {false, spam::RuleStep::None},
      {true, spam::RuleStep::BigramsList2Link}, {true, spam::RuleStep::Links},
      {true, spam::RuleStep::FrequentText},  {true, spam::RuleStep::FrequentText},
      {true, spam::RuleStep::FrequentText},  {true, spam::RuleStep::FrequentText},
      {true, spam::RuleStep::FrequentText},  {true, spam::RuleStep::FrequentText},
      {false, spam::RuleStep::None},         {false, spam::RuleStep::None}};
  const auto got = spam::apply_rules(corpus::Corpus(posts), rules);
  Checker c;
  c.expect(got.size() == expected.size(), "verdict count " + std::to_string(got.size()));
  for (std::size_t i = 0; i < std::min(got.size(), expected.size()); ++i) {
    c.expect(got[i].post_id == posts[i].id && got[i].is_spam == expected[i].first &&
                 got[i].step == expected[i].second,
             posts[i].id + " -> " + spam::to_string(got[i].step));
  }
  return c.verdict("12-post verdict table");
}

// 6. Weakly supervised spam model on a generative corpus.
Verdict weak_supervision() {
  const auto fx = testkit::make_spam_corpus(2000, 0.3, 0.85, 606);
  spam::BigramRuleSet rules;
  rules.list1 = {fx.list1.begin(), fx.list1.end()};
  const auto noisy_all = weak::from_verdicts(spam::apply_rules(fx.data.corpus, rules));

  std::size_t missed = 0, spam_total = 0, false_hits = 0;
  for (const auto& [id, y] : fx.data.truth) {
    spam_total += y;
    missed += y && !noisy_all.at(id);
    false_hits += !y && noisy_all.at(id);
  }

  auto ids = fx.data.corpus.ids();
  std::mt19937_64 rng(606);
  std::shuffle(ids.begin(), ids.end(), rng);
  weak::LabelMap gold, noisy;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i < 300) gold[ids[i]] = fx.data.truth.at(ids[i]);
    else noisy[ids[i]] = noisy_all.at(ids[i]);
  }
  const auto emb = embed::hash_embed(fx.data.corpus, 512, 606);
  const auto stage = weak::train_noisy_stage(emb, noisy, 0.8, 606);
  const auto edit = weak::edit_labels(noisy, ml::Model(stage.model), emb, 0.9);
  const auto sel = weak::select_best_spam_model(edit.labels, emb, gold, 606);
  double best_f1 = 0.0;
  std::string per_kind;
  for (const auto& cand : sel.candidates) {
    per_kind += std::string(per_kind.empty() ? "" : ", ") + ml::to_string(cand.kind) + " " + fmt(cand.metrics.f1_of(1), 3);
    if (cand.kind == sel.best_kind) best_f1 = cand.metrics.f1_of(1);
  }
  // Reported only: spam recall of the noisy versus edited labels.
  std::size_t noisy_hits = 0, edited_hits = 0, spam_in_train = 0;
  for (const auto& [id, y] : noisy) {
    if (!fx.data.truth.at(id)) continue;
    ++spam_in_train;
    noisy_hits += y;
    edited_hits += edit.labels.at(id);
  }
  Checker c;
  c.expect(best_f1 >= 0.90, "selected model spam F1 " + fmt(best_f1, 4));
  return c.verdict("rule misses " + std::to_string(missed) + "/" + std::to_string(spam_total) + " spam (" +
                   std::to_string(false_hits) + " false hits), " + std::to_string(edit.ledger.entries.size()) +
                   " auto edits, label recall " + fmt(static_cast<double>(noisy_hits) / spam_in_train, 3) + " -> " +
                   fmt(static_cast<double>(edited_hits) / spam_in_train, 3) + "; gold F1 " + per_kind +
                   "; selected " + ml::to_string(sel.best_kind) + " " + fmt(best_f1, 4));
}

// 7. Whole value pipeline through the stage runner, twice.
Verdict value_pipeline() {
  const std::string extra =
      "[al]\ninitial_random = 400\nuncertainty_batches = 400\nuser_sample = 200\nselector_lambda = 0.1\n\n"
      "[embed]\ndim = 512\n\n"
      "[train]\nfolds = 5\nmetric = f1_class1\n";
  const std::vector<std::string> stages{"ingest",       "clean",        "spam-rules",   "spam-train",
                                        "spam-apply",   "al-select",    "llm-annotate", "import-crowd",
                                        "merge-labels", "al-select",    "llm-annotate", "merge-labels",
                                        "sample-users", "llm-annotate", "merge-labels", "assemble",
                                        "train",        "evaluate"};
  Checker c;
  std::vector<std::string> metrics;
  double best_f1 = 0.0;
  std::string best_kind;
  std::size_t assembled = 0, in_band = 0, out_band = 0;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto dir = testkit::scratch_dir("acceptance-value");
    const auto fx = testkit::write_pipeline_fixture(dir, 4000, 400, 1200, 0.35, 707, extra);
    const auto cfg = pipeline::Config::load(fx.config);
    std::ostringstream log;
    pipeline::RunOptions opts;
    opts.log = &log;
    fs::path run_dir;
    for (const auto& s : stages) run_dir = pipeline::run_stage(s, cfg, opts).run_dir;
    std::vector<al::RoundManifest> rounds;
    for (const auto& e : fs::directory_iterator(run_dir / "rounds")) {
      const auto name = e.path().filename().string();
      if (name.rfind("round-", 0) == 0 && e.path().extension() == ".json" && name.find("export") == std::string::npos)
        rounds.push_back(al::load_round(e.path()));
    }
    std::sort(rounds.begin(), rounds.end(), [](const auto& a, const auto& b) { return a.round < b.round; });
    c.expect(rounds.size() == 3, std::to_string(rounds.size()) + " rounds");
    if (rounds.size() == 3) {
      c.expect(rounds[0].method == al::SelectionMethod::Random && rounds[0].ids.size() == 400, "round 1 not random 400");
      c.expect(rounds[1].method == al::SelectionMethod::Uncertainty && rounds[1].ids.size() == 400,
               "round 2 has " + std::to_string(rounds[1].ids.size()) + " uncertainty posts");
      c.expect(rounds[2].method == al::SelectionMethod::UserBalanced && rounds[2].ids.size() == 200,
               "round 3 not user-balanced 200");
    }
    for (const auto& r : rounds) {
      for (double p : r.probabilities) (p >= 0.3 && p <= 0.7 ? in_band : out_band)++;
      c.expect(r.method != al::SelectionMethod::Uncertainty || r.probabilities.size() == r.ids.size(),
               "uncertainty round without stored probabilities");
    }
    const auto m = json::parse(io::read_file(run_dir / "metrics.json"));
    best_f1 = m["best"]["cv_mean"].get<double>();
    best_kind = m["best"]["kind"].get<std::string>();
    assembled = m["best"]["training_posts"].get<std::size_t>();
    metrics.push_back(io::read_file(run_dir / "metrics.json"));
  }
  c.expect(out_band == 0, std::to_string(out_band) + " stored probabilities outside [0.3, 0.7]");
  c.expect(assembled == 1000, "assembled " + std::to_string(assembled) + " posts");
  c.expect(best_f1 >= 0.80, "best CV F1 " + fmt(best_f1));
  c.expect(metrics[0] == metrics[1], "metrics.json differs between identical runs");
  return c.verdict("assembled " + std::to_string(assembled) + ", best " + best_kind + " CV F1(class 1) " +
                   fmt(best_f1) + ", " + std::to_string(in_band) + " stored probabilities in band, runs identical: " +
                   (metrics[0] == metrics[1] ? "yes" : "no"));
}

// 8. Published annotations and embeddings, when available. The directory
// named by VALDET_PUBLISHED_DATA must hold final_labels.csv (post_id,
// final_label) and embeddings.csv or embeddings.bin with 312 columns.
Verdict published_data() {
  const char* env = std::getenv("VALDET_PUBLISHED_DATA");
  const fs::path dir = env && *env ? fs::path(env) : fs::path(VALDET_SOURCE_DIR) / "data" / "published";
  const auto labels_path = dir / "final_labels.csv";
  fs::path emb_path = dir / "embeddings.bin";
  if (!fs::exists(emb_path)) emb_path = dir / "embeddings.csv";
  if (!fs::exists(labels_path) || !fs::exists(emb_path)) {
    return {Outcome::Skip, "no published data in " + dir.string()};
  }
  const auto emb = embed::load_embeddings(emb_path, 312);
  std::map<std::string, Label> labels;
  for (const auto& f : annot::read_final_labels_csv(labels_path)) labels[f.post_id] = f.final_label;
  ml::Dataset ds;
  std::vector<std::string> ids;
  for (const auto& [id, l] : labels) {
    if (!emb.contains(id)) continue;
    ids.push_back(id);
    ds.labels.push_back(al::binary_value_label(annot::apply_merge(l, annot::default_merge_map())));
  }
  ds.features = emb.rows(ids);
  ds.ids = ids;
  const auto cv = ml::cross_validate_grid(ds, ml::ModelKind::Svm, ml::default_grid(ml::ModelKind::Svm), 5,
                                          ml::TargetMetric::F1Positive, 0);
  const auto& best = cv.best_config();
  // F1-macro for the chosen configuration over the same folds.
  const auto macro_cv = ml::cross_validate_grid(ds, ml::ModelKind::Svm, {best.params}, 5, ml::TargetMetric::F1Macro, 0);
  const double f1 = best.mean, macro = macro_cv.best_config().mean;
  Checker c;
  c.expect(std::abs(f1 - 0.768) <= 0.05, "F1(Reflects) " + fmt(f1));
  c.expect(std::abs(macro - 0.826) <= 0.05, "F1-macro " + fmt(macro));
  return c.verdict(std::to_string(ds.size()) + " posts, F1(Reflects) " + fmt(f1) + ", F1-macro " + fmt(macro));
}

struct Criterion {
  int number;
  std::string name;
  double time_limit_s;  // 0: none
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "alpha oracle equivalence", 10, alpha_oracle},
      {2, "combination rule exhaustive check", 1, combination_rule},
      {3, "topic model properties", 30, artm_properties},
      {4, "classifier numerics", 0, classifier_numerics},
      {5, "spam rule fixture", 0, spam_rule_fixture},
      {6, "weak-supervision spam benchmark", 120, weak_supervision},
      {7, "end-to-end value pipeline", 300, value_pipeline},
      {8, "published-data reproduction", 0, published_data},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = cr.run();
    } catch (const std::exception& e) {
      v = {Outcome::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (v.outcome == Outcome::Pass && cr.time_limit_s > 0 && secs >= cr.time_limit_s) {
      v = {Outcome::Fail, v.detail + "; took " + fmt(secs, 1) + " s, limit " + fmt(cr.time_limit_s, 0) + " s"};
    }
    const char* tag = v.outcome == Outcome::Pass ? "PASS" : v.outcome == Outcome::Fail ? "FAIL" : "SKIP";
    std::cout << tag << " " << cr.number << " " << cr.name << " (" << fmt(secs, 2) << " s): " << v.detail << std::endl;
    failed += v.outcome == Outcome::Fail;
  }
  return failed == 0 ? 0 : 1;
}
