#include <gtest/gtest.h>

#include <sstream>

#include "synth.hpp"
#include "valdet/activeloop.hpp"
#include "valdet/error.hpp"
#include "valdet/io.hpp"
#include "valdet/pipeline.hpp"

using namespace valdet;
using pipeline::Config;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* kSmallRun =
    "[al]\ninitial_random = 150\nuncertainty_batches = 100\nuser_sample = 60\nselector_lambda = 0.3\n\n"
    "[embed]\ndim = 128\n\n"
    "[train]\nkinds = logreg,svm\nlambdas = 0.001,0.01\nfolds = 3\n\n"
    "[spam]\nboost_rounds = 30\n";

pipeline::StageResult run(const std::string& stage, const Config& cfg, std::ostream& log, bool force = false) {
  pipeline::RunOptions o;
  o.log = &log;
  o.force = force;
  return pipeline::run_stage(stage, cfg, o);
}

const std::vector<std::string> kFullRun{"ingest",       "clean",        "spam-rules",   "spam-train",
                                        "spam-apply",   "al-select",    "llm-annotate", "import-crowd",
                                        "merge-labels", "al-select",    "llm-annotate", "merge-labels",
                                        "sample-users", "llm-annotate", "merge-labels", "alpha-report",
                                        "assemble",     "train",        "evaluate",     "predict",
                                        "report"};

}  // namespace

TEST(Config, ParseAccessorsAndHash) {
  const auto cfg = Config::parse("[run]\nseed = 7\n[train]\nkinds = svm, logreg,\nfolds=4\n[paths]\nposts = in/p.jsonl\n",
                                 "/data/base");
  EXPECT_EQ(cfg.seed(), 7u);
  EXPECT_EQ(cfg.get_list("train.kinds"), (std::vector<std::string>{"svm", "logreg"}));
  EXPECT_EQ(cfg.get_size("train.folds", 5), 4u);
  EXPECT_EQ(cfg.get_size("train.missing", 5), 5u);
  EXPECT_EQ(*cfg.path("paths.posts"), fs::path("/data/base/in/p.jsonl"));
  EXPECT_FALSE(cfg.path("paths.nothing"));
  try {
    cfg.require_path("paths.crowd_annotations");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("paths.crowd_annotations"), std::string::npos);
  }
  auto other = cfg;
  EXPECT_EQ(other.hash(), cfg.hash());
  EXPECT_EQ(cfg.hash().size(), 12u);
  other.set("run.seed", "8");
  EXPECT_NE(other.hash(), cfg.hash());
  EXPECT_THROW(Config::parse("[run]\nseed = abc\n", ".").seed(), Error);
}

TEST(Pipeline, UnknownStage) {
  try {
    pipeline::run_stage("fly", Config::parse("", "."));
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("assemble"), std::string::npos);
  }
  EXPECT_EQ(pipeline::stage_names().size(), 18u);
}

TEST(Pipeline, TrainBeforeAssembleNamesMissingArtifact) {
  const auto dir = testkit::scratch_dir("pipe-missing");
  auto cfg = Config::parse("[run]\nseed = 1\n", dir);
  std::ostringstream log;
  pipeline::RunOptions o;
  o.log = &log;
  o.run_dir = dir / "run";
  try {
    pipeline::run_stage("train", cfg, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("dataset/features.bin"), std::string::npos) << e.what();
  }
}

TEST(Pipeline, CleanOutputsAndNoOpRerun) {
  const auto dir = testkit::scratch_dir("pipe-clean");
  const auto fx = testkit::write_pipeline_fixture(dir, 120, 20, 40, 0.5, 3);
  const auto cfg = Config::load(fx.config);
  std::ostringstream log;
  run("ingest", cfg, log);
  const auto first = run("clean", cfg, log);
  EXPECT_FALSE(first.skipped);
  EXPECT_TRUE(fs::exists(first.run_dir / "corpus.jsonl"));
  EXPECT_TRUE(fs::exists(first.run_dir / "cleaning_report.json"));
  EXPECT_EQ(first.run_dir.parent_path(), dir / "runs");
  EXPECT_NE(first.run_dir.filename().string().find(cfg.hash()), std::string::npos);
  const auto stamp = fs::last_write_time(first.run_dir / "corpus.jsonl");

  const auto second = run("clean", cfg, log);
  EXPECT_TRUE(second.skipped);
  EXPECT_EQ(second.run_dir, first.run_dir);
  EXPECT_EQ(fs::last_write_time(first.run_dir / "corpus.jsonl"), stamp);
  EXPECT_NE(log.str().find("nothing to do"), std::string::npos);
  EXPECT_FALSE(run("clean", cfg, log, true).skipped);

  const auto manifest = json::parse(io::read_file(first.run_dir / "manifest.json"));
  EXPECT_EQ(manifest["config_hash"], cfg.hash());
  EXPECT_TRUE(manifest["stages"]["clean"]["inputs"].contains("raw_posts.jsonl"));
  EXPECT_TRUE(manifest["stages"]["clean"]["outputs"].contains("corpus.jsonl"));

  // A changed input reruns the stage.
  io::write_file(first.run_dir / "raw_posts.jsonl",
                 io::read_file(first.run_dir / "raw_posts.jsonl") +
                     json{{"id", "extra"}, {"user_id", "u"}, {"text", "новый пост про жизнь и работу"}}.dump() + "\n");
  EXPECT_FALSE(run("clean", cfg, log).skipped);
}

TEST(Pipeline, EndToEndRunsAreReproducible) {
  std::vector<std::string> metrics;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto dir = testkit::scratch_dir("pipe-e2e");
    const auto fx = testkit::write_pipeline_fixture(dir, 900, 120, 300, 0.5, 11, kSmallRun);
    const auto cfg = Config::load(fx.config);
    std::ostringstream log;
    fs::path run_dir;
    for (const auto& stage : kFullRun) {
      SCOPED_TRACE(stage);
      const auto r = run(stage, cfg, log);
      ASSERT_FALSE(r.skipped) << log.str();
      run_dir = r.run_dir;
    }
    // Three rounds: random, uncertainty, user-balanced, no overlap.
    std::vector<al::RoundManifest> rounds;
    for (int k = 1; k <= 3; ++k) rounds.push_back(al::load_round(run_dir / "rounds" / ("round-" + std::to_string(k) + ".json")));
    EXPECT_EQ(rounds[0].method, al::SelectionMethod::Random);
    EXPECT_EQ(rounds[1].method, al::SelectionMethod::Uncertainty);
    EXPECT_EQ(rounds[2].method, al::SelectionMethod::UserBalanced);
    EXPECT_NO_THROW(al::check_disjoint(rounds));
    for (double p : rounds[1].probabilities) {
      EXPECT_GE(p, 0.3);
      EXPECT_LE(p, 0.7);
    }
    // The learned filter may miss a post or two, not more.
    std::size_t leaked = 0;
    for (const auto& id : io::read_lines(run_dir / "pool.txt")) leaked += fx.spam_ids.count(id);
    EXPECT_LE(leaked, fx.spam_ids.size() / 50);
    const auto report = json::parse(io::read_file(run_dir / "report.json"));
    EXPECT_TRUE(report.contains("metrics"));
    EXPECT_EQ(report["rounds"].size(), 3u);
    // Another al-select is a no-op once the configured rounds exist.
    const auto extra = run("al-select", cfg, log, true);
    EXPECT_TRUE(extra.summary["round"].is_null());
    metrics.push_back(io::read_file(run_dir / "metrics.json"));
  }
  EXPECT_EQ(metrics[0], metrics[1]);
}

TEST(Pipeline, LlmTransportFailureIsResumable) {
  const auto dir = testkit::scratch_dir("pipe-llm");
  const auto fx = testkit::write_pipeline_fixture(dir, 200, 40, 60, 0.5, 5, kSmallRun);
  auto cfg = Config::load(fx.config);
  std::ostringstream log;
  for (const char* s : {"ingest", "clean", "spam-rules", "spam-train", "spam-apply", "al-select"}) run(s, cfg, log);
  io::write_file(dir / "down.json", R"({"default": [{"transport_error": "connection refused"}]})");
  auto broken = cfg;
  broken.set("paths.llm_fixture", (dir / "down.json").string());
  pipeline::RunOptions o;
  o.log = &log;
  o.run_dir = pipeline::resolve_run_dir(cfg);
  EXPECT_THROW(pipeline::run_stage("llm-annotate", broken, o), Error);
  EXPECT_TRUE(fs::exists(*o.run_dir / "annotations/llm_failures.json"));
  const auto ok = pipeline::run_stage("llm-annotate", cfg, o);
  EXPECT_GT(ok.summary["annotated_now"].get<std::size_t>(), 0u);
  EXPECT_EQ(ok.summary["failures"], 0);
}
