#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "synth.hpp"
#include "valdet/error.hpp"
#include "valdet/io.hpp"
#include "valdet/topicmodel.hpp"

using namespace valdet;
using topic::DocTermMatrix;

namespace {

double count_of(const DocTermMatrix& m, std::size_t doc, const std::string& term) {
  const auto it = std::find(m.vocabulary.begin(), m.vocabulary.end(), term);
  if (it == m.vocabulary.end()) return -1;
  const auto w = static_cast<std::size_t>(it - m.vocabulary.begin());
  for (const auto& e : m.docs[doc])
    if (e.term == w) return e.count;
  return 0;
}

// Share of each topic's Phi mass that falls on terms of one block; returns
// the block mass for the block the topic prefers.
std::vector<std::pair<int, double>> block_alignment(const topic::TopicModel& m, std::size_t terms) {
  std::vector<std::pair<int, double>> out;
  for (Eigen::Index t = 0; t < m.phi.cols(); ++t) {
    const double a = m.phi.col(t).head(terms / 2).sum();
    out.emplace_back(a >= 0.5 ? 0 : 1, std::max(a, 1.0 - a));
  }
  return out;
}

DocTermMatrix random_matrix(std::size_t docs, std::size_t terms, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> c(0, 3);
  DocTermMatrix m;
  for (std::size_t w = 0; w < terms; ++w) m.vocabulary.push_back("t" + std::to_string(100 + w));
  for (std::size_t d = 0; d < docs; ++d) {
    std::vector<DocTermMatrix::Entry> e;
    for (std::size_t w = 0; w < terms; ++w)
      if (int k = c(rng); k > 1) e.push_back({w, static_cast<double>(k - 1)});
    if (e.empty()) e.push_back({d % terms, 1.0});
    m.docs.push_back(e);
    m.doc_ids.push_back("d" + std::to_string(d));
  }
  return m;
}

}  // namespace

TEST(BuildMatrix, SingleDocUnigramsAndBigram) {
  const auto m = topic::build_matrix({{"d1", {"a", "b"}}}, 1);
  EXPECT_EQ(m.vocabulary, (std::vector<std::string>{"a", "a_b", "b"}));
  EXPECT_EQ(count_of(m, 0, "a"), 1);
  EXPECT_EQ(count_of(m, 0, "b"), 1);
  EXPECT_EQ(count_of(m, 0, "a_b"), 1);
}

TEST(BuildMatrix, MinCountCanEmptyVocabulary) {
  EXPECT_THROW(topic::build_matrix({{"d1", {"a", "b"}}}, 2), InvalidArgument);
  EXPECT_THROW(topic::build_matrix(std::vector<std::pair<std::string, text::Tokens>>{}, 1), InvalidArgument);
}

TEST(BuildMatrix, SharedBigramCountedPerDoc) {
  const auto m = topic::build_matrix({{"d1", {"x", "y", "z"}}, {"d2", {"w", "x", "y"}}}, 2);
  EXPECT_EQ(count_of(m, 0, "x_y"), 1);
  EXPECT_EQ(count_of(m, 1, "x_y"), 1);
  EXPECT_EQ(count_of(m, 0, "z"), -1);  // below min count
}

TEST(Artm, OneEmStepByHand) {
  DocTermMatrix m;
  m.vocabulary = {"u", "v"};
  m.doc_ids = {"d"};
  m.docs = {{{0, 3.0}, {1, 1.0}}};
  topic::TopicModel init;
  init.phi.resize(2, 2);
  init.phi << 0.8, 0.3, 0.2, 0.7;
  init.theta.resize(2, 1);
  init.theta << 0.5, 0.5;
  const auto r = topic::fit_artm(m, init, topic::RegularizerSchedule::plain_em(1));
  // Posteriors: word u -> (8/11, 3/11), word v -> (2/9, 7/9).
  const double n_u0 = 3 * 8.0 / 11, n_u1 = 3 * 3.0 / 11, n_v0 = 2.0 / 9, n_v1 = 7.0 / 9;
  EXPECT_NEAR(r.model.phi(0, 0), n_u0 / (n_u0 + n_v0), 1e-12);
  EXPECT_NEAR(r.model.phi(1, 1), n_v1 / (n_u1 + n_v1), 1e-12);
  EXPECT_NEAR(r.model.theta(0, 0), (n_u0 + n_v0) / 4.0, 1e-12);
  EXPECT_NEAR(r.model.theta(1, 0), (n_u1 + n_v1) / 4.0, 1e-12);
}

TEST(Artm, UniformInitKeepsUniformTheta) {
  DocTermMatrix m;
  m.vocabulary = {"u", "v", "w"};
  m.doc_ids = {"d"};
  m.docs = {{{0, 2.0}, {1, 1.0}, {2, 5.0}}};
  topic::TopicModel init;
  init.phi = Eigen::MatrixXd::Constant(3, 2, 1.0 / 3);
  init.theta = Eigen::MatrixXd::Constant(2, 1, 0.5);
  const auto r = topic::fit_artm(m, init, topic::RegularizerSchedule::plain_em(1));
  EXPECT_NEAR(r.model.theta(0, 0), 0.5, 1e-12);
  EXPECT_NEAR(r.model.phi(2, 0), 5.0 / 8, 1e-12);
}

TEST(Artm, DeterministicUnderSeed) {
  const auto m = testkit::two_block_matrix(60, 20, 15, 3);
  const auto a = topic::fit_artm(m, 3, topic::RegularizerSchedule::spam_phrase_default(), 11);
  const auto b = topic::fit_artm(m, 3, topic::RegularizerSchedule::spam_phrase_default(), 11);
  EXPECT_EQ(a.model.phi, b.model.phi);
  EXPECT_EQ(a.model.theta, b.model.theta);
  const auto c = topic::fit_artm(m, 3, topic::RegularizerSchedule::spam_phrase_default(), 12);
  EXPECT_NE(a.model.phi, c.model.phi);
}

TEST(Artm, PlantedBlocksRecoveredAndColumnsStochastic) {
  const auto m = testkit::two_block_matrix(200, 60, 30, 1);
  topic::ArtmOptions opts;
  double worst = 0.0;
  opts.observer = [&](const topic::IterationInfo& info) {
    for (Eigen::Index t = 0; t < info.model.phi.cols(); ++t) {
      worst = std::max(worst, std::abs(info.model.phi.col(t).sum() - 1.0));
      EXPECT_GE(info.model.phi.col(t).minCoeff(), 0.0);
    }
    for (Eigen::Index d = 0; d < info.model.theta.cols(); ++d) {
      worst = std::max(worst, std::abs(info.model.theta.col(d).sum() - 1.0));
    }
  };
  for (std::uint64_t seed : {1u, 2u}) {
    const auto r = topic::fit_artm(m, 2, topic::RegularizerSchedule::spam_phrase_default(), seed, opts);
    const auto al = block_alignment(r.model, 60);
    EXPECT_NE(al[0].first, al[1].first) << "seed " << seed;
    EXPECT_GE(al[0].second, 0.95);
    EXPECT_GE(al[1].second, 0.95);
    const auto top = topic::top_terms(r.model, m.vocabulary, 0, 5);
    for (const auto& t : top) EXPECT_EQ(t[0], al[0].first == 0 ? 'a' : 'b');
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Artm, PlainEmLikelihoodNondecreasing) {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto m = random_matrix(15, 12, s);
    std::vector<double> ll;
    topic::ArtmOptions opts;
    opts.observer = [&](const topic::IterationInfo& i) { ll.push_back(i.log_likelihood); };
    topic::fit_artm(m, 3, topic::RegularizerSchedule::plain_em(30), s, opts);
    for (std::size_t i = 1; i < ll.size(); ++i) EXPECT_GE(ll[i], ll[i - 1] - 1e-9) << "seed " << s << " it " << i;
  }
}

TEST(Artm, SparsePhaseDoesNotReduceZeros) {
  const auto m = testkit::two_block_matrix(200, 60, 30, 1);
  std::vector<double> phi_zero, theta_zero;
  topic::ArtmOptions opts;
  opts.observer = [&](const topic::IterationInfo& i) {
    phi_zero.push_back(topic::zero_fraction(i.model.phi));
    theta_zero.push_back(topic::zero_fraction(i.model.theta));
  };
  topic::fit_artm(m, 2, topic::RegularizerSchedule::spam_phrase_default(), 3, opts);
  ASSERT_EQ(phi_zero.size(), 15u);
  for (std::size_t i = 10; i < 15; ++i) {
    EXPECT_GE(phi_zero[i], phi_zero[9]);
    EXPECT_GE(theta_zero[i], theta_zero[9]);
  }
  EXPECT_GT(phi_zero.back(), 0.0);
}

TEST(Artm, DecorrelationLowersTopicSimilarity) {
  const auto m = testkit::two_block_matrix(200, 60, 30, 4);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto plain = topic::fit_artm(m, 4, topic::RegularizerSchedule::plain_em(10), seed);
    const auto decor = topic::fit_artm(m, 4, topic::RegularizerSchedule{{{10, 0.1, 0.0, 0.0}}}, seed);
    EXPECT_LE(topic::mean_topic_cosine(decor.model.phi), topic::mean_topic_cosine(plain.model.phi) + 1e-12);
  }
}

TEST(Artm, Errors) {
  const auto m = testkit::two_block_matrix(10, 6, 5, 1);
  EXPECT_THROW(topic::fit_artm(m, 2, topic::RegularizerSchedule{}, 1), InvalidArgument);
  EXPECT_THROW(topic::fit_artm(m, 1, topic::RegularizerSchedule::plain_em(1), 1), InvalidArgument);
  auto init = topic::random_init(6, 10, 2, 1);
  init.phi(0, 0) = std::nan("");
  try {
    topic::fit_artm(m, init, topic::RegularizerSchedule::plain_em(3));
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("iteration 1"), std::string::npos);
  }
}

TEST(LogLikelihood, Examples) {
  DocTermMatrix m;
  m.vocabulary = {"a"};
  m.doc_ids = {"d"};
  m.docs = {{{0, 4.0}}};
  topic::TopicModel one;
  one.phi = Eigen::MatrixXd::Ones(1, 1);
  one.theta = Eigen::MatrixXd::Ones(1, 1);
  EXPECT_DOUBLE_EQ(topic::log_likelihood(one, m), 0.0);

  DocTermMatrix m2;
  m2.vocabulary = {"a", "b"};
  m2.doc_ids = {"d"};
  m2.docs = {{{0, 1.0}, {1, 2.0}}};
  topic::TopicModel zero_b;
  zero_b.phi.resize(2, 2);
  zero_b.phi << 1, 1, 0, 0;
  zero_b.theta = Eigen::MatrixXd::Constant(2, 1, 0.5);
  const double ll = topic::log_likelihood(zero_b, m2);
  EXPECT_TRUE(std::isfinite(ll));
  EXPECT_NEAR(ll, 2 * std::log(1e-12), 1e-9);
  topic::TopicModel bad;
  bad.phi = Eigen::MatrixXd::Ones(3, 2);
  bad.theta = Eigen::MatrixXd::Ones(2, 1);
  EXPECT_THROW(topic::log_likelihood(bad, m2), InvalidArgument);
}

TEST(TopTerms, Examples) {
  topic::TopicModel m;
  m.phi = Eigen::MatrixXd::Constant(5, 2, 0.2);
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
  EXPECT_TRUE(topic::top_terms(m, vocab, 0, 0).empty());
  EXPECT_EQ(topic::top_terms(m, vocab, 1, 3), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_THROW(topic::top_terms(m, vocab, 2, 3), InvalidArgument);
  const std::vector<std::string> mixed{"a", "a_b", "b", "b_c", "c"};
  EXPECT_EQ(topic::top_terms(m, mixed, 0, 5, true), (std::vector<std::string>{"a_b", "b_c"}));
}

TEST(RunGrid, ThirtyRunsOrdered) {
  const auto m = testkit::two_block_matrix(40, 40, 20, 2);
  const auto runs = topic::run_grid(m, {30, 5, 10, 15, 20, 25}, {5, 1, 2, 3, 4},
                                    topic::RegularizerSchedule{{{2, 0.1, 0, 0}, {1, 0, -0.2, -2}}});
  ASSERT_EQ(runs.size(), 30u);
  for (std::size_t i = 1; i < runs.size(); ++i) {
    EXPECT_TRUE(runs[i - 1].topics < runs[i].topics ||
                (runs[i - 1].topics == runs[i].topics && runs[i - 1].seed < runs[i].seed));
  }
  const auto direct = topic::fit_artm(m, 5, topic::RegularizerSchedule{{{2, 0.1, 0, 0}, {1, 0, -0.2, -2}}}, 1);
  EXPECT_EQ(runs[0].result.model.phi, direct.model.phi);
}

TEST(RunGrid, ReviewFileAndPersistence) {
  const auto dir = testkit::scratch_dir("artm");
  std::vector<std::pair<std::string, text::Tokens>> docs;
  for (int i = 0; i < 10; ++i) {
    docs.push_back({"x" + std::to_string(i), {"купи", "сейчас", "скидка", "акция"}});
    docs.push_back({"y" + std::to_string(i), {"доброе", "утро", "друзья", "мои"}});
  }
  const auto m = topic::build_matrix(docs, 2);
  const auto runs = topic::run_grid(m, {2}, {1}, topic::RegularizerSchedule::plain_em(3));
  topic::write_review_csv(dir / "review.csv", runs, m.vocabulary, 3);
  const auto table = io::CsvTable::load(dir / "review.csv");
  EXPECT_EQ(table.header(), (std::vector<std::string>{"run", "topic", "term", "probability"}));
  ASSERT_EQ(table.rows().size(), 6u);
  for (const auto& row : table.rows()) EXPECT_NE(row.fields[2].find('_'), std::string::npos);
  topic::save_model(dir / "model", runs[0].result.model, m);
  const auto back = topic::load_model(dir / "model");
  EXPECT_EQ(back.phi, runs[0].result.model.phi);
  EXPECT_EQ(back.theta, runs[0].result.model.theta);
}
