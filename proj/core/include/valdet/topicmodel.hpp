#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "valdet/corpus.hpp"

namespace valdet::topic {

namespace fs = std::filesystem;

/// Sparse term-by-document counts. Bigram terms are underscore-joined.
struct DocTermMatrix {
  struct Entry {
    std::size_t term;
    double count;
  };
  std::vector<std::string> vocabulary;
  std::vector<std::string> doc_ids;
  std::vector<std::vector<Entry>> docs;  // entries sorted by term index

  std::size_t num_terms() const { return vocabulary.size(); }
  std::size_t num_docs() const { return docs.size(); }
  double total_count() const;
  /// |V| x |D| dense copy.
  Eigen::MatrixXd dense() const;
};

/// Unigrams plus consecutive bigrams with corpus frequency >= min_term_count.
/// Vocabulary is sorted lexicographically.
DocTermMatrix build_matrix(const corpus::Corpus& corpus, std::size_t min_term_count);
DocTermMatrix build_matrix(const std::vector<std::pair<std::string, text::Tokens>>& docs, std::size_t min_term_count);

/// Coefficients are relative: they are rescaled by the mean counter value
/// (sum of n_wt over |V|*T for Phi, sum of n_td over T*|D| for Theta).
struct RegularizerPhase {
  std::size_t iterations = 1;
  double decorrelation = 0.0;   // tau1
  double sparse_phi = 0.0;      // tau2 (negative sparsifies)
  double sparse_theta = 0.0;    // tau3 (negative sparsifies)
};

struct RegularizerSchedule {
  std::vector<RegularizerPhase> phases;

  std::size_t total_iterations() const;
  /// 10 iterations of decorrelation (0.1), then 5 of sparse Phi (-0.2) and
  /// sparse Theta (-2).
  static RegularizerSchedule spam_phrase_default();
  static RegularizerSchedule plain_em(std::size_t iterations);
};

struct TopicModel {
  Eigen::MatrixXd phi;    // |V| x T, columns p(w|t)
  Eigen::MatrixXd theta;  // T x |D|, columns p(t|d)
  std::uint64_t seed = 0;

  std::size_t topics() const { return static_cast<std::size_t>(phi.cols()); }
};

/// Seeded uniform draws per entry, each column normalized.
TopicModel random_init(std::size_t terms, std::size_t docs, std::size_t topics, std::uint64_t seed);

struct IterationInfo {
  std::size_t iteration;  // 1-based, global across phases
  std::size_t phase;      // 0-based
  double log_likelihood;
  const TopicModel& model;
};
using IterationObserver = std::function<void(const IterationInfo&)>;

struct ArtmRunResult {
  TopicModel model;
  std::size_t topics = 0;
  double log_likelihood = 0.0;
  double phi_sparsity = 0.0;
  double theta_sparsity = 0.0;
  std::vector<std::vector<std::string>> top_terms;    // per topic
  std::vector<std::vector<std::string>> top_bigrams;  // per topic
};

struct ArtmOptions {
  std::size_t top_k = 10;
  IterationObserver observer;
};

ArtmRunResult fit_artm(const DocTermMatrix& matrix, std::size_t topics, const RegularizerSchedule& schedule,
                       std::uint64_t seed, const ArtmOptions& options = {});
/// Continues from a given starting point instead of a random one.
ArtmRunResult fit_artm(const DocTermMatrix& matrix, TopicModel init, const RegularizerSchedule& schedule,
                       const ArtmOptions& options = {});

constexpr double kLogFloor = 1e-12;

/// Sum over observed (d, w) of n_dw * ln(sum_t phi[w,t] theta[t,d]); zero
/// probabilities contribute ln(1e-12).
double log_likelihood(const TopicModel& model, const DocTermMatrix& matrix);

double zero_fraction(const Eigen::MatrixXd& m);

/// Mean pairwise cosine similarity between Phi columns.
double mean_topic_cosine(const Eigen::MatrixXd& phi);

/// k terms with largest phi[., topic]; ties by term. Throws on bad topic.
std::vector<std::string> top_terms(const TopicModel& model, const std::vector<std::string>& vocabulary,
                                   std::size_t topic, std::size_t k, bool bigrams_only = false);

struct GridRun {
  std::size_t topics;
  std::uint64_t seed;
  ArtmRunResult result;
};

/// Runs every (T, seed) pair; output ordered by T then seed.
std::vector<GridRun> run_grid(const DocTermMatrix& matrix, std::vector<std::size_t> topic_counts,
                              std::vector<std::uint64_t> seeds, const RegularizerSchedule& schedule,
                              const ArtmOptions& options = {});

/// Review file for manual phrase curation: run, topic, term, probability.
void write_review_csv(const fs::path& path, const std::vector<GridRun>& runs, const std::vector<std::string>& vocabulary,
                      std::size_t k);
/// Bigrams ranked by the number of (run, topic) top lists they appear in.
std::vector<std::pair<std::string, std::size_t>> aggregate_top_bigrams(const std::vector<GridRun>& runs);

void save_model(const fs::path& dir, const TopicModel& model, const DocTermMatrix& matrix);
TopicModel load_model(const fs::path& dir);

}  // namespace valdet::topic
