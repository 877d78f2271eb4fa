#include "valdet/topicmodel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "valdet/error.hpp"
#include "valdet/io.hpp"

namespace valdet::topic {

double DocTermMatrix::total_count() const {
  double total = 0.0;
  for (const auto& d : docs) {
    for (const auto& e : d) total += e.count;
  }
  return total;
}

Eigen::MatrixXd DocTermMatrix::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(num_terms()),
                                            static_cast<Eigen::Index>(num_docs()));
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto& e : docs[d]) m(static_cast<Eigen::Index>(e.term), static_cast<Eigen::Index>(d)) = e.count;
  }
  return m;
}

DocTermMatrix build_matrix(const std::vector<std::pair<std::string, text::Tokens>>& docs, std::size_t min_term_count) {
  if (docs.empty()) throw InvalidArgument("cannot build a term matrix from an empty corpus");

  auto terms_of = [](const text::Tokens& tokens) {
    std::vector<std::string> terms(tokens.begin(), tokens.end());
    for (std::size_t i = 1; i < tokens.size(); ++i) terms.push_back(tokens[i - 1] + "_" + tokens[i]);
    return terms;
  };

  std::map<std::string, std::size_t> freq;
  for (const auto& [id, tokens] : docs) {
    for (auto& t : terms_of(tokens)) ++freq[t];
  }
  DocTermMatrix m;
  std::map<std::string, std::size_t> index;
  for (const auto& [term, n] : freq) {
    if (n >= min_term_count) {
      index.emplace(term, m.vocabulary.size());
      m.vocabulary.push_back(term);
    }
  }
  if (m.vocabulary.empty()) {
    throw InvalidArgument("no term reaches min_term_count=" + std::to_string(min_term_count) + "; vocabulary is empty");
  }
  m.doc_ids.reserve(docs.size());
  m.docs.reserve(docs.size());
  for (const auto& [id, tokens] : docs) {
    std::map<std::size_t, double> counts;
    for (auto& t : terms_of(tokens)) {
      if (auto it = index.find(t); it != index.end()) counts[it->second] += 1.0;
    }
    std::vector<DocTermMatrix::Entry> entries;
    entries.reserve(counts.size());
    for (const auto& [w, c] : counts) entries.push_back({w, c});
    m.doc_ids.push_back(id);
    m.docs.push_back(std::move(entries));
  }
  return m;
}

DocTermMatrix build_matrix(const corpus::Corpus& corpus, std::size_t min_term_count) {
  std::vector<std::pair<std::string, text::Tokens>> docs;
  docs.reserve(corpus.size());
  for (const auto& p : corpus) docs.emplace_back(p.id, p.tokens);
  return build_matrix(docs, min_term_count);
}

std::size_t RegularizerSchedule::total_iterations() const {
  std::size_t n = 0;
  for (const auto& p : phases) n += p.iterations;
  return n;
}

RegularizerSchedule RegularizerSchedule::spam_phrase_default() {
  return RegularizerSchedule{{RegularizerPhase{10, 0.1, 0.0, 0.0}, RegularizerPhase{5, 0.0, -0.2, -2.0}}};
}

RegularizerSchedule RegularizerSchedule::plain_em(std::size_t iterations) {
  return RegularizerSchedule{{RegularizerPhase{iterations, 0.0, 0.0, 0.0}}};
}

TopicModel random_init(std::size_t terms, std::size_t docs, std::size_t topics, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TopicModel m;
  m.seed = seed;
  const auto V = static_cast<Eigen::Index>(terms);
  const auto T = static_cast<Eigen::Index>(topics);
  const auto D = static_cast<Eigen::Index>(docs);
  m.phi.resize(V, T);
  m.theta.resize(T, D);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index w = 0; w < V; ++w) m.phi(w, t) = unit(rng);
    m.phi.col(t) /= m.phi.col(t).sum();
  }
  for (Eigen::Index d = 0; d < D; ++d) {
    for (Eigen::Index t = 0; t < T; ++t) m.theta(t, d) = unit(rng);
    m.theta.col(d) /= m.theta.col(d).sum();
  }
  return m;
}

namespace {

// Normalizes max(0, counters + reg) column-wise into `out`. A column whose
// regularized mass vanishes keeps a single unit entry at its largest raw
// counter so the matrix stays column-stochastic.
void normalize_columns(const Eigen::MatrixXd& counters, const Eigen::MatrixXd& reg, Eigen::MatrixXd& out) {
  out = (counters + reg).cwiseMax(0.0);
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    const double sum = out.col(c).sum();
    if (sum > 0.0) {
      out.col(c) /= sum;
      continue;
    }
    Eigen::Index best = 0;
    counters.col(c).maxCoeff(&best);
    out.col(c).setZero();
    out(best, c) = 1.0;
  }
}

void check_finite(const Eigen::MatrixXd& m, const char* what, std::size_t iteration) {
  if (!m.allFinite()) {
    throw NumericError(std::string("non-finite values in ") + what + " at iteration " + std::to_string(iteration));
  }
}

}  // namespace

double log_likelihood(const TopicModel& model, const DocTermMatrix& matrix) {
  if (static_cast<std::size_t>(model.phi.rows()) != matrix.num_terms() ||
      static_cast<std::size_t>(model.theta.cols()) != matrix.num_docs() || model.phi.cols() != model.theta.rows()) {
    throw InvalidArgument("topic model dimensions do not match the term matrix");
  }
  double ll = 0.0;
  const double floor_log = std::log(kLogFloor);
  for (std::size_t d = 0; d < matrix.num_docs(); ++d) {
    const auto theta_d = model.theta.col(static_cast<Eigen::Index>(d));
    for (const auto& e : matrix.docs[d]) {
      const double p = model.phi.row(static_cast<Eigen::Index>(e.term)).dot(theta_d);
      ll += e.count * (p > 0.0 ? std::log(p) : floor_log);
    }
  }
  return ll;
}

ArtmRunResult fit_artm(const DocTermMatrix& matrix, TopicModel model, const RegularizerSchedule& schedule,
                       const ArtmOptions& options) {
  if (schedule.phases.empty()) throw InvalidArgument("regularizer schedule has no phases");
  for (const auto& p : schedule.phases) {
    if (p.iterations < 1) throw InvalidArgument("every schedule phase needs at least one iteration");
  }
  const auto V = static_cast<Eigen::Index>(matrix.num_terms());
  const auto D = static_cast<Eigen::Index>(matrix.num_docs());
  const auto T = model.phi.cols();
  if (V == 0 || D == 0) throw InvalidArgument("term matrix is empty");
  if (T < 2) throw InvalidArgument("topic count must be >= 2");
  if (model.phi.rows() != V || model.theta.rows() != T || model.theta.cols() != D) {
    throw InvalidArgument("initial model dimensions do not match the term matrix");
  }

  Eigen::MatrixXd n_wt(V, T);
  Eigen::MatrixXd n_td(T, D);
  Eigen::MatrixXd r_wt(V, T);
  Eigen::MatrixXd r_td(T, D);
  Eigen::VectorXd post(T);

  std::size_t iteration = 0;
  for (std::size_t phase = 0; phase < schedule.phases.size(); ++phase) {
    const auto& reg = schedule.phases[phase];
    for (std::size_t it = 0; it < reg.iterations; ++it) {
      ++iteration;
      n_wt.setZero();
      n_td.setZero();
      for (Eigen::Index d = 0; d < D; ++d) {
        for (const auto& e : matrix.docs[static_cast<std::size_t>(d)]) {
          const auto w = static_cast<Eigen::Index>(e.term);
          post = model.phi.row(w).transpose().cwiseProduct(model.theta.col(d));
          const double z = post.sum();
          if (z <= 0.0) continue;
          post *= e.count / z;
          n_wt.row(w) += post.transpose();
          n_td.col(d) += post;
        }
      }
      check_finite(n_wt, "n_wt", iteration);
      check_finite(n_td, "n_td", iteration);

      const double phi_scale = n_wt.sum() / static_cast<double>(V * T);
      const double theta_scale = n_td.sum() / static_cast<double>(T * D);
      r_wt.setConstant(reg.sparse_phi * phi_scale);
      if (reg.decorrelation != 0.0) {
        const Eigen::VectorXd row_sums = model.phi.rowwise().sum();
        const double tau = reg.decorrelation * phi_scale;
        for (Eigen::Index t = 0; t < T; ++t) {
          r_wt.col(t).array() -= tau * model.phi.col(t).array() * (row_sums.array() - model.phi.col(t).array());
        }
      }
      r_td.setConstant(reg.sparse_theta * theta_scale);

      normalize_columns(n_wt, r_wt, model.phi);
      normalize_columns(n_td, r_td, model.theta);
      check_finite(model.phi, "Phi", iteration);
      check_finite(model.theta, "Theta", iteration);

      if (options.observer) {
        options.observer(IterationInfo{iteration, phase, log_likelihood(model, matrix), model});
      }
    }
  }

  ArtmRunResult result;
  result.topics = static_cast<std::size_t>(T);
  result.log_likelihood = log_likelihood(model, matrix);
  result.phi_sparsity = zero_fraction(model.phi);
  result.theta_sparsity = zero_fraction(model.theta);
  for (std::size_t t = 0; t < result.topics; ++t) {
    result.top_terms.push_back(top_terms(model, matrix.vocabulary, t, options.top_k, false));
    result.top_bigrams.push_back(top_terms(model, matrix.vocabulary, t, options.top_k, true));
  }
  result.model = std::move(model);
  return result;
}

ArtmRunResult fit_artm(const DocTermMatrix& matrix, std::size_t topics, const RegularizerSchedule& schedule,
                       std::uint64_t seed, const ArtmOptions& options) {
  if (topics < 2) throw InvalidArgument("topic count must be >= 2");
  if (matrix.num_terms() == 0 || matrix.num_docs() == 0) throw InvalidArgument("term matrix is empty");
  return fit_artm(matrix, random_init(matrix.num_terms(), matrix.num_docs(), topics, seed), schedule, options);
}

double zero_fraction(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return static_cast<double>((m.array() == 0.0).count()) / static_cast<double>(m.size());
}

double mean_topic_cosine(const Eigen::MatrixXd& phi) {
  const auto T = phi.cols();
  if (T < 2) return 0.0;
  double total = 0.0;
  std::size_t pairs = 0;
  for (Eigen::Index a = 0; a < T; ++a) {
    for (Eigen::Index b = a + 1; b < T; ++b) {
      const double denom = phi.col(a).norm() * phi.col(b).norm();
      total += denom > 0.0 ? phi.col(a).dot(phi.col(b)) / denom : 0.0;
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

std::vector<std::string> top_terms(const TopicModel& model, const std::vector<std::string>& vocabulary,
                                   std::size_t topic, std::size_t k, bool bigrams_only) {
  if (topic >= model.topics()) {
    throw InvalidArgument("topic " + std::to_string(topic) + " out of range (T=" + std::to_string(model.topics()) +
                          ")");
  }
  if (vocabulary.size() != static_cast<std::size_t>(model.phi.rows())) {
    throw InvalidArgument("vocabulary size does not match Phi rows");
  }
  std::vector<std::size_t> idx;
  for (std::size_t w = 0; w < vocabulary.size(); ++w) {
    if (!bigrams_only || vocabulary[w].find('_') != std::string::npos) idx.push_back(w);
  }
  const auto col = model.phi.col(static_cast<Eigen::Index>(topic));
  auto better = [&](std::size_t a, std::size_t b) {
    const double pa = col(static_cast<Eigen::Index>(a));
    const double pb = col(static_cast<Eigen::Index>(b));
    return pa != pb ? pa > pb : vocabulary[a] < vocabulary[b];
  };
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  std::vector<std::string> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(vocabulary[idx[i]]);
  return out;
}

std::vector<GridRun> run_grid(const DocTermMatrix& matrix, std::vector<std::size_t> topic_counts,
                              std::vector<std::uint64_t> seeds, const RegularizerSchedule& schedule,
                              const ArtmOptions& options) {
  if (topic_counts.empty() || seeds.empty()) throw InvalidArgument("grid needs at least one topic count and seed");
  std::sort(topic_counts.begin(), topic_counts.end());
  std::sort(seeds.begin(), seeds.end());
  std::vector<GridRun> runs;
  runs.reserve(topic_counts.size() * seeds.size());
  for (auto T : topic_counts) {
    for (auto s : seeds) runs.push_back(GridRun{T, s, fit_artm(matrix, T, schedule, s, options)});
  }
  return runs;
}

void write_review_csv(const fs::path& path, const std::vector<GridRun>& runs, const std::vector<std::string>& vocabulary,
                      std::size_t k) {
  std::ostringstream out;
  out.precision(10);
  out << io::csv_line({"run", "topic", "term", "probability"});
  for (const auto& run : runs) {
    const std::string name = "T" + std::to_string(run.topics) + "-s" + std::to_string(run.seed);
    for (std::size_t t = 0; t < run.topics; ++t) {
      for (const auto& term : top_terms(run.result.model, vocabulary, t, k, true)) {
        const auto w = static_cast<Eigen::Index>(
            std::lower_bound(vocabulary.begin(), vocabulary.end(), term) - vocabulary.begin());
        out << io::csv_escape(name) << ',' << t << ',' << io::csv_escape(term) << ','
            << run.result.model.phi(w, static_cast<Eigen::Index>(t)) << '\n';
      }
    }
  }
  io::write_file(path, out.str());
}

std::vector<std::pair<std::string, std::size_t>> aggregate_top_bigrams(const std::vector<GridRun>& runs) {
  std::map<std::string, std::size_t> hits;
  for (const auto& run : runs) {
    for (const auto& list : run.result.top_bigrams) {
      for (const auto& b : list) ++hits[b];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> out(hits.begin(), hits.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

void save_model(const fs::path& dir, const TopicModel& model, const DocTermMatrix& matrix) {
  io::write_binary_matrix(dir / "phi.bin", io::LabeledMatrix{model.phi, matrix.vocabulary});
  io::write_binary_matrix(dir / "theta.bin", io::LabeledMatrix{model.theta, {}});
  io::write_file(dir / "model.json",
                 nlohmann::json{{"seed", model.seed}, {"topics", model.topics()}, {"doc_ids", matrix.doc_ids}}.dump(2));
}

TopicModel load_model(const fs::path& dir) {
  TopicModel m;
  m.phi = io::read_binary_matrix(dir / "phi.bin").values;
  m.theta = io::read_binary_matrix(dir / "theta.bin").values;
  const auto meta = nlohmann::json::parse(io::read_file(dir / "model.json"));
  m.seed = meta.at("seed").get<std::uint64_t>();
  return m;
}

}  // namespace valdet::topic
