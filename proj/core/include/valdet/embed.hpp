#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "valdet/corpus.hpp"

namespace valdet::embed {

namespace fs = std::filesystem;

enum class Source { Loaded, Hashed };

/// Fixed-width vectors keyed by post id, rows kept in insertion order.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::vector<std::string> ids, Eigen::MatrixXd rows, Source source);

  std::size_t dim() const { return static_cast<std::size_t>(rows_.cols()); }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  Source source() const { return source_; }

  const std::vector<std::string>& ids() const { return ids_; }
  const Eigen::MatrixXd& matrix() const { return rows_; }
  bool contains(const std::string& id) const { return index_.count(id) > 0; }
  /// Throws when the id is unknown.
  Eigen::RowVectorXd row(const std::string& id) const;
  /// Stacks rows for `ids` in the given order.
  Eigen::MatrixXd rows(const std::vector<std::string>& ids) const;

  /// Ids whose vector is all zeros (empty posts under hashing).
  std::vector<std::string> zero_rows() const;

 private:
  std::vector<std::string> ids_;
  Eigen::MatrixXd rows_;
  std::unordered_map<std::string, std::size_t> index_;
  Source source_ = Source::Loaded;
};

/// CSV ("post_id,f0,...,f{d-1}") or the shared binary matrix layout with
/// row labels. The width is inferred and, when given, checked.
EmbeddingMatrix load_embeddings(const fs::path& path, std::optional<std::size_t> expected_dim = std::nullopt);
EmbeddingMatrix parse_embeddings_csv(std::string_view data, std::optional<std::size_t> expected_dim = std::nullopt);
void save_embeddings_csv(const fs::path& path, const EmbeddingMatrix& m);
void save_embeddings_binary(const fs::path& path, const EmbeddingMatrix& m);

struct HashEmbedOptions {
  std::size_t min_ngram = 3;
  std::size_t max_ngram = 5;
  bool token_unigrams = true;
};

/// Signed feature hashing of character 3-5-grams (per token, with '<' '>'
/// boundary marks) and token unigrams, TF-IDF weighted with
/// idf = ln((1+N)/(1+df)) + 1 over the given corpus, then L2-normalized.
EmbeddingMatrix hash_embed(const corpus::Corpus& corpus, std::size_t dim, std::uint64_t seed,
                           const HashEmbedOptions& options = {});

/// Feature strings for one token sequence, in a deterministic order.
std::vector<std::string> hash_features(const text::Tokens& tokens, const HashEmbedOptions& options = {});

}  // namespace valdet::embed
