#include "valdet/embed.hpp"

#include <charconv>
#include <cmath>
#include <unordered_set>

#include "valdet/error.hpp"
#include "valdet/io.hpp"

namespace valdet::embed {

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, Eigen::MatrixXd rows, Source source)
    : ids_(std::move(ids)), rows_(std::move(rows)), source_(source) {
  if (static_cast<Eigen::Index>(ids_.size()) != rows_.rows()) {
    throw InvalidArgument("embedding id count does not match row count");
  }
  if (!rows_.allFinite()) throw NumericError("embedding matrix contains non-finite values");
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) throw InvalidArgument("duplicate post_id in embeddings: " + ids_[i]);
  }
}

Eigen::RowVectorXd EmbeddingMatrix::row(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw InvalidArgument("no embedding for post '" + id + "'");
  return rows_.row(static_cast<Eigen::Index>(it->second));
}

Eigen::MatrixXd EmbeddingMatrix::rows(const std::vector<std::string>& ids) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), rows_.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = row(ids[i]);
  return out;
}

std::vector<std::string> EmbeddingMatrix::zero_rows() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (rows_.row(static_cast<Eigen::Index>(i)).isZero(0.0)) out.push_back(ids_[i]);
  }
  return out;
}

namespace {

void check_dim(std::size_t dim, std::optional<std::size_t> expected) {
  if (expected && *expected != dim) {
    throw InvalidArgument("embedding width " + std::to_string(dim) + " does not match expected " +
                          std::to_string(*expected));
  }
}

}  // namespace

EmbeddingMatrix parse_embeddings_csv(std::string_view data, std::optional<std::size_t> expected_dim) {
  const auto rows = io::parse_csv(data);
  if (rows.size() < 2) throw ParseError("embedding file has no rows");
  const auto& header = rows.front().fields;
  if (header.size() < 2 || text::trim(header[0]) != "post_id") {
    throw ParseError("embedding header must start with post_id", 1);
  }
  const std::size_t dim = header.size() - 1;
  check_dim(dim, expected_dim);
  std::vector<std::string> ids;
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    if (f.size() != dim + 1) {
      throw ParseError("ragged embedding row: expected " + std::to_string(dim) + " values, got " +
                           std::to_string(f.size() - 1),
                       rows[r].line);
    }
    ids.push_back(f[0]);
    for (std::size_t c = 0; c < dim; ++c) {
      const auto field = text::trim(f[c + 1]);
      double v = 0.0;
      const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc{} || end != field.data() + field.size()) {
        throw ParseError("bad embedding value '" + f[c + 1] + "'", rows[r].line);
      }
      if (!std::isfinite(v)) throw ParseError("non-finite embedding value", rows[r].line);
      values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return EmbeddingMatrix(std::move(ids), std::move(values), Source::Loaded);
}

EmbeddingMatrix load_embeddings(const fs::path& path, std::optional<std::size_t> expected_dim) {
  io::require_file(path, "embedding file");
  if (io::is_binary_matrix(path)) {
    auto m = io::read_binary_matrix(path);
    if (m.values.rows() == 0) throw ParseError("embedding file has no rows");
    if (m.row_labels.empty()) throw ParseError("binary embedding file lacks post ids");
    check_dim(static_cast<std::size_t>(m.values.cols()), expected_dim);
    return EmbeddingMatrix(std::move(m.row_labels), std::move(m.values), Source::Loaded);
  }
  return parse_embeddings_csv(io::read_file(path), expected_dim);
}

void save_embeddings_csv(const fs::path& path, const EmbeddingMatrix& m) {
  std::vector<std::string> cols;
  for (std::size_t c = 0; c < m.dim(); ++c) cols.push_back("f" + std::to_string(c));
  io::write_csv_matrix(path, io::LabeledMatrix{m.matrix(), m.ids()}, cols, "post_id");
}

void save_embeddings_binary(const fs::path& path, const EmbeddingMatrix& m) {
  io::write_binary_matrix(path, io::LabeledMatrix{m.matrix(), m.ids()});
}

std::vector<std::string> hash_features(const text::Tokens& tokens, const HashEmbedOptions& options) {
  std::vector<std::string> features;
  for (const auto& tok : tokens) {
    if (options.token_unigrams) features.push_back("w:" + tok);
    std::u32string cps = U"<";
    cps += text::decode_utf8(tok);
    cps += U">";
    for (std::size_t n = options.min_ngram; n <= options.max_ngram; ++n) {
      if (cps.size() < n) break;
      for (std::size_t i = 0; i + n <= cps.size(); ++i) {
        features.push_back("c:" + text::encode_utf8(std::u32string_view(cps).substr(i, n)));
      }
    }
  }
  return features;
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

EmbeddingMatrix hash_embed(const corpus::Corpus& corpus, std::size_t dim, std::uint64_t seed,
                           const HashEmbedOptions& options) {
  if (dim < 8) throw InvalidArgument("hash embedding dimension must be >= 8");
  const std::uint64_t basis = mix(seed) ^ 0xcbf29ce484222325ULL;

  // Per-post term frequencies keyed by the 64-bit feature hash.
  std::vector<std::unordered_map<std::uint64_t, double>> tf(corpus.size());
  std::unordered_map<std::uint64_t, std::size_t> df;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (const auto& f : hash_features(corpus[i].tokens, options)) tf[i][io::fnv1a64(f, basis)] += 1.0;
    for (const auto& [h, _] : tf[i]) ++df[h];
  }

  const double n_docs = static_cast<double>(corpus.size());
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(corpus.size()),
                                               static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto row = rows.row(static_cast<Eigen::Index>(i));
    for (const auto& [h, count] : tf[i]) {
      const double idf = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df[h]))) + 1.0;
      const auto bucket = static_cast<Eigen::Index>(h % dim);
      const double sign = (mix(h) & 1ULL) ? -1.0 : 1.0;
      row(bucket) += sign * count * idf;
    }
    const double norm = row.norm();
    if (norm > 0.0) row /= norm;
  }
  return EmbeddingMatrix(corpus.ids(), std::move(rows), Source::Hashed);
}

}  // namespace valdet::embed
