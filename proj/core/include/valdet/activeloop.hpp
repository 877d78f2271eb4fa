#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "valdet/annotations.hpp"
#include "valdet/corpus.hpp"
#include "valdet/embed.hpp"
#include "valdet/model.hpp"

namespace valdet::al {

namespace fs = std::filesystem;

enum class SelectionMethod { Random, Uncertainty, UserBalanced };
const char* to_string(SelectionMethod m);  // random | uncertainty | user_balanced
SelectionMethod parse_selection_method(std::string_view s);

struct SelectionConfig {
  double band_low = 0.3;
  double band_high = 0.7;
  std::size_t batch = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Selection {
  std::vector<std::string> ids;
  std::vector<double> probabilities;  // aligned with ids; uncertainty rounds only
  std::size_t candidates = 0;
  std::vector<std::string> warnings;
};

/// Pool posts whose class-1 probability lies in [band_low, band_high], then a
/// seeded uniform sample of `batch` of them (all of them, with a warning, when
/// fewer qualify). Output keeps pool order.
Selection select_uncertain(const ml::Model& model, const embed::EmbeddingMatrix& embeddings,
                           const std::vector<std::string>& pool, const SelectionConfig& cfg);
Selection select_random(const std::vector<std::string>& pool, std::size_t batch, std::uint64_t seed);
/// One post per distinct user among the pool posts of `corpus`.
Selection select_user_balanced(const corpus::Corpus& corpus, const std::vector<std::string>& pool, std::size_t batch,
                               std::uint64_t seed);

struct RoundManifest {
  std::size_t round = 1;
  SelectionMethod method = SelectionMethod::Random;
  std::vector<std::string> ids;
  std::vector<double> probabilities;
  std::string model_ref;
  std::string label_ref;

  nlohmann::json to_json() const;
  static RoundManifest from_json(const nlohmann::json& j);
};

void save_round(const fs::path& path, const RoundManifest& r);
RoundManifest load_round(const fs::path& path);

/// Throws on an id that appears in two rounds (or twice in one).
void check_disjoint(const std::vector<RoundManifest>& rounds);
/// `pool` minus every id already selected in `rounds`.
std::vector<std::string> remaining_pool(const std::vector<std::string>& pool, const std::vector<RoundManifest>& rounds);

/// Reflects -> 1; DoesntReflect, Spam -> 0; anything else throws.
int binary_value_label(annot::Label l);

struct ClassCounts {
  std::size_t positive = 0;
  std::size_t negative = 0;
};

struct AssembledSet {
  ml::Dataset dataset;
  std::vector<ClassCounts> per_round;
  ClassCounts total;
  std::vector<std::string> warnings;

  nlohmann::json report() const;
};

/// Union of all rounds in round order, labels from `labels`, features from
/// `embeddings`.
AssembledSet assemble_training_set(const std::vector<RoundManifest>& rounds,
                                   const std::map<std::string, annot::Label>& labels,
                                   const embed::EmbeddingMatrix& embeddings);

}  // namespace valdet::al
