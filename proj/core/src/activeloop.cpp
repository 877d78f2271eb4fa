#include "valdet/activeloop.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "valdet/error.hpp"
#include "valdet/io.hpp"

namespace valdet::al {

using nlohmann::json;

const char* to_string(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::Random: return "random";
    case SelectionMethod::Uncertainty: return "uncertainty";
    case SelectionMethod::UserBalanced: return "user_balanced";
  }
  return "?";
}

SelectionMethod parse_selection_method(std::string_view s) {
  if (s == "random") return SelectionMethod::Random;
  if (s == "uncertainty") return SelectionMethod::Uncertainty;
  if (s == "user_balanced") return SelectionMethod::UserBalanced;
  throw InvalidArgument("unknown selection method '" + std::string(s) + "'");
}

void SelectionConfig::validate() const {
  if (!(band_low >= 0.0 && band_low < band_high && band_high <= 1.0)) {
    throw InvalidArgument("selection band must satisfy 0 <= low < high <= 1");
  }
  if (batch == 0) throw InvalidArgument("selection batch must be >= 1");
}

namespace {

// Seeded choice of k positions out of n, returned sorted.
std::vector<std::size_t> sample_positions(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(n, k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

Selection select_uncertain(const ml::Model& model, const embed::EmbeddingMatrix& embeddings,
                           const std::vector<std::string>& pool, const SelectionConfig& cfg) {
  cfg.validate();
  if (pool.empty()) throw InvalidArgument("selection pool is empty");
  const Eigen::VectorXd p = ml::predict_proba(model, embeddings.rows(pool));
  std::vector<std::size_t> in_band;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (p[i] >= cfg.band_low && p[i] <= cfg.band_high) in_band.push_back(i);
  }
  Selection sel;
  sel.candidates = in_band.size();
  if (in_band.size() < cfg.batch) {
    sel.warnings.push_back("only " + std::to_string(in_band.size()) + " pool posts fall in [" +
                           std::to_string(cfg.band_low) + ", " + std::to_string(cfg.band_high) + "], requested " +
                           std::to_string(cfg.batch));
  }
  for (auto k : sample_positions(in_band.size(), cfg.batch, cfg.seed)) {
    sel.ids.push_back(pool[in_band[k]]);
    sel.probabilities.push_back(p[in_band[k]]);
  }
  return sel;
}

Selection select_random(const std::vector<std::string>& pool, std::size_t batch, std::uint64_t seed) {
  if (pool.empty()) throw InvalidArgument("selection pool is empty");
  if (batch == 0) throw InvalidArgument("selection batch must be >= 1");
  Selection sel;
  sel.candidates = pool.size();
  if (pool.size() < batch) {
    sel.warnings.push_back("pool has " + std::to_string(pool.size()) + " posts, requested " + std::to_string(batch));
  }
  for (auto k : sample_positions(pool.size(), batch, seed)) sel.ids.push_back(pool[k]);
  return sel;
}

Selection select_user_balanced(const corpus::Corpus& corpus, const std::vector<std::string>& pool, std::size_t batch,
                               std::uint64_t seed) {
  if (pool.empty()) throw InvalidArgument("selection pool is empty");
  const auto sub = corpus.filter(pool);
  Selection sel;
  sel.candidates = sub.size();
  sel.ids = corpus::sample_one_per_user(sub, batch, seed);
  return sel;
}

json RoundManifest::to_json() const {
  json j{{"round", round},
         {"method", al::to_string(method)},
         {"ids", ids},
         {"model_ref", model_ref},
         {"label_ref", label_ref}};
  if (!probabilities.empty()) j["probabilities"] = probabilities;
  return j;
}

RoundManifest RoundManifest::from_json(const json& j) {
  RoundManifest r;
  try {
    r.round = j.at("round").get<std::size_t>();
    r.method = parse_selection_method(j.at("method").get<std::string>());
    r.ids = j.at("ids").get<std::vector<std::string>>();
    r.model_ref = j.value("model_ref", "");
    r.label_ref = j.value("label_ref", "");
    if (j.contains("probabilities")) r.probabilities = j["probabilities"].get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("round manifest: ") + e.what(), 0);
  }
  if (!r.probabilities.empty() && r.probabilities.size() != r.ids.size()) {
    throw ParseError("round manifest: probabilities not aligned with ids", 0);
  }
  return r;
}

void save_round(const fs::path& path, const RoundManifest& r) { io::write_file(path, r.to_json().dump(2) + "\n"); }

RoundManifest load_round(const fs::path& path) {
  io::require_file(path, "round manifest");
  try {
    return RoundManifest::from_json(json::parse(io::read_file(path)));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

void check_disjoint(const std::vector<RoundManifest>& rounds) {
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& r : rounds) {
    for (const auto& id : r.ids) {
      auto [it, fresh] = seen.emplace(id, r.round);
      if (!fresh) {
        throw InvalidArgument("post id '" + id + "' selected in round " + std::to_string(it->second) +
                              " and round " + std::to_string(r.round));
      }
    }
  }
}

std::vector<std::string> remaining_pool(const std::vector<std::string>& pool, const std::vector<RoundManifest>& rounds) {
  std::unordered_set<std::string> used;
  for (const auto& r : rounds) used.insert(r.ids.begin(), r.ids.end());
  std::vector<std::string> out;
  for (const auto& id : pool) {
    if (!used.count(id)) out.push_back(id);
  }
  return out;
}

int binary_value_label(annot::Label l) {
  switch (l) {
    case annot::Label::Reflects: return 1;
    case annot::Label::DoesntReflect:
    case annot::Label::Spam: return 0;
    default: break;
  }
  throw InvalidArgument(std::string("label ") + annot::to_string(l) + " cannot enter the training set");
}

json AssembledSet::report() const {
  json rounds = json::array();
  for (std::size_t i = 0; i < per_round.size(); ++i) {
    rounds.push_back({{"round", i + 1}, {"positive", per_round[i].positive}, {"negative", per_round[i].negative}});
  }
  return {{"rounds", std::move(rounds)},
          {"total", {{"positive", total.positive}, {"negative", total.negative}, {"size", dataset.size()}}},
          {"warnings", warnings}};
}

AssembledSet assemble_training_set(const std::vector<RoundManifest>& rounds,
                                   const std::map<std::string, annot::Label>& labels,
                                   const embed::EmbeddingMatrix& embeddings) {
  check_disjoint(rounds);
  AssembledSet out;
  std::vector<std::string> unlabeled;
  for (const auto& r : rounds) {
    ClassCounts counts;
    for (const auto& id : r.ids) {
      auto it = labels.find(id);
      if (it == labels.end()) {
        unlabeled.push_back(id);
        continue;
      }
      const int y = binary_value_label(it->second);
      (y == 1 ? counts.positive : counts.negative)++;
      out.dataset.ids.push_back(id);
      out.dataset.labels.push_back(y);
    }
    out.total.positive += counts.positive;
    out.total.negative += counts.negative;
    out.per_round.push_back(counts);
  }
  if (!unlabeled.empty()) {
    throw InvalidArgument(std::to_string(unlabeled.size()) + " selected posts have no final label (first: '" +
                          unlabeled.front() + "')");
  }
  if (out.dataset.ids.empty()) throw InvalidArgument("no rounds to assemble");
  out.dataset.features = embeddings.rows(out.dataset.ids);
  if (out.total.positive == 0 || out.total.negative == 0) {
    out.warnings.push_back("training set has a single class");
  }
  return out;
}

}  // namespace valdet::al
