#include "valdet/alpha.hpp"

#include <map>

#include "valdet/error.hpp"

namespace valdet::annot {

AlphaResult krippendorff_alpha_units(const std::vector<std::vector<int>>& units) {
  // Coincidence matrix o[c][k] over category codes.
  std::map<int, std::map<int, double>> o;
  AlphaResult r;
  for (const auto& unit : units) {
    const auto m = unit.size();
    if (m < 2) continue;
    ++r.units_used;
    std::map<int, double> counts;
    for (int c : unit) counts[c] += 1.0;
    const double weight = 1.0 / static_cast<double>(m - 1);
    for (const auto& [c, nc] : counts) {
      for (const auto& [k, nk] : counts) {
        // Ordered pairs of distinct values: nc*nk across categories, nc*(nc-1) within.
        o[c][k] += (c == k ? nc * (nc - 1.0) : nc * nk) * weight;
      }
    }
  }
  if (r.units_used == 0) throw InvalidArgument("alpha needs at least one unit with two or more codes");

  std::map<int, double> n_c;
  double n = 0.0;
  double disagree_o = 0.0;
  for (const auto& [c, row] : o) {
    for (const auto& [k, v] : row) {
      n_c[c] += v;
      n += v;
      if (c != k) disagree_o += v;
    }
  }
  double disagree_e = 0.0;
  for (const auto& [c, a] : n_c) {
    for (const auto& [k, b] : n_c) {
      if (c != k) disagree_e += a * b;
    }
  }
  r.pairable_values = static_cast<std::size_t>(n + 0.5);
  r.observed_disagreement = disagree_o / n;
  r.expected_disagreement = n > 1.0 ? disagree_e / (n * (n - 1.0)) : 0.0;
  if (r.expected_disagreement == 0.0) {
    r.degenerate = true;
    r.alpha = 1.0;
  } else {
    r.alpha = 1.0 - r.observed_disagreement / r.expected_disagreement;
  }
  return r;
}

AlphaResult krippendorff_alpha(const std::vector<AnnotationRecord>& records, const std::optional<MergeMap>& merge) {
  std::vector<std::vector<int>> units;
  for (const auto& [id, recs] : group_by_post(records)) {
    std::vector<int> codes;
    codes.reserve(recs.size());
    for (const auto& rec : recs) codes.push_back(label_index(merge ? apply_merge(rec.label, *merge) : rec.label));
    units.push_back(std::move(codes));
  }
  auto r = krippendorff_alpha_units(units);
  r.merge = merge;
  return r;
}

nlohmann::json AlphaResult::to_json() const {
  nlohmann::json j{{"alpha", alpha},
                   {"observed_disagreement", observed_disagreement},
                   {"expected_disagreement", expected_disagreement},
                   {"units_used", units_used},
                   {"pairable_values", pairable_values},
                   {"degenerate", degenerate}};
  if (merge) {
    nlohmann::json mm = nlohmann::json::object();
    for (const auto& [from, to] : *merge) mm[to_string(from)] = to_string(to);
    j["merge"] = mm;
  }
  return j;
}

}  // namespace valdet::annot
