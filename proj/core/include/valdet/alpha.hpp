#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "valdet/annotations.hpp"

namespace valdet::annot {

struct AlphaResult {
  double alpha = 1.0;
  double observed_disagreement = 0.0;  // D_o
  double expected_disagreement = 0.0;  // D_e
  std::size_t units_used = 0;          // units with >= 2 codes
  std::size_t pairable_values = 0;     // n
  bool degenerate = false;             // D_e == 0: alpha reported as 1
  std::optional<MergeMap> merge;

  nlohmann::json to_json() const;
};

/// Nominal Krippendorff's alpha from a coincidence matrix. Each unit lists
/// the codes it received (missing values are simply absent); units with
/// fewer than two codes are skipped, and pairs within a unit of m codes are
/// weighted by 1/(m-1).
AlphaResult krippendorff_alpha_units(const std::vector<std::vector<int>>& units);

/// One unit per post over the given records; the merge map is applied to
/// labels before coding.
AlphaResult krippendorff_alpha(const std::vector<AnnotationRecord>& records,
                               const std::optional<MergeMap>& merge = std::nullopt);

}  // namespace valdet::annot
