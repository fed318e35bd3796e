#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mergesam/interchange.hpp"
#include "mergesam/raster.hpp"

namespace mergesam {

inline constexpr double kDefaultIouThreshold = 0.75;
inline constexpr std::uint64_t kDefaultMinArea = 8;

struct MatchPair {
  std::uint32_t mask_t1 = 0;
  std::uint32_t mask_t2 = 0;
  double iou = 0.0;

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<ObjectMask> leftover1;  // input order preserved
  std::vector<ObjectMask> leftover2;
};

/// Greedy one-to-one matching across epochs.
///
/// Every pair whose bounding boxes overlap and whose IoU reaches t_iou is a
/// candidate. Candidates are visited by IoU descending (ties by (id1, id2)
/// ascending) and accepted when neither mask is taken yet. Ids must be unique
/// within each set.
MatchResult match_masks(std::span<const ObjectMask> set1, std::span<const ObjectMask> set2, double t_iou);

enum class UnitKind { matched, split_both, only_t1, only_t2 };

std::string_view to_string(UnitKind kind);

struct AnalysisUnit {
  BinaryMask region;
  UnitKind kind = UnitKind::matched;
  std::vector<std::uint32_t> ids_t1;
  std::vector<std::uint32_t> ids_t2;
};

/// Overlay partition of the unmatched masks.
///
/// Each epoch's leftovers are flattened in area-descending paint order, every
/// pixel is keyed by its (t1 label, t2 label) pair, and each key's pixels are
/// split into 4-connected components. Components of at least min_area pixels
/// become units. Units are ordered by the first row-major appearance of their
/// key, then by component order.
std::vector<AnalysisUnit> split_masks(std::span<const ObjectMask> leftover1,
                                      std::span<const ObjectMask> leftover2, GridDims dims,
                                      std::uint64_t min_area);

struct ComprehensiveSet {
  GridDims dims;
  std::vector<AnalysisUnit> units;
};

/// Matched units come first, in pair order, with region = union of the pair.
ComprehensiveSet build_comprehensive_set(std::span<const MatchPair> pairs,
                                         std::span<const ObjectMask> set1,
                                         std::span<const ObjectMask> set2,
                                         std::vector<AnalysisUnit> split_units, GridDims dims);

}  // namespace mergesam
