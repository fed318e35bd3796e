#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mergesam/change_map.hpp"
#include "mergesam/interchange.hpp"
#include "mergesam/matching.hpp"

namespace mergesam {

inline constexpr std::size_t kDefaultOtsuBins = 256;

/// Average of the cell vectors under a region. Pixel (r, c) reads cell
/// (floor(r * grid_h / H), floor(c * grid_w / W)).
std::vector<double> mean_embedding(const BinaryMask& region, const EmbeddingGrid& grid);

double mse(std::span<const double> a, std::span<const double> b);

struct OtsuThreshold {
  double value = 0.0;         // scores strictly above are the upper class
  std::size_t last_lower_bin = 0;  // bins [0, last_lower_bin] form the lower class
};

/// Upper edge of bin j for a histogram of `bins` equal-width bins over [lo, hi].
double otsu_bin_edge(double lo, double hi, std::size_t bins, std::size_t j);

/// Bin of a value, consistent with the edges: bin(s) <= k iff s <= edge(k + 1).
std::size_t otsu_bin_of(double value, double lo, double hi, std::size_t bins);

/// Otsu's threshold over a histogram of the scores. The threshold is the bin
/// edge maximizing the between-class variance computed from bin centres; ties
/// go to the lowest edge. Returns nullopt for fewer than two distinct values
/// or a range below 1e-12. Optional integer weights repeat each score.
std::optional<OtsuThreshold> otsu_threshold(std::span<const double> scores,
                                            std::size_t bins = kDefaultOtsuBins,
                                            std::span<const std::uint64_t> weights = {});

/// Paints units scoring strictly above the threshold, highest score first.
/// `eligible`, when non-empty, has one flag per unit; ineligible units never
/// change.
ChangeMap classify_and_rasterize(const ComprehensiveSet& set, std::span<const double> scores,
                                 std::optional<double> threshold,
                                 std::span<const std::uint8_t> eligible = {});

struct PipelineConfig {
  double t_iou = kDefaultIouThreshold;
  std::uint64_t min_area = kDefaultMinArea;
  std::size_t otsu_bins = kDefaultOtsuBins;
  bool matched_unchanged = false;  // matched units skip thresholding
  bool area_weighted = false;      // Otsu weights each score by unit area
};

struct ScoreRow {
  std::size_t unit_index = 0;
  UnitKind kind = UnitKind::matched;
  std::uint64_t area = 0;
  double score = 0.0;
  bool changed = false;
};

struct PipelineResult {
  ChangeMap change_map;
  std::vector<ScoreRow> scores;
  std::optional<OtsuThreshold> threshold;
  std::size_t pair_count = 0;
};

PipelineResult run_pipeline(std::span<const ObjectMask> masks1, std::span<const ObjectMask> masks2,
                            const EmbeddingGrid& emb1, const EmbeddingGrid& emb2, GridDims dims,
                            const PipelineConfig& config);

/// CSV with header unit_index,kind,area,score,changed.
std::string format_score_table(std::span<const ScoreRow> rows);

}  // namespace mergesam
