#include "mergesam/scoring.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mergesam/error.hpp"

namespace mergesam {

std::vector<double> mean_embedding(const BinaryMask& region, const EmbeddingGrid& grid) {
  require_same_dims(region.dims(), grid.image, "mean_embedding");
  if (region.empty()) throw ValidationError("mean_embedding: empty region");

  const GridDims dims = region.dims();
  std::vector<std::uint32_t> col_cell(dims.width);
  for (std::uint32_t c = 0; c < dims.width; ++c) {
    col_cell[c] = static_cast<std::uint32_t>(static_cast<std::uint64_t>(c) * grid.grid_w / dims.width);
  }

  // Pixel counts per cell, then a count-weighted sum in cell order.
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(grid.grid_h) * grid.grid_w, 0);
  for (const Interval& iv : region.intervals()) {
    for (std::uint64_t p = iv.begin; p < iv.end; ++p) {
      const std::uint64_t row = p / dims.width;
      const std::uint64_t cell_row = row * grid.grid_h / dims.height;
      ++counts[cell_row * grid.grid_w + col_cell[p - row * dims.width]];
    }
  }

  std::vector<double> sum(grid.dim, 0.0);
  for (std::size_t cell = 0; cell < counts.size(); ++cell) {
    if (counts[cell] == 0) continue;
    const double weight = static_cast<double>(counts[cell]);
    const float* v = grid.values.data() + cell * grid.dim;
    for (std::uint32_t d = 0; d < grid.dim; ++d) sum[d] += weight * v[d];
  }
  const double area = static_cast<double>(region.area());
  for (double& s : sum) s /= area;
  return sum;
}

double mse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("mse: dimension mismatch " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  if (a.empty()) throw ValidationError("mse: empty vectors");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double otsu_bin_edge(double lo, double hi, std::size_t bins, std::size_t j) {
  if (j == 0) return lo;
  if (j >= bins) return hi;
  return lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(bins);
}

std::size_t otsu_bin_of(double value, double lo, double hi, std::size_t bins) {
  const double pos = (value - lo) / (hi - lo) * static_cast<double>(bins);
  std::size_t k = 0;
  if (pos > 0) k = std::min(static_cast<std::size_t>(pos), bins - 1);
  while (k > 0 && value <= otsu_bin_edge(lo, hi, bins, k)) --k;
  while (k + 1 < bins && value > otsu_bin_edge(lo, hi, bins, k + 1)) ++k;
  return k;
}

namespace {

using u128 = unsigned __int128;

// Between-class variance in bin-index units, up to the constant factor 1/N^2:
// (n1*S0 - n0*S1)^2 / (n0*n1), where n are class weights and S weighted sums
// of bin indices. Held as quotient + remainder so comparisons stay exact.
struct Separation {
  u128 quotient = 0;
  u128 remainder = 0;
  u128 denominator = 1;
};

bool greater(const Separation& a, const Separation& b) {
  if (a.quotient != b.quotient) return a.quotient > b.quotient;
  // Both remainders are below their denominators (< 2^64), so products fit.
  return a.remainder * b.denominator > b.remainder * a.denominator;
}

}  // namespace

std::optional<OtsuThreshold> otsu_threshold(std::span<const double> scores, std::size_t bins,
                                            std::span<const std::uint64_t> weights) {
  if (bins < 2) throw ValidationError("otsu: need at least 2 bins");
  if (!weights.empty() && weights.size() != scores.size()) {
    throw ValidationError("otsu: weight count does not match score count");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw ValidationError("otsu: non-finite score");
    if (!weights.empty() && weights[i] == 0) continue;
    lo = std::min(lo, scores[i]);
    hi = std::max(hi, scores[i]);
  }
  if (!(hi > lo) || hi - lo < 1e-12) return std::nullopt;

  std::vector<std::uint64_t> hist(bins, 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::uint64_t w = weights.empty() ? 1 : weights[i];
    if (w == 0) continue;
    hist[otsu_bin_of(scores[i], lo, hi, bins)] += w;
  }

  u128 total = 0, total_sum = 0;
  for (std::size_t k = 0; k < bins; ++k) {
    total += hist[k];
    total_sum += static_cast<u128>(hist[k]) * k;
  }
  // n1*S0 must fit in 64 bits for the squared difference to fit in 128.
  const bool exact = total < (u128{1} << 32) && total * total * (bins - 1) < (u128{1} << 64);

  std::optional<OtsuThreshold> best;
  Separation best_exact;
  long double best_float = -1.0L;
  u128 n0 = 0, s0 = 0;
  for (std::size_t k = 0; k + 1 < bins; ++k) {
    n0 += hist[k];
    s0 += static_cast<u128>(hist[k]) * k;
    const u128 n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const u128 s1 = total_sum - s0;
    bool better = false;
    if (exact) {
      const u128 x = n1 * s0, y = n0 * s1;
      const u128 diff = x > y ? x - y : y - x;
      Separation sep;
      sep.denominator = n0 * n1;
      sep.quotient = diff * diff / sep.denominator;
      sep.remainder = diff * diff % sep.denominator;
      better = !best || greater(sep, best_exact);
      if (better) best_exact = sep;
    } else {
      const long double w0 = static_cast<long double>(n0), w1 = static_cast<long double>(n1);
      const long double m0 = static_cast<long double>(s0) / w0, m1 = static_cast<long double>(s1) / w1;
      const long double sep = w0 * w1 * (m0 - m1) * (m0 - m1);
      better = !best || sep > best_float;
      if (better) best_float = sep;
    }
    if (better) best = OtsuThreshold{otsu_bin_edge(lo, hi, bins, k + 1), k};
  }
  return best;
}

ChangeMap classify_and_rasterize(const ComprehensiveSet& set, std::span<const double> scores,
                                 std::optional<double> threshold, std::span<const std::uint8_t> eligible) {
  if (scores.size() != set.units.size()) {
    throw ValidationError("classify: " + std::to_string(scores.size()) + " scores for " +
                          std::to_string(set.units.size()) + " units");
  }
  if (!eligible.empty() && eligible.size() != set.units.size()) {
    throw ValidationError("classify: eligibility flags do not match the unit count");
  }
  ChangeMap out(set.dims);
  if (!threshold) return out;

  std::vector<std::size_t> changed;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if ((eligible.empty() || eligible[i]) && scores[i] > *threshold) changed.push_back(i);
  }
  std::stable_sort(changed.begin(), changed.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  for (std::size_t i : changed) {
    require_same_dims(set.dims, set.units[i].region.dims(), "classify");
    for (const Interval& iv : set.units[i].region.intervals()) {
      std::fill(out.changed.begin() + static_cast<std::ptrdiff_t>(iv.begin),
                out.changed.begin() + static_cast<std::ptrdiff_t>(iv.end), std::uint8_t{1});
    }
  }
  return out;
}

PipelineResult run_pipeline(std::span<const ObjectMask> masks1, std::span<const ObjectMask> masks2,
                            const EmbeddingGrid& emb1, const EmbeddingGrid& emb2, GridDims dims,
                            const PipelineConfig& config) {
  require_same_dims(dims, emb1.image, "pipeline: t1 embedding");
  require_same_dims(dims, emb2.image, "pipeline: t2 embedding");
  if (emb1.dim != emb2.dim) {
    throw ValidationError("pipeline: embedding depth mismatch " + std::to_string(emb1.dim) + " vs " +
                          std::to_string(emb2.dim));
  }
  for (const ObjectMask& m : masks1) require_same_dims(dims, m.mask.dims(), "pipeline: t1 masks");
  for (const ObjectMask& m : masks2) require_same_dims(dims, m.mask.dims(), "pipeline: t2 masks");

  MatchResult matched = match_masks(masks1, masks2, config.t_iou);
  auto split = split_masks(matched.leftover1, matched.leftover2, dims, config.min_area);
  const ComprehensiveSet set = build_comprehensive_set(matched.pairs, masks1, masks2, std::move(split), dims);

  const std::size_t n = set.units.size();
  std::vector<double> scores(n);
  std::vector<std::uint8_t> eligible(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const BinaryMask& region = set.units[i].region;
    scores[i] = mse(mean_embedding(region, emb1), mean_embedding(region, emb2));
    if (config.matched_unchanged && set.units[i].kind == UnitKind::matched) eligible[i] = 0;
  }

  std::vector<double> pool;
  std::vector<std::uint64_t> weights;
  for (std::size_t i = 0; i < n; ++i) {
    if (!eligible[i]) continue;
    pool.push_back(scores[i]);
    if (config.area_weighted) weights.push_back(set.units[i].region.area());
  }

  PipelineResult result;
  result.pair_count = matched.pairs.size();
  result.threshold = otsu_threshold(pool, config.otsu_bins, weights);
  std::optional<double> theta;
  if (result.threshold) theta = result.threshold->value;
  result.change_map = classify_and_rasterize(set, scores, theta, eligible);

  result.scores.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.scores.push_back({i, set.units[i].kind, set.units[i].region.area(), scores[i],
                             eligible[i] && theta && scores[i] > *theta});
  }
  return result;
}

std::string format_score_table(std::span<const ScoreRow> rows) {
  std::string out = "unit_index,kind,area,score,changed\n";
  for (const ScoreRow& r : rows) {
    out += fmt::format("{},{},{},{},{}\n", r.unit_index, to_string(r.kind), r.area, r.score,
                       r.changed ? 1 : 0);
  }
  return out;
}

}  // namespace mergesam
