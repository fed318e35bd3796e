#include "mergesam/baselines.hpp"

#include <cmath>
#include <string>

#include "mergesam/error.hpp"

namespace mergesam {

namespace {

void require_compatible(const Image& a, const Image& b) {
  if (a.dims != b.dims || a.bands != b.bands) {
    throw ValidationError("cva: image size mismatch " + std::to_string(a.dims.width) + "x" +
                          std::to_string(a.dims.height) + "x" + std::to_string(a.bands) + " vs " +
                          std::to_string(b.dims.width) + "x" + std::to_string(b.dims.height) + "x" +
                          std::to_string(b.bands));
  }
  if (a.data.size() != a.dims.pixel_count() * a.bands || b.data.size() != a.data.size()) {
    throw ValidationError("cva: image buffer does not match its dims");
  }
}

std::vector<double> band_values(const Image& img, bool zscore) {
  std::vector<double> out(img.data.begin(), img.data.end());
  if (!zscore) return out;
  const std::size_t n = img.dims.pixel_count();
  for (std::uint32_t b = 0; b < img.bands; ++b) {
    double mean = 0.0;
    for (std::size_t p = 0; p < n; ++p) mean += out[p * img.bands + b];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      const double d = out[p * img.bands + b] - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (std::size_t p = 0; p < n; ++p) {
      double& v = out[p * img.bands + b];
      v -= mean;
      if (sd > 0) v /= sd;
    }
  }
  return out;
}

}  // namespace

MagnitudeMap cva_magnitude(const Image& img1, const Image& img2, bool zscore) {
  require_compatible(img1, img2);
  const auto a = band_values(img1, zscore);
  const auto b = band_values(img2, zscore);
  MagnitudeMap out{img1.dims, std::vector<double>(img1.dims.pixel_count())};
  for (std::size_t p = 0; p < out.values.size(); ++p) {
    double acc = 0.0;
    for (std::uint32_t k = 0; k < img1.bands; ++k) {
      const double d = b[p * img1.bands + k] - a[p * img1.bands + k];
      acc += d * d;
    }
    out.values[p] = std::sqrt(acc);
  }
  return out;
}

ChangeMap cva_map(const MagnitudeMap& magnitude, std::size_t bins) {
  ChangeMap out(magnitude.dims);
  const auto theta = otsu_threshold(magnitude.values, bins);
  if (!theta) return out;
  for (std::size_t p = 0; p < magnitude.values.size(); ++p) {
    out.changed[p] = magnitude.values[p] > theta->value ? 1 : 0;
  }
  return out;
}

ChangeMap cva_sam(const Image& img1, const Image& img2, std::span<const ObjectMask> masks1,
                  std::span<const ObjectMask> masks2, std::uint64_t min_area, const CvaOptions& options) {
  const MagnitudeMap magnitude = cva_magnitude(img1, img2, options.zscore);
  ChangeMap out = cva_map(magnitude, options.otsu_bins);

  std::vector<BinaryMask> regions;
  for (const auto* set : {&masks1, &masks2}) {
    for (const ObjectMask& m : *set) {
      require_same_dims(magnitude.dims, m.mask.dims(), "cva_sam");
      regions.push_back(m.mask);
    }
  }
  if (regions.empty()) return out;

  std::vector<BinaryMask> painted;
  painted.reserve(regions.size());
  for (std::size_t idx : area_descending_order(regions)) painted.push_back(std::move(regions[idx]));
  const LabelMap labels = flatten(painted);

  std::vector<double> sums(painted.size() + 1, 0.0);
  std::vector<std::uint64_t> counts(painted.size() + 1, 0);
  for (std::size_t p = 0; p < labels.labels.size(); ++p) {
    sums[labels.labels[p]] += magnitude.values[p];
    ++counts[labels.labels[p]];
  }

  std::vector<std::uint32_t> kept;
  std::vector<double> means;
  for (std::uint32_t label = 1; label < counts.size(); ++label) {
    if (counts[label] == 0 || counts[label] < min_area) continue;
    kept.push_back(label);
    means.push_back(sums[label] / static_cast<double>(counts[label]));
  }
  if (kept.empty()) return out;

  const auto theta = otsu_threshold(means, options.otsu_bins);
  std::vector<std::int8_t> decision(counts.size(), -1);  // -1 = pixel fallback
  for (std::size_t i = 0; i < kept.size(); ++i) {
    decision[kept[i]] = theta && means[i] > theta->value ? 1 : 0;
  }
  for (std::size_t p = 0; p < labels.labels.size(); ++p) {
    const std::int8_t d = decision[labels.labels[p]];
    if (d >= 0) out.changed[p] = static_cast<std::uint8_t>(d);
  }
  return out;
}

}  // namespace mergesam
