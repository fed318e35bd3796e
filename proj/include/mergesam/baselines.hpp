#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mergesam/change_map.hpp"
#include "mergesam/image.hpp"
#include "mergesam/interchange.hpp"
#include "mergesam/scoring.hpp"

namespace mergesam {

struct MagnitudeMap {
  GridDims dims;
  std::vector<double> values;  // row-major, >= 0
};

struct CvaOptions {
  bool zscore = false;  // normalize each band of each image to zero mean, unit variance
  std::size_t otsu_bins = kDefaultOtsuBins;
};

/// Euclidean norm of the per-pixel spectral difference.
MagnitudeMap cva_magnitude(const Image& img1, const Image& img2, bool zscore = false);

/// Pixelwise Otsu over all magnitudes; changed iff magnitude > threshold.
ChangeMap cva_map(const MagnitudeMap& magnitude, std::size_t bins = kDefaultOtsuBins);

/// Object-level CVA: both epochs' masks are flattened jointly in
/// area-descending order, each visible region is scored by its mean
/// magnitude and Otsu runs over the region means. Pixels outside every
/// region, or in regions with fewer than min_area visible pixels, take the
/// pixelwise CVA decision.
ChangeMap cva_sam(const Image& img1, const Image& img2, std::span<const ObjectMask> masks1,
                  std::span<const ObjectMask> masks2, std::uint64_t min_area, const CvaOptions& options = {});

}  // namespace mergesam
