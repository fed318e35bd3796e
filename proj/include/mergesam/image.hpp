#pragma once

#include <cstdint>
#include <vector>

#include "mergesam/raster.hpp"

namespace mergesam {

/// Multi-band raster, pixel-interleaved (band index fastest).
struct Image {
  GridDims dims;
  std::uint32_t bands = 1;
  std::vector<float> data;

  Image() = default;
  Image(GridDims d, std::uint32_t b) : dims(d), bands(b), data(d.pixel_count() * b, 0.0f) {}

  float& at(std::uint32_t row, std::uint32_t col, std::uint32_t band) {
    return data[(static_cast<std::uint64_t>(row) * dims.width + col) * bands + band];
  }
  float at(std::uint32_t row, std::uint32_t col, std::uint32_t band) const {
    return data[(static_cast<std::uint64_t>(row) * dims.width + col) * bands + band];
  }
};

/// Dims after scaling so the longer side equals long_side. The other side is
/// rounded half up and clamped to at least one pixel.
GridDims scaled_dims(GridDims dims, std::uint32_t long_side);

/// Bilinear resample to the given dims, pixel centres aligned.
Image resize_bilinear(const Image& img, GridDims target);

/// Proportional resize so the longer side equals long_side.
Image resize_image(const Image& img, std::uint32_t long_side);

}  // namespace mergesam
