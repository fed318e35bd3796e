#pragma once

#include <cstdint>
#include <vector>

#include "mergesam/raster.hpp"

namespace mergesam {

/// Per-pixel changed (1) / unchanged (0) flags, row-major.
struct ChangeMap {
  GridDims dims;
  std::vector<std::uint8_t> changed;

  ChangeMap() = default;
  explicit ChangeMap(GridDims d) : dims(d), changed(d.pixel_count(), 0) {}

  bool at(std::uint32_t row, std::uint32_t col) const {
    return changed[static_cast<std::uint64_t>(row) * dims.width + col] != 0;
  }
  std::uint64_t changed_count() const;
  BinaryMask to_mask() const;
  static ChangeMap from_mask(const BinaryMask& mask);

  friend bool operator==(const ChangeMap&, const ChangeMap&) = default;
};

ChangeMap resize_nearest(const ChangeMap& map, GridDims target);

}  // namespace mergesam
