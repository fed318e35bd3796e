#include "mergesam/change_map.hpp"

#include <algorithm>

namespace mergesam {

std::uint64_t ChangeMap::changed_count() const {
  return static_cast<std::uint64_t>(std::count_if(changed.begin(), changed.end(),
                                                  [](std::uint8_t v) { return v != 0; }));
}

BinaryMask ChangeMap::to_mask() const { return rle_encode(dims, changed); }

ChangeMap ChangeMap::from_mask(const BinaryMask& mask) {
  ChangeMap out;
  out.dims = mask.dims();
  out.changed = rle_decode(mask);
  return out;
}

ChangeMap resize_nearest(const ChangeMap& map, GridDims target) {
  ChangeMap out;
  out.dims = target;
  out.changed = resize_nearest<std::uint8_t>(map.changed, map.dims, target);
  return out;
}

}  // namespace mergesam
