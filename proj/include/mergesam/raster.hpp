#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mergesam {

struct GridDims {
  std::uint32_t width = 1;
  std::uint32_t height = 1;

  std::uint64_t pixel_count() const noexcept {
    return static_cast<std::uint64_t>(width) * height;
  }
  friend bool operator==(const GridDims&, const GridDims&) = default;
};

// Throws ValidationError for zero extents or grids larger than 2^32 - 1 pixels.
GridDims make_dims(std::uint64_t width, std::uint64_t height);

void require_same_dims(const GridDims& a, const GridDims& b, const char* what);

struct BBox {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t w = 0;
  std::uint32_t h = 0;

  friend bool operator==(const BBox&, const BBox&) = default;
};

bool bboxes_overlap(const BBox& a, const BBox& b) noexcept;

// Half-open range [begin, end) of one-pixels in row-major linear index space.
struct Interval {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Run-length encoded pixel set over a fixed grid.
///
/// Runs follow a row-major scan and alternate zero/one starting with zeros, so
/// a mask whose first pixel is set begins with a zero-length run. Only the
/// first run may be zero; the runs always sum to the pixel count.
class BinaryMask {
 public:
  BinaryMask() : BinaryMask(GridDims{}) {}
  explicit BinaryMask(GridDims dims);

  /// Validates the run invariants and throws ValidationError on violation.
  static BinaryMask from_runs(GridDims dims, std::vector<std::uint32_t> runs);

  /// Intervals must be sorted and non-overlapping; touching intervals merge.
  static BinaryMask from_intervals(GridDims dims, std::span<const Interval> intervals);

  const GridDims& dims() const noexcept { return dims_; }
  const std::vector<std::uint32_t>& runs() const noexcept { return runs_; }
  std::uint64_t area() const noexcept { return area_; }
  bool empty() const noexcept { return area_ == 0; }

  std::vector<Interval> intervals() const;

  // Tightest box around the one-pixels; all zero for an empty mask.
  BBox bbox() const;

  bool test(std::uint32_t row, std::uint32_t col) const;

  friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.dims_ == b.dims_ && a.runs_ == b.runs_;
  }

 private:
  GridDims dims_;
  std::vector<std::uint32_t> runs_;
  std::uint64_t area_ = 0;
};

/// Nonzero bytes are treated as set. Throws ValidationError when the bitmap
/// length does not match the grid.
BinaryMask rle_encode(GridDims dims, std::span<const std::uint8_t> bitmap);

/// Row-major 0/1 bitmap.
std::vector<std::uint8_t> rle_decode(const BinaryMask& mask);

std::uint64_t intersection_area(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_difference(const BinaryMask& a, const BinaryMask& b);

/// |a ∩ b| / |a ∪ b|, or 0 when both masks are empty.
double iou(const BinaryMask& a, const BinaryMask& b);

struct LabelMap {
  GridDims dims;
  std::vector<std::uint32_t> labels;  // row-major, 0 = background

  LabelMap() = default;
  explicit LabelMap(GridDims d) : dims(d), labels(d.pixel_count(), 0) {}

  std::uint32_t at(std::uint32_t row, std::uint32_t col) const {
    return labels[static_cast<std::uint64_t>(row) * dims.width + col];
  }
  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

/// Paints masks in the given order; mask i is label i + 1 and later masks
/// overwrite earlier ones. Callers wanting small objects to survive inside
/// large ones sort by area descending first.
LabelMap flatten(std::span<const BinaryMask> masks);

/// Permutation sorting masks by area descending, ties by original index.
std::vector<std::size_t> area_descending_order(std::span<const BinaryMask> masks);

/// 4-connected components, sorted by area descending and then by the
/// row-major index of each component's first pixel.
std::vector<BinaryMask> connected_components(const BinaryMask& mask);

/// Nearest-neighbour resampling: source index floor((i + 0.5) * src / dst).
template <typename T>
std::vector<T> resize_nearest(std::span<const T> values, GridDims src, GridDims dst) {
  std::vector<T> out(dst.pixel_count());
  std::vector<std::uint32_t> cols(dst.width);
  for (std::uint32_t c = 0; c < dst.width; ++c) {
    cols[c] = static_cast<std::uint32_t>(((2ull * c + 1) * src.width) / (2ull * dst.width));
  }
  for (std::uint32_t r = 0; r < dst.height; ++r) {
    const auto sr = static_cast<std::uint32_t>(((2ull * r + 1) * src.height) / (2ull * dst.height));
    const T* src_row = values.data() + static_cast<std::uint64_t>(sr) * src.width;
    T* dst_row = out.data() + static_cast<std::uint64_t>(r) * dst.width;
    for (std::uint32_t c = 0; c < dst.width; ++c) dst_row[c] = src_row[cols[c]];
  }
  return out;
}

LabelMap resize_nearest(const LabelMap& map, GridDims target);

}  // namespace mergesam
