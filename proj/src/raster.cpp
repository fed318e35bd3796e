#include "mergesam/raster.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "mergesam/error.hpp"

namespace mergesam {

GridDims make_dims(std::uint64_t width, std::uint64_t height) {
  if (width == 0 || height == 0) {
    throw ValidationError("grid dims must be positive, got " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
  constexpr std::uint64_t max_pixels = std::numeric_limits<std::uint32_t>::max();
  if (width > max_pixels || height > max_pixels || width * height > max_pixels) {
    throw ValidationError("grid " + std::to_string(width) + "x" + std::to_string(height) +
                          " exceeds the supported pixel count");
  }
  return GridDims{static_cast<std::uint32_t>(width), static_cast<std::uint32_t>(height)};
}

void require_same_dims(const GridDims& a, const GridDims& b, const char* what) {
  if (a != b) {
    throw ValidationError(std::string(what) + ": dimension mismatch " + std::to_string(a.width) +
                          "x" + std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                          std::to_string(b.height));
  }
}

bool bboxes_overlap(const BBox& a, const BBox& b) noexcept {
  if (a.w == 0 || a.h == 0 || b.w == 0 || b.h == 0) return false;
  return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
}

BinaryMask::BinaryMask(GridDims dims)
    : dims_(dims), runs_{static_cast<std::uint32_t>(dims.pixel_count())} {}

BinaryMask BinaryMask::from_runs(GridDims dims, std::vector<std::uint32_t> runs) {
  if (runs.empty()) throw ValidationError("rle: empty run list");
  std::uint64_t total = 0;
  std::uint64_t area = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i > 0 && runs[i] == 0) {
      throw ValidationError("rle: zero-length run at position " + std::to_string(i));
    }
    total += runs[i];
    if (i % 2 == 1) area += runs[i];
  }
  if (total != dims.pixel_count()) {
    throw ValidationError("rle: runs sum to " + std::to_string(total) + ", expected " +
                          std::to_string(dims.pixel_count()));
  }
  BinaryMask m(dims);
  m.runs_ = std::move(runs);
  m.area_ = area;
  return m;
}

BinaryMask BinaryMask::from_intervals(GridDims dims, std::span<const Interval> intervals) {
  const std::uint64_t n = dims.pixel_count();
  std::vector<std::uint32_t> runs;
  std::uint64_t cursor = 0;
  std::uint64_t area = 0;
  for (const Interval& iv : intervals) {
    if (iv.end <= iv.begin) continue;
    if (iv.begin < cursor || iv.end > n) {
      throw InvariantError("intervals must be sorted, disjoint and inside the grid");
    }
    if (iv.begin == cursor && !runs.empty()) {
      runs.back() += static_cast<std::uint32_t>(iv.end - iv.begin);
    } else {
      runs.push_back(static_cast<std::uint32_t>(iv.begin - cursor));
      runs.push_back(static_cast<std::uint32_t>(iv.end - iv.begin));
    }
    area += iv.end - iv.begin;
    cursor = iv.end;
  }
  if (cursor < n || runs.empty()) runs.push_back(static_cast<std::uint32_t>(n - cursor));
  BinaryMask m(dims);
  m.runs_ = std::move(runs);
  m.area_ = area;
  return m;
}

std::vector<Interval> BinaryMask::intervals() const {
  std::vector<Interval> out;
  out.reserve(runs_.size() / 2);
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < runs_.size(); ++i) {
    if (i % 2 == 1) out.push_back({pos, pos + runs_[i]});
    pos += runs_[i];
  }
  return out;
}

BBox BinaryMask::bbox() const {
  if (empty()) return {};
  const std::uint64_t w = dims_.width;
  std::uint64_t row0 = std::numeric_limits<std::uint64_t>::max(), row1 = 0;
  std::uint64_t col0 = w, col1 = 0;
  for (const Interval& iv : intervals()) {
    const std::uint64_t r0 = iv.begin / w, r1 = (iv.end - 1) / w;
    row0 = std::min(row0, r0);
    row1 = std::max(row1, r1);
    if (r0 != r1) {
      col0 = 0;
      col1 = w - 1;
    } else {
      col0 = std::min(col0, iv.begin % w);
      col1 = std::max(col1, (iv.end - 1) % w);
    }
  }
  return BBox{static_cast<std::uint32_t>(col0), static_cast<std::uint32_t>(row0),
              static_cast<std::uint32_t>(col1 - col0 + 1), static_cast<std::uint32_t>(row1 - row0 + 1)};
}

bool BinaryMask::test(std::uint32_t row, std::uint32_t col) const {
  const std::uint64_t idx = static_cast<std::uint64_t>(row) * dims_.width + col;
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < runs_.size(); ++i) {
    pos += runs_[i];
    if (idx < pos) return i % 2 == 1;
  }
  return false;
}

BinaryMask rle_encode(GridDims dims, std::span<const std::uint8_t> bitmap) {
  if (bitmap.size() != dims.pixel_count()) {
    throw ValidationError("rle_encode: bitmap has " + std::to_string(bitmap.size()) +
                          " pixels, grid expects " + std::to_string(dims.pixel_count()));
  }
  std::vector<std::uint32_t> runs;
  std::uint32_t count = 0;
  bool value = false;
  for (std::uint8_t px : bitmap) {
    const bool set = px != 0;
    if (set != value) {
      runs.push_back(count);
      count = 0;
      value = set;
    }
    ++count;
  }
  runs.push_back(count);
  return BinaryMask::from_runs(dims, std::move(runs));
}

std::vector<std::uint8_t> rle_decode(const BinaryMask& mask) {
  std::vector<std::uint8_t> out(mask.dims().pixel_count(), 0);
  for (const Interval& iv : mask.intervals()) {
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(iv.begin),
              out.begin() + static_cast<std::ptrdiff_t>(iv.end), std::uint8_t{1});
  }
  return out;
}

namespace {

std::vector<Interval> intersect_intervals(const std::vector<Interval>& a,
                                          const std::vector<Interval>& b) {
  std::vector<Interval> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const std::uint64_t lo = std::max(a[i].begin, b[j].begin);
    const std::uint64_t hi = std::min(a[i].end, b[j].end);
    if (lo < hi) out.push_back({lo, hi});
    if (a[i].end < b[j].end) {
      ++i;
    } else {
      ++j;
    }
  }
  return out;
}

}  // namespace

std::uint64_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a.dims(), b.dims(), "intersection");
  std::uint64_t total = 0;
  for (const Interval& iv : intersect_intervals(a.intervals(), b.intervals())) {
    total += iv.end - iv.begin;
  }
  return total;
}

BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a.dims(), b.dims(), "intersection");
  const auto out = intersect_intervals(a.intervals(), b.intervals());
  return BinaryMask::from_intervals(a.dims(), out);
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a.dims(), b.dims(), "union");
  const auto ia = a.intervals();
  const auto ib = b.intervals();
  std::vector<Interval> merged;
  merged.reserve(ia.size() + ib.size());
  std::merge(ia.begin(), ia.end(), ib.begin(), ib.end(), std::back_inserter(merged),
             [](const Interval& x, const Interval& y) { return x.begin < y.begin; });
  std::vector<Interval> out;
  for (const Interval& iv : merged) {
    if (!out.empty() && iv.begin <= out.back().end) {
      out.back().end = std::max(out.back().end, iv.end);
    } else {
      out.push_back(iv);
    }
  }
  return BinaryMask::from_intervals(a.dims(), out);
}

BinaryMask mask_difference(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a.dims(), b.dims(), "difference");
  const auto ib = b.intervals();
  std::vector<Interval> out;
  std::size_t j = 0;
  for (Interval iv : a.intervals()) {
    while (j < ib.size() && ib[j].end <= iv.begin) ++j;
    std::size_t k = j;
    while (k < ib.size() && ib[k].begin < iv.end) {
      if (ib[k].begin > iv.begin) out.push_back({iv.begin, ib[k].begin});
      iv.begin = std::max(iv.begin, ib[k].end);
      ++k;
    }
    if (iv.begin < iv.end) out.push_back(iv);
  }
  return BinaryMask::from_intervals(a.dims(), out);
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  const std::uint64_t inter = intersection_area(a, b);
  const std::uint64_t uni = a.area() + b.area() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

LabelMap flatten(std::span<const BinaryMask> masks) {
  if (masks.empty()) throw ValidationError("flatten: no masks to size the label map");
  LabelMap out(masks.front().dims());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    require_same_dims(out.dims, masks[i].dims(), "flatten");
    const auto label = static_cast<std::uint32_t>(i + 1);
    for (const Interval& iv : masks[i].intervals()) {
      std::fill(out.labels.begin() + static_cast<std::ptrdiff_t>(iv.begin),
                out.labels.begin() + static_cast<std::ptrdiff_t>(iv.end), label);
    }
  }
  return out;
}

std::vector<std::size_t> area_descending_order(std::span<const BinaryMask> masks) {
  std::vector<std::size_t> order(masks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return masks[x].area() > masks[y].area();
  });
  return order;
}

namespace {

struct Segment {
  std::uint32_t row;
  std::uint32_t col_begin;
  std::uint32_t col_end;  // exclusive
};

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

std::vector<BinaryMask> connected_components(const BinaryMask& mask) {
  const std::uint64_t w = mask.dims().width;
  std::vector<Segment> segs;
  for (const Interval& iv : mask.intervals()) {
    std::uint64_t pos = iv.begin;
    while (pos < iv.end) {
      const std::uint64_t row = pos / w;
      const std::uint64_t row_end = std::min(iv.end, (row + 1) * w);
      segs.push_back({static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(pos - row * w),
                      static_cast<std::uint32_t>(row_end - row * w)});
      pos = row_end;
    }
  }

  std::vector<std::size_t> parent(segs.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});

  // Segments are in row-major order; sweep each row against the previous one.
  std::size_t prev_begin = 0, prev_end = 0;
  std::size_t i = 0;
  while (i < segs.size()) {
    const std::uint32_t row = segs[i].row;
    std::size_t row_end = i;
    while (row_end < segs.size() && segs[row_end].row == row) ++row_end;
    const bool adjacent = prev_end > prev_begin && segs[prev_begin].row + 1 == row;
    if (adjacent) {
      std::size_t p = prev_begin;
      for (std::size_t c = i; c < row_end; ++c) {
        while (p < prev_end && segs[p].col_end <= segs[c].col_begin) ++p;
        for (std::size_t q = p; q < prev_end && segs[q].col_begin < segs[c].col_end; ++q) {
          const std::size_t ra = find_root(parent, q), rb = find_root(parent, c);
          if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
        }
      }
    }
    prev_begin = i;
    prev_end = row_end;
    i = row_end;
  }

  // Roots are the smallest segment index in each component, so iterating in
  // segment order visits components by first pixel.
  std::vector<std::size_t> slot(segs.size(), 0);
  std::vector<std::vector<Interval>> groups;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const std::size_t root = find_root(parent, s);
    if (root == s) {
      slot[s] = groups.size();
      groups.emplace_back();
    }
    const std::uint64_t base = static_cast<std::uint64_t>(segs[s].row) * w;
    groups[slot[root]].push_back({base + segs[s].col_begin, base + segs[s].col_end});
  }

  std::vector<BinaryMask> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(BinaryMask::from_intervals(mask.dims(), g));
  std::stable_sort(out.begin(), out.end(),
                   [](const BinaryMask& a, const BinaryMask& b) { return a.area() > b.area(); });
  return out;
}

LabelMap resize_nearest(const LabelMap& map, GridDims target) {
  LabelMap out;
  out.dims = target;
  out.labels = resize_nearest<std::uint32_t>(map.labels, map.dims, target);
  return out;
}

}  // namespace mergesam
