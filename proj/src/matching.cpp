#include "mergesam/matching.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "mergesam/error.hpp"

namespace mergesam {

namespace {

void require_unique_ids(std::span<const ObjectMask> set, const char* epoch) {
  std::unordered_set<std::uint32_t> seen;
  for (const ObjectMask& m : set) {
    if (!seen.insert(m.id).second) {
      throw ValidationError(std::string("matching: duplicate mask id ") + std::to_string(m.id) + " in " + epoch);
    }
  }
}

const ObjectMask& find_by_id(std::span<const ObjectMask> set, std::uint32_t id) {
  auto it = std::find_if(set.begin(), set.end(), [&](const ObjectMask& m) { return m.id == id; });
  if (it == set.end()) throw InvariantError("matched id " + std::to_string(id) + " not found in its mask set");
  return *it;
}

}  // namespace

std::string_view to_string(UnitKind kind) {
  switch (kind) {
    case UnitKind::matched:
      return "matched";
    case UnitKind::split_both:
      return "split_both";
    case UnitKind::only_t1:
      return "only_t1";
    case UnitKind::only_t2:
      return "only_t2";
  }
  return "unknown";
}

MatchResult match_masks(std::span<const ObjectMask> set1, std::span<const ObjectMask> set2, double t_iou) {
  if (!(t_iou > 0.0 && t_iou <= 1.0)) {
    throw ValidationError("matching: t_iou must lie in (0, 1], got " + std::to_string(t_iou));
  }
  require_unique_ids(set1, "t1");
  require_unique_ids(set2, "t2");
  if (!set1.empty() && !set2.empty()) {
    require_same_dims(set1.front().mask.dims(), set2.front().mask.dims(), "matching");
  }

  std::vector<BBox> boxes2;
  boxes2.reserve(set2.size());
  for (const ObjectMask& m : set2) boxes2.push_back(m.mask.bbox());

  struct Candidate {
    std::size_t i, j;
    MatchPair pair;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < set1.size(); ++i) {
    const BBox box1 = set1[i].mask.bbox();
    for (std::size_t j = 0; j < set2.size(); ++j) {
      if (!bboxes_overlap(box1, boxes2[j])) continue;
      const double value = iou(set1[i].mask, set2[j].mask);
      if (value >= t_iou) candidates.push_back({i, j, {set1[i].id, set2[j].id, value}});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.pair.iou != b.pair.iou) return a.pair.iou > b.pair.iou;
    if (a.pair.mask_t1 != b.pair.mask_t1) return a.pair.mask_t1 < b.pair.mask_t1;
    return a.pair.mask_t2 < b.pair.mask_t2;
  });

  std::vector<bool> taken1(set1.size(), false), taken2(set2.size(), false);
  MatchResult out;
  for (const Candidate& c : candidates) {
    if (taken1[c.i] || taken2[c.j]) continue;
    taken1[c.i] = taken2[c.j] = true;
    out.pairs.push_back(c.pair);
  }
  for (std::size_t i = 0; i < set1.size(); ++i) {
    if (!taken1[i]) out.leftover1.push_back(set1[i]);
  }
  for (std::size_t j = 0; j < set2.size(); ++j) {
    if (!taken2[j]) out.leftover2.push_back(set2[j]);
  }
  return out;
}

namespace {

struct Flattened {
  LabelMap labels;
  std::vector<std::uint32_t> ids;  // label - 1 -> mask id
};

Flattened flatten_epoch(std::span<const ObjectMask> masks, GridDims dims) {
  Flattened out{LabelMap(dims), {}};
  if (masks.empty()) return out;
  std::vector<BinaryMask> regions;
  regions.reserve(masks.size());
  for (const ObjectMask& m : masks) {
    require_same_dims(dims, m.mask.dims(), "split_masks");
    regions.push_back(m.mask);
  }
  const auto order = area_descending_order(regions);
  std::vector<BinaryMask> painted;
  painted.reserve(order.size());
  for (std::size_t idx : order) {
    painted.push_back(std::move(regions[idx]));
    out.ids.push_back(masks[idx].id);
  }
  out.labels = flatten(painted);
  return out;
}

}  // namespace

std::vector<AnalysisUnit> split_masks(std::span<const ObjectMask> leftover1,
                                      std::span<const ObjectMask> leftover2, GridDims dims,
                                      std::uint64_t min_area) {
  if (min_area == 0) throw ValidationError("split_masks: min_area must be at least 1");
  if (leftover1.empty() && leftover2.empty()) return {};

  const Flattened f1 = flatten_epoch(leftover1, dims);
  const Flattened f2 = flatten_epoch(leftover2, dims);

  struct Group {
    std::uint32_t label1, label2;
    std::vector<Interval> pixels;
  };
  std::vector<Group> groups;
  std::unordered_map<std::uint64_t, std::size_t> index;

  const std::uint64_t n = dims.pixel_count();
  std::uint64_t p = 0;
  while (p < n) {
    const std::uint32_t a = f1.labels.labels[p];
    const std::uint32_t b = f2.labels.labels[p];
    std::uint64_t q = p + 1;
    while (q < n && f1.labels.labels[q] == a && f2.labels.labels[q] == b) ++q;
    if (a != 0 || b != 0) {
      const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | b;
      auto [it, inserted] = index.try_emplace(key, groups.size());
      if (inserted) groups.push_back({a, b, {}});
      groups[it->second].pixels.push_back({p, q});
    }
    p = q;
  }

  std::vector<AnalysisUnit> units;
  for (const Group& g : groups) {
    const BinaryMask region = BinaryMask::from_intervals(dims, g.pixels);
    UnitKind kind = UnitKind::split_both;
    if (g.label2 == 0) kind = UnitKind::only_t1;
    if (g.label1 == 0) kind = UnitKind::only_t2;
    for (BinaryMask& comp : connected_components(region)) {
      if (comp.area() < min_area) continue;
      AnalysisUnit unit;
      unit.region = std::move(comp);
      unit.kind = kind;
      if (g.label1 != 0) unit.ids_t1.push_back(f1.ids[g.label1 - 1]);
      if (g.label2 != 0) unit.ids_t2.push_back(f2.ids[g.label2 - 1]);
      units.push_back(std::move(unit));
    }
  }
  return units;
}

ComprehensiveSet build_comprehensive_set(std::span<const MatchPair> pairs,
                                         std::span<const ObjectMask> set1,
                                         std::span<const ObjectMask> set2,
                                         std::vector<AnalysisUnit> split_units, GridDims dims) {
  ComprehensiveSet out;
  out.dims = dims;
  out.units.reserve(pairs.size() + split_units.size());
  for (const MatchPair& pair : pairs) {
    const ObjectMask& a = find_by_id(set1, pair.mask_t1);
    const ObjectMask& b = find_by_id(set2, pair.mask_t2);
    AnalysisUnit unit;
    unit.region = mask_union(a.mask, b.mask);
    unit.kind = UnitKind::matched;
    unit.ids_t1 = {pair.mask_t1};
    unit.ids_t2 = {pair.mask_t2};
    out.units.push_back(std::move(unit));
  }
  for (AnalysisUnit& unit : split_units) {
    require_same_dims(dims, unit.region.dims(), "build_comprehensive_set");
    out.units.push_back(std::move(unit));
  }
  return out;
}

}  // namespace mergesam
