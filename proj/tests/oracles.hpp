#pragma once

// Brute-force reference implementations used only by the tests. They work on
// plain bitmaps and pixel loops and share no code paths with the library
// beyond the public types they are compared against.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using Bitmap = std::vector<std::uint8_t>;

// Deterministic across standard libraries, unlike <random> distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

inline Bitmap random_bitmap(Rng& rng, std::size_t n, double density) {
  Bitmap b(n);
  for (auto& px : b) px = rng.chance(density) ? 1 : 0;
  return b;
}

inline Bitmap rectangle(std::uint32_t w, std::uint32_t h, std::uint32_t x0, std::uint32_t y0,
                        std::uint32_t x1, std::uint32_t y1) {
  Bitmap b(static_cast<std::size_t>(w) * h, 0);
  for (std::uint32_t y = y0; y < y1 && y < h; ++y) {
    for (std::uint32_t x = x0; x < x1 && x < w; ++x) b[static_cast<std::size_t>(y) * w + x] = 1;
  }
  return b;
}

inline std::uint64_t popcount(const Bitmap& b) {
  return static_cast<std::uint64_t>(std::count(b.begin(), b.end(), 1));
}

struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 0;
};

inline Ratio iou_counts(const Bitmap& a, const Bitmap& b) {
  Ratio r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && b[i]) ++r.num;
    if (a[i] || b[i]) ++r.den;
  }
  return r;
}

inline double iou(const Bitmap& a, const Bitmap& b) {
  const Ratio r = iou_counts(a, b);
  return r.den == 0 ? 0.0 : static_cast<double>(r.num) / static_cast<double>(r.den);
}

// 4-connected BFS flood fill; components in discovery (row-major) order.
inline std::vector<Bitmap> components(const Bitmap& b, std::uint32_t w, std::uint32_t h) {
  std::vector<Bitmap> out;
  std::vector<std::uint8_t> seen(b.size(), 0);
  for (std::size_t start = 0; start < b.size(); ++start) {
    if (!b[start] || seen[start]) continue;
    Bitmap comp(b.size(), 0);
    std::deque<std::size_t> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      comp[p] = 1;
      const std::uint32_t x = p % w, y = static_cast<std::uint32_t>(p / w);
      const std::pair<int, int> steps[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      for (auto [dx, dy] : steps) {
        const int nx = static_cast<int>(x) + dx, ny = static_cast<int>(y) + dy;
        if (nx < 0 || ny < 0 || nx >= static_cast<int>(w) || ny >= static_cast<int>(h)) continue;
        const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
        if (b[q] && !seen[q]) {
          seen[q] = 1;
          queue.push_back(q);
        }
      }
    }
    out.push_back(std::move(comp));
  }
  return out;
}

struct Pair {
  std::uint32_t id1, id2;
  double iou;
};

// Enumerate every pair, sort by IoU desc then ids, accept greedily.
inline std::vector<Pair> greedy_match(const std::vector<Bitmap>& set1, const std::vector<std::uint32_t>& ids1,
                                      const std::vector<Bitmap>& set2, const std::vector<std::uint32_t>& ids2,
                                      double t_iou) {
  std::vector<Pair> cands;
  for (std::size_t i = 0; i < set1.size(); ++i) {
    for (std::size_t j = 0; j < set2.size(); ++j) {
      const double v = iou(set1[i], set2[j]);
      if (v >= t_iou) cands.push_back({ids1[i], ids2[j], v});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Pair& a, const Pair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.id1 != b.id1) return a.id1 < b.id1;
    return a.id2 < b.id2;
  });
  std::vector<Pair> out;
  std::vector<std::uint32_t> used1, used2;
  for (const Pair& c : cands) {
    if (std::find(used1.begin(), used1.end(), c.id1) != used1.end()) continue;
    if (std::find(used2.begin(), used2.end(), c.id2) != used2.end()) continue;
    used1.push_back(c.id1);
    used2.push_back(c.id2);
    out.push_back(c);
  }
  return out;
}

// Per-pixel last-writer labels after painting masks in area-descending order
// (stable on input order). Returns the index into `masks` + 1, 0 = none.
inline std::vector<std::uint32_t> paint_labels(const std::vector<Bitmap>& masks, std::size_t n) {
  std::vector<std::size_t> order(masks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return popcount(masks[a]) > popcount(masks[b]); });
  std::vector<std::uint32_t> labels(n, 0);
  for (std::size_t idx : order) {
    for (std::size_t p = 0; p < n; ++p) {
      if (masks[idx][p]) labels[p] = static_cast<std::uint32_t>(idx + 1);
    }
  }
  return labels;
}

// Overlay partition: pixel groups keyed by (label1, label2), split into
// 4-connected pieces, keeping pieces of at least min_area pixels.
inline std::vector<Bitmap> overlay_units(const std::vector<Bitmap>& left1, const std::vector<Bitmap>& left2,
                                         std::uint32_t w, std::uint32_t h, std::uint64_t min_area) {
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const auto l1 = paint_labels(left1, n);
  const auto l2 = paint_labels(left2, n);
  std::map<std::pair<std::uint32_t, std::uint32_t>, Bitmap> groups;
  for (std::size_t p = 0; p < n; ++p) {
    if (l1[p] == 0 && l2[p] == 0) continue;
    auto& g = groups[{l1[p], l2[p]}];
    if (g.empty()) g.assign(n, 0);
    g[p] = 1;
  }
  std::vector<Bitmap> out;
  for (const auto& [key, g] : groups) {
    for (auto& c : components(g, w, h)) {
      if (popcount(c) >= min_area) out.push_back(std::move(c));
    }
  }
  return out;
}

// Exhaustive Otsu over every bin boundary. Each sample's bin is the number of
// interior edges it lies strictly above; between-class separation in bin
// units is compared as exact rationals (n0*n1*(m0 - m1)^2 with m = S/n).
struct OtsuPick {
  std::size_t last_lower_bin;
};

template <typename EdgeFn>
std::optional<OtsuPick> otsu_exhaustive(const std::vector<double>& scores, std::size_t bins, EdgeFn edge) {
  if (scores.empty()) return std::nullopt;
  const double lo = *std::min_element(scores.begin(), scores.end());
  const double hi = *std::max_element(scores.begin(), scores.end());
  if (!(hi > lo) || hi - lo < 1e-12) return std::nullopt;
  std::vector<std::size_t> bin(scores.size(), 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = 1; j < bins; ++j) {
      if (scores[i] > edge(lo, hi, bins, j)) ++bin[i];
    }
  }
  using i128 = __int128;
  std::optional<OtsuPick> best;
  i128 best_num = 0, best_den = 1;
  for (std::size_t k = 0; k + 1 < bins; ++k) {
    i128 n0 = 0, n1 = 0, s0 = 0, s1 = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (bin[i] <= k) {
        ++n0;
        s0 += static_cast<i128>(bin[i]);
      } else {
        ++n1;
        s1 += static_cast<i128>(bin[i]);
      }
    }
    if (n0 == 0 || n1 == 0) continue;
    // n0*n1*(s0/n0 - s1/n1)^2 = (n1*s0 - n0*s1)^2 / (n0*n1)
    const i128 d = n1 * s0 - n0 * s1;
    const i128 num = d * d, den = n0 * n1;
    if (!best || num * best_den > best_num * den) {
      best = OtsuPick{k};
      best_num = num;
      best_den = den;
    }
  }
  return best;
}

struct Metrics {
  double precision, recall, f1, oa, kappa;
};

inline Metrics direct_metrics(const Bitmap& pred, const Bitmap& ref) {
  double tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] && ref[i]) tp += 1;
    if (pred[i] && !ref[i]) fp += 1;
    if (!pred[i] && ref[i]) fn += 1;
    if (!pred[i] && !ref[i]) tn += 1;
  }
  const double n = tp + fp + fn + tn;
  Metrics m{};
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.oa = (tp + tn) / n;
  const double po = m.oa;
  const double pe = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (n * n);
  m.kappa = pe < 1 ? (po - pe) / (1 - pe) : 0.0;
  return m;
}

}  // namespace oracle
