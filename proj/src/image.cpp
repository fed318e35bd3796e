#include "mergesam/image.hpp"

#include <algorithm>
#include <cmath>

#include "mergesam/error.hpp"

namespace mergesam {

GridDims scaled_dims(GridDims dims, std::uint32_t long_side) {
  if (long_side == 0) throw ValidationError("resize: long side must be at least 1");
  const std::uint64_t longest = std::max(dims.width, dims.height);
  // round-half-up of side * long_side / longest in exact integer arithmetic
  auto scale = [&](std::uint64_t side) {
    const std::uint64_t v = (2 * side * long_side + longest) / (2 * longest);
    return std::max<std::uint64_t>(v, 1);
  };
  return make_dims(scale(dims.width), scale(dims.height));
}

Image resize_bilinear(const Image& img, GridDims target) {
  if (img.data.empty() || img.bands == 0) throw ValidationError("resize: empty image");
  if (target == img.dims) return img;

  struct Tap {
    std::uint32_t lo, hi;
    float frac;
  };
  auto taps = [](std::uint32_t src, std::uint32_t dst) {
    std::vector<Tap> out(dst);
    const double scale = static_cast<double>(src) / dst;
    for (std::uint32_t i = 0; i < dst; ++i) {
      double x = (i + 0.5) * scale - 0.5;
      x = std::clamp(x, 0.0, static_cast<double>(src - 1));
      const auto lo = static_cast<std::uint32_t>(std::floor(x));
      const std::uint32_t hi = std::min(lo + 1, src - 1);
      out[i] = {lo, hi, static_cast<float>(x - lo)};
    }
    return out;
  };
  const auto xs = taps(img.dims.width, target.width);
  const auto ys = taps(img.dims.height, target.height);

  Image out(target, img.bands);
  for (std::uint32_t r = 0; r < target.height; ++r) {
    const Tap& ty = ys[r];
    for (std::uint32_t c = 0; c < target.width; ++c) {
      const Tap& tx = xs[c];
      for (std::uint32_t b = 0; b < img.bands; ++b) {
        const float top = img.at(ty.lo, tx.lo, b) * (1 - tx.frac) + img.at(ty.lo, tx.hi, b) * tx.frac;
        const float bot = img.at(ty.hi, tx.lo, b) * (1 - tx.frac) + img.at(ty.hi, tx.hi, b) * tx.frac;
        out.at(r, c, b) = top * (1 - ty.frac) + bot * ty.frac;
      }
    }
  }
  return out;
}

Image resize_image(const Image& img, std::uint32_t long_side) {
  if (img.data.empty() || img.bands == 0) throw ValidationError("resize: empty image");
  return resize_bilinear(img, scaled_dims(img.dims, long_side));
}

}  // namespace mergesam
