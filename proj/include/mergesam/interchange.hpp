#pragma once

// File formats shared with the mask/embedding exporter.
//
// Mask sets are JSON documents tagged "mergesam-masks/1"; each mask carries a
// row-major RLE over the image grid. Embedding grids are a little-endian
// binary container:
//
//   offset  size  field
//   0       4     magic "MSEM"
//   4       4     version (u32) = 1
//   8       4     grid_h (u32)
//   12      4     grid_w (u32)
//   16      4     dim (u32)
//   20      4     image_h (u32)
//   24      4     image_w (u32)
//   28      ...   grid_h * grid_w * dim float32 values, dim fastest
//
// Change maps are single-channel 8-bit PNGs holding only 0 and 255.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mergesam/change_map.hpp"
#include "mergesam/image.hpp"
#include "mergesam/raster.hpp"

namespace mergesam {

inline constexpr std::string_view kMaskSetFormat = "mergesam-masks/1";
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 28;

struct ObjectMask {
  std::uint32_t id = 0;
  BinaryMask mask;
  double predicted_iou = 0.0;
  double stability_score = 0.0;
};

/// Generation parameters recorded by the exporter.
struct MaskSource {
  std::string model;
  std::uint32_t points_per_side = 64;
  double nms_threshold = 0.7;
  double pred_iou_threshold = 0.5;
  double stability_score_threshold = 0.8;
  std::uint32_t resize_long_side = 1600;

  friend bool operator==(const MaskSource&, const MaskSource&) = default;
};

struct MaskSet {
  GridDims dims;
  MaskSource source;
  std::vector<ObjectMask> masks;
  // Non-fatal findings from parsing (unknown keys, missing metadata).
  std::vector<std::string> warnings;
};

/// Parses and validates a mask set document. `origin` prefixes error messages.
MaskSet parse_mask_set(std::string_view text, const std::string& origin = "mask set");
std::string serialize_mask_set(const MaskSet& set);

MaskSet read_mask_set(const std::filesystem::path& path);
void write_mask_set(const std::filesystem::path& path, const MaskSet& set);

struct EmbeddingGrid {
  std::uint32_t grid_h = 0;
  std::uint32_t grid_w = 0;
  std::uint32_t dim = 0;
  GridDims image;  // dims of the image the grid is aligned to
  std::vector<float> values;

  std::span<const float> cell(std::uint32_t row, std::uint32_t col) const {
    return {values.data() + (static_cast<std::size_t>(row) * grid_w + col) * dim, dim};
  }
  friend bool operator==(const EmbeddingGrid&, const EmbeddingGrid&) = default;
};

std::vector<std::byte> encode_embedding(const EmbeddingGrid& grid);
EmbeddingGrid decode_embedding(std::span<const std::byte> bytes, const std::string& origin = "embedding");

EmbeddingGrid read_embedding(const std::filesystem::path& path);
void write_embedding(const std::filesystem::path& path, const EmbeddingGrid& grid);

/// Reads an 8-bit PNG as RGB (gray is replicated, alpha dropped).
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& img);

/// Single-band 8-bit raster, no value restrictions.
struct Gray8 {
  GridDims dims;
  std::vector<std::uint8_t> values;
};
Gray8 read_gray8(const std::filesystem::path& path);

void write_change_map(const std::filesystem::path& path, const ChangeMap& map);
/// Rejects values other than 0 and 255.
ChangeMap read_change_map(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace mergesam
