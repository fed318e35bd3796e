#include "mergesam/interchange.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mergesam/error.hpp"

namespace mergesam {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& origin, const std::string& detail) {
  throw ValidationError(origin + ": " + detail);
}

template <typename T>
T get_field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    schema_error(where, std::string("field '") + key + "' has the wrong type");
  }
}

std::uint64_t get_count(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, std::string("missing field '") + key + "'");
  if (!it->is_number_unsigned()) {
    schema_error(where, std::string("field '") + key + "' must be a non-negative integer");
  }
  return it->get<std::uint64_t>();
}

void warn_unknown_keys(const json& obj, const std::set<std::string>& known, const std::string& where,
                       std::vector<std::string>& warnings) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) warnings.push_back(where + ": unknown field '" + it.key() + "'");
  }
}

MaskSource parse_source(const json& doc, const std::string& origin, std::vector<std::string>& warnings) {
  MaskSource src;
  auto it = doc.find("source");
  if (it == doc.end() || !it->is_object()) {
    warnings.push_back(origin + ": no source metadata");
    return src;
  }
  const json& s = *it;
  const std::string where = origin + ": source";
  warn_unknown_keys(s,
                    {"model", "points_per_side", "nms_threshold", "pred_iou_threshold",
                     "stability_score_threshold", "resize_long_side"},
                    where, warnings);
  auto optional = [&](const char* key, auto& out) {
    if (s.contains(key)) {
      out = get_field<std::decay_t<decltype(out)>>(s, key, where);
    } else {
      warnings.push_back(where + ": missing field '" + key + "'");
    }
  };
  optional("model", src.model);
  optional("points_per_side", src.points_per_side);
  optional("nms_threshold", src.nms_threshold);
  optional("pred_iou_threshold", src.pred_iou_threshold);
  optional("stability_score_threshold", src.stability_score_threshold);
  optional("resize_long_side", src.resize_long_side);
  return src;
}

}  // namespace

MaskSet parse_mask_set(std::string_view text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    schema_error(origin, std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) schema_error(origin, "top level must be an object");

  MaskSet set;
  const auto format = get_field<std::string>(doc, "format", origin);
  if (format != kMaskSetFormat) {
    schema_error(origin, "unsupported format '" + format + "', expected '" + std::string(kMaskSetFormat) + "'");
  }
  warn_unknown_keys(doc, {"format", "image", "source", "masks"}, origin, set.warnings);

  auto image = doc.find("image");
  if (image == doc.end() || !image->is_object()) schema_error(origin, "missing object 'image'");
  set.dims = make_dims(get_count(*image, "width", origin + ": image"),
                       get_count(*image, "height", origin + ": image"));
  set.source = parse_source(doc, origin, set.warnings);

  auto masks = doc.find("masks");
  if (masks == doc.end() || !masks->is_array()) schema_error(origin, "missing array 'masks'");

  std::set<std::uint32_t> seen;
  for (std::size_t i = 0; i < masks->size(); ++i) {
    const json& m = (*masks)[i];
    std::string where = origin + ": masks[" + std::to_string(i) + "]";
    if (!m.is_object()) schema_error(where, "entry must be an object");
    const std::uint64_t raw_id = get_count(m, "id", where);
    if (raw_id > UINT32_MAX) schema_error(where, "id out of range");
    ObjectMask om;
    om.id = static_cast<std::uint32_t>(raw_id);
    where = origin + ": mask id " + std::to_string(om.id);
    if (!seen.insert(om.id).second) schema_error(where, "duplicate id");
    warn_unknown_keys(m, {"id", "area", "bbox", "predicted_iou", "stability_score", "rle"}, where,
                      set.warnings);

    auto rle = m.find("rle");
    if (rle == m.end() || !rle->is_array()) schema_error(where, "field 'rle' must be an array");
    std::vector<std::uint32_t> runs;
    runs.reserve(rle->size());
    for (const json& r : *rle) {
      if (!r.is_number_unsigned() || r.get<std::uint64_t>() > UINT32_MAX) {
        schema_error(where, "field 'rle' must hold non-negative 32-bit integers");
      }
      runs.push_back(r.get<std::uint32_t>());
    }
    try {
      om.mask = BinaryMask::from_runs(set.dims, std::move(runs));
    } catch (const ValidationError& e) {
      schema_error(where, std::string("field 'rle': ") + e.what());
    }

    const std::uint64_t area = get_count(m, "area", where);
    if (area != om.mask.area()) {
      schema_error(where, "field 'area': declared " + std::to_string(area) + ", decoded " +
                              std::to_string(om.mask.area()));
    }
    if (m.contains("bbox")) {
      const auto box = get_field<std::vector<std::uint64_t>>(m, "bbox", where);
      const BBox actual = om.mask.bbox();
      if (box.size() != 4 || box[0] != actual.x || box[1] != actual.y || box[2] != actual.w ||
          box[3] != actual.h) {
        schema_error(where, "field 'bbox' does not match the decoded mask");
      }
    } else {
      set.warnings.push_back(where + ": missing field 'bbox'");
    }
    if (m.contains("predicted_iou")) {
      om.predicted_iou = get_field<double>(m, "predicted_iou", where);
    } else {
      set.warnings.push_back(where + ": missing field 'predicted_iou'");
    }
    if (m.contains("stability_score")) {
      om.stability_score = get_field<double>(m, "stability_score", where);
    } else {
      set.warnings.push_back(where + ": missing field 'stability_score'");
    }
    set.masks.push_back(std::move(om));
  }
  return set;
}

std::string serialize_mask_set(const MaskSet& set) {
  json doc;
  doc["format"] = std::string(kMaskSetFormat);
  doc["image"] = {{"width", set.dims.width}, {"height", set.dims.height}};
  doc["source"] = {{"model", set.source.model},
                   {"points_per_side", set.source.points_per_side},
                   {"nms_threshold", set.source.nms_threshold},
                   {"pred_iou_threshold", set.source.pred_iou_threshold},
                   {"stability_score_threshold", set.source.stability_score_threshold},
                   {"resize_long_side", set.source.resize_long_side}};
  json masks = json::array();
  for (const ObjectMask& m : set.masks) {
    require_same_dims(set.dims, m.mask.dims(), "write_mask_set");
    const BBox b = m.mask.bbox();
    masks.push_back({{"id", m.id},
                     {"area", m.mask.area()},
                     {"bbox", {b.x, b.y, b.w, b.h}},
                     {"predicted_iou", m.predicted_iou},
                     {"stability_score", m.stability_score},
                     {"rle", m.mask.runs()}});
  }
  doc["masks"] = std::move(masks);
  return doc.dump(1) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

MaskSet read_mask_set(const std::filesystem::path& path) {
  return parse_mask_set(read_text_file(path), path.string());
}

void write_mask_set(const std::filesystem::path& path, const MaskSet& set) {
  write_text_file(path, serialize_mask_set(set));
}

namespace {

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::span<const std::byte> in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(in[offset + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::byte> encode_embedding(const EmbeddingGrid& grid) {
  const std::uint64_t expected = static_cast<std::uint64_t>(grid.grid_h) * grid.grid_w * grid.dim;
  if (grid.grid_h == 0 || grid.grid_w == 0 || grid.dim == 0 || grid.values.size() != expected) {
    throw ValidationError("write_embedding: grid shape does not match its values");
  }
  std::vector<std::byte> out;
  out.reserve(kEmbeddingHeaderBytes + expected * 4);
  for (char c : {'M', 'S', 'E', 'M'}) out.push_back(static_cast<std::byte>(c));
  put_u32(out, kEmbeddingVersion);
  put_u32(out, grid.grid_h);
  put_u32(out, grid.grid_w);
  put_u32(out, grid.dim);
  put_u32(out, grid.image.height);
  put_u32(out, grid.image.width);
  for (float v : grid.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

EmbeddingGrid decode_embedding(std::span<const std::byte> bytes, const std::string& origin) {
  if (bytes.size() < kEmbeddingHeaderBytes) throw ValidationError(origin + ": truncated header");
  if (std::memcmp(bytes.data(), "MSEM", 4) != 0) throw ValidationError(origin + ": bad magic");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kEmbeddingVersion) {
    throw ValidationError(origin + ": unsupported version " + std::to_string(version));
  }
  EmbeddingGrid grid;
  grid.grid_h = get_u32(bytes, 8);
  grid.grid_w = get_u32(bytes, 12);
  grid.dim = get_u32(bytes, 16);
  if (grid.grid_h == 0 || grid.grid_w == 0 || grid.dim == 0) {
    throw ValidationError(origin + ": grid dims must be positive");
  }
  grid.image = make_dims(get_u32(bytes, 24), get_u32(bytes, 20));

  const std::uint64_t count = static_cast<std::uint64_t>(grid.grid_h) * grid.grid_w * grid.dim;
  const std::uint64_t payload = bytes.size() - kEmbeddingHeaderBytes;
  if (payload < count * 4) {
    throw ValidationError(origin + ": truncated payload, header promises " + std::to_string(count * 4) +
                          " bytes, found " + std::to_string(payload));
  }
  if (payload > count * 4) {
    throw ValidationError(origin + ": " + std::to_string(payload - count * 4) +
                          " trailing bytes after payload");
  }
  grid.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    grid.values[i] = std::bit_cast<float>(get_u32(bytes, kEmbeddingHeaderBytes + 4 * i));
  }
  return grid;
}

EmbeddingGrid read_embedding(const std::filesystem::path& path) {
  const std::string raw = read_text_file(path);
  return decode_embedding(std::as_bytes(std::span(raw.data(), raw.size())), path.string());
}

void write_embedding(const std::filesystem::path& path, const EmbeddingGrid& grid) {
  const auto bytes = encode_embedding(grid);
  write_text_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

namespace {

struct PngReader {
  png_image image{};

  PngReader(const std::filesystem::path& path, png_uint_32 format) {
    image.version = PNG_IMAGE_VERSION;
    if (!std::filesystem::exists(path)) throw IoError("cannot open '" + path.string() + "'");
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
      throw IoError("cannot decode PNG '" + path.string() + "': " + image.message);
    }
    image.format = format;
  }
  ~PngReader() { png_image_free(&image); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  std::vector<std::uint8_t> finish(const std::filesystem::path& path) {
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
      throw IoError("cannot decode PNG '" + path.string() + "': " + image.message);
    }
    return buf;
  }
};

void write_png(const std::filesystem::path& path, GridDims dims, png_uint_32 format,
               const std::vector<std::uint8_t>& pixels) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = dims.width;
  image.height = dims.height;
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot write PNG '" + path.string() + "': " + msg);
  }
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  PngReader reader(path, PNG_FORMAT_RGB);
  const GridDims dims = make_dims(reader.image.width, reader.image.height);
  const auto buf = reader.finish(path);
  Image img(dims, 3);
  std::copy(buf.begin(), buf.end(), img.data.begin());
  return img;
}

void write_image(const std::filesystem::path& path, const Image& img) {
  if (img.bands != 1 && img.bands != 3) throw ValidationError("write_image: only 1 or 3 bands");
  std::vector<std::uint8_t> px(img.data.size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = static_cast<std::uint8_t>(std::clamp(img.data[i] + 0.5f, 0.0f, 255.0f));
  }
  write_png(path, img.dims, img.bands == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY, px);
}

Gray8 read_gray8(const std::filesystem::path& path) {
  PngReader reader(path, PNG_FORMAT_GRAY);
  Gray8 out;
  out.dims = make_dims(reader.image.width, reader.image.height);
  out.values = reader.finish(path);
  return out;
}

void write_change_map(const std::filesystem::path& path, const ChangeMap& map) {
  std::vector<std::uint8_t> px(map.changed.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = map.changed[i] ? 255 : 0;
  write_png(path, map.dims, PNG_FORMAT_GRAY, px);
}

ChangeMap read_change_map(const std::filesystem::path& path) {
  Gray8 g = read_gray8(path);
  ChangeMap out(g.dims);
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    const std::uint8_t v = g.values[i];
    if (v != 0 && v != 255) {
      throw ValidationError(path.string() + ": change map value " + std::to_string(v) + " at pixel " +
                            std::to_string(i) + " (expected 0 or 255)");
    }
    out.changed[i] = v ? 1 : 0;
  }
  return out;
}

}  // namespace mergesam
