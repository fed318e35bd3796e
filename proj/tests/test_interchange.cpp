#include <cstring>
#include <fstream>

#include "doctest.h"
#include "mergesam/error.hpp"
#include "mergesam/interchange.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace mergesam;

namespace {

MaskSet sample_set() {
  MaskSet set;
  set.dims = {5, 4};
  set.source.model = "vit_b";
  set.masks.push_back({7, rle_encode(set.dims, oracle::rectangle(5, 4, 1, 1, 4, 3)), 0.93, 0.97});
  set.masks.push_back({2, rle_encode(set.dims, oracle::rectangle(5, 4, 0, 0, 5, 1)), 0.81, 0.88});
  return set;
}

// Layout the exporter produces (Python json.dumps, keys in insertion order).
constexpr const char* kExporterDocument = R"({"format": "mergesam-masks/1",
 "image": {"width": 4, "height": 2},
 "source": {"model": "vit_b", "points_per_side": 64, "nms_threshold": 0.7,
            "pred_iou_threshold": 0.5, "stability_score_threshold": 0.8, "resize_long_side": 1600},
 "masks": [{"id": 0, "area": 3, "bbox": [1, 0, 2, 2], "predicted_iou": 0.91,
            "stability_score": 0.96, "rle": [1, 2, 3, 1, 1]}]})";

}  // namespace

TEST_CASE("mask set round trip") {
  const MaskSet set = sample_set();
  const MaskSet back = parse_mask_set(serialize_mask_set(set));
  CHECK(back.warnings.empty());
  CHECK(back.dims == set.dims);
  CHECK(back.source == set.source);
  REQUIRE(back.masks.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.masks[i].id == set.masks[i].id);
    CHECK(rle_decode(back.masks[i].mask) == rle_decode(set.masks[i].mask));
    CHECK(back.masks[i].predicted_iou == set.masks[i].predicted_iou);
    CHECK(back.masks[i].stability_score == set.masks[i].stability_score);
  }

  testing::TempDir dir;
  write_mask_set(dir / "m.json", set);
  CHECK(read_mask_set(dir / "m.json").masks.size() == 2);
}

TEST_CASE("empty mask set keeps its dims") {
  MaskSet set;
  set.dims = {640, 480};
  const MaskSet back = parse_mask_set(serialize_mask_set(set));
  CHECK(back.masks.empty());
  CHECK(back.dims == GridDims{640, 480});
}

TEST_CASE("exporter-layout document validates without warnings") {
  const MaskSet set = parse_mask_set(kExporterDocument);
  CHECK(set.warnings.empty());
  REQUIRE(set.masks.size() == 1);
  CHECK(set.source.points_per_side == 64);
  CHECK(set.source.nms_threshold == 0.7);
  CHECK(set.source.pred_iou_threshold == 0.5);
  CHECK(set.source.stability_score_threshold == 0.8);
  CHECK(set.source.resize_long_side == 1600);
  CHECK(rle_decode(set.masks[0].mask) == oracle::Bitmap{0, 1, 1, 0, 0, 0, 1, 0});
}

TEST_CASE("mask set validation errors name the mask") {
  auto expect_error = [](const std::string& doc, const std::string& fragment) {
    try {
      parse_mask_set(doc);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      const std::string what = e.what();
      CHECK_MESSAGE(what.find(fragment) != std::string::npos, what);
    }
  };
  std::string doc = kExporterDocument;

  SUBCASE("declared area differs from the decoded area") {
    doc.replace(doc.find("\"area\": 3"), 9, "\"area\": 4");
    expect_error(doc, "mask id 0: field 'area'");
  }
  SUBCASE("runs do not cover the grid") {
    doc.replace(doc.find("[1, 2, 3, 1, 1]"), 15, "[1, 2, 3, 1, 2]");
    expect_error(doc, "mask id 0: field 'rle'");
  }
  SUBCASE("duplicate ids") {
    MaskSet set = sample_set();
    set.masks[1].id = 7;
    expect_error(serialize_mask_set(set), "mask id 7: duplicate id");
  }
  SUBCASE("bbox disagrees") {
    doc.replace(doc.find("[1, 0, 2, 2]"), 12, "[0, 0, 2, 2]");
    expect_error(doc, "mask id 0: field 'bbox'");
  }
  SUBCASE("wrong format tag") {
    doc.replace(doc.find("mergesam-masks/1"), 16, "mergesam-masks/9");
    expect_error(doc, "unsupported format");
  }
  SUBCASE("not JSON") { expect_error("{", "not valid JSON"); }
  SUBCASE("missing area") {
    doc.replace(doc.find("\"area\": 3, "), 11, "");
    expect_error(doc, "missing field 'area'");
  }
}

TEST_CASE("missing metadata produces warnings, not errors") {
  const std::string doc = R"({"format": "mergesam-masks/1", "image": {"width": 2, "height": 1},
    "masks": [{"id": 1, "area": 1, "rle": [1, 1], "extra": true}]})";
  const MaskSet set = parse_mask_set(doc);
  CHECK(set.masks.size() == 1);
  CHECK(set.warnings.size() == 5);  // source, bbox, predicted_iou, stability_score, extra
}

TEST_CASE("embedding encoding is little-endian float32") {
  const EmbeddingGrid g{1, 1, 1, GridDims{3, 2}, {0.5f}};
  const auto bytes = encode_embedding(g);
  REQUIRE(bytes.size() == kEmbeddingHeaderBytes + 4);
  CHECK(std::memcmp(bytes.data(), "MSEM", 4) == 0);
  const auto u8 = [&](std::size_t i) { return std::to_integer<int>(bytes[i]); };
  CHECK(u8(4) == 1);    // version
  CHECK(u8(20) == 2);   // image_h
  CHECK(u8(24) == 3);   // image_w
  CHECK(u8(28) == 0x00);
  CHECK(u8(29) == 0x00);
  CHECK(u8(30) == 0x00);
  CHECK(u8(31) == 0x3F);
  CHECK(decode_embedding(bytes) == g);
}

TEST_CASE("embedding file round trip and failure modes") {
  oracle::Rng rng(41);
  EmbeddingGrid g{3, 4, 5, GridDims{16, 12}, {}};
  for (int i = 0; i < 60; ++i) g.values.push_back(static_cast<float>(rng.unit() * 20 - 10));
  testing::TempDir dir;
  write_embedding(dir / "e.bin", g);
  CHECK(read_embedding(dir / "e.bin") == g);

  auto bytes = encode_embedding(g);
  SUBCASE("truncated payload") {
    bytes.pop_back();
    CHECK_THROWS_WITH_AS(decode_embedding(bytes), doctest::Contains("truncated payload"), ValidationError);
  }
  SUBCASE("trailing data") {
    bytes.push_back(std::byte{0});
    CHECK_THROWS_AS(decode_embedding(bytes), ValidationError);
  }
  SUBCASE("bad magic") {
    bytes[0] = std::byte{'X'};
    CHECK_THROWS_WITH_AS(decode_embedding(bytes), doctest::Contains("bad magic"), ValidationError);
  }
  SUBCASE("unsupported version") {
    bytes[4] = std::byte{2};
    CHECK_THROWS_WITH_AS(decode_embedding(bytes), doctest::Contains("unsupported version"), ValidationError);
  }
  SUBCASE("short header") {
    bytes.resize(10);
    CHECK_THROWS_AS(decode_embedding(bytes), ValidationError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(read_embedding(dir / "absent.bin"), IoError); }
}

TEST_CASE("change map PNG encoding") {
  testing::TempDir dir;
  ChangeMap unchanged({6, 3});
  write_change_map(dir / "none.png", unchanged);
  const Gray8 raw = read_gray8(dir / "none.png");
  CHECK(raw.dims == GridDims{6, 3});
  CHECK(std::all_of(raw.values.begin(), raw.values.end(), [](auto v) { return v == 0; }));

  ChangeMap some({6, 3});
  some.changed[4] = some.changed[17] = 1;
  write_change_map(dir / "some.png", some);
  const Gray8 raw_some = read_gray8(dir / "some.png");
  CHECK(raw_some.values[4] == 255);
  CHECK(read_change_map(dir / "some.png") == some);

  Image gray({2, 1}, 1);
  gray.data = {0.0f, 128.0f};
  write_image(dir / "gray.png", gray);
  CHECK_THROWS_WITH_AS(read_change_map(dir / "gray.png"), doctest::Contains("value 128"), ValidationError);

  const Image rgb = read_image(dir / "gray.png");
  CHECK(rgb.bands == 3);
  CHECK(rgb.at(0, 1, 0) == 128.0f);
  CHECK(rgb.at(0, 1, 2) == 128.0f);

  CHECK_THROWS_AS(read_image(dir / "missing.png"), IoError);
  write_text_file(dir / "junk.png", "not a png");
  CHECK_THROWS_AS(read_image(dir / "junk.png"), IoError);
}
