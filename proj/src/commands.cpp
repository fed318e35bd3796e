#include "mergesam/commands.hpp"

#include <ostream>
#include <string>
#include <utility>

#include "json.hpp"
#include "mergesam/baselines.hpp"
#include "mergesam/error.hpp"
#include "mergesam/interchange.hpp"

namespace mergesam {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void rethrow_in_stage(const std::string& stage, const Error& e) {
  const std::string msg = stage + ": " + e.what();
  switch (e.kind()) {
    case ErrorKind::validation:
      throw ValidationError(msg);
    case ErrorKind::io:
      throw IoError(msg);
    case ErrorKind::internal:
      break;
  }
  throw InvariantError(msg);
}

template <typename F>
auto in_stage(const std::string& stage, F&& fn) {
  try {
    return std::forward<F>(fn)();
  } catch (const Error& e) {
    rethrow_in_stage(stage, e);
  }
}

MaskSet load_masks(const std::filesystem::path& path, const char* epoch, std::ostream& log) {
  MaskSet set = in_stage(std::string("reading ") + epoch + " masks", [&] { return read_mask_set(path); });
  for (const std::string& w : set.warnings) log << "warning: " << w << "\n";
  return set;
}

std::filesystem::path sibling(const std::filesystem::path& output, const char* suffix) {
  std::filesystem::path p = output;
  p.replace_extension(suffix);
  return p;
}

void write_provenance(const std::filesystem::path& path, const ordered_json& doc) {
  in_stage("writing provenance", [&] { write_text_file(path, doc.dump(2) + "\n"); });
}

Image load_image(const std::filesystem::path& path, const char* epoch) {
  return in_stage(std::string("reading ") + epoch + " image", [&] { return read_image(path); });
}

std::string dims_text(GridDims d) { return std::to_string(d.width) + "x" + std::to_string(d.height); }

std::pair<Image, Image> load_image_pair(const CvaConfig& config) {
  Image a = load_image(config.image1, "t1");
  Image b = load_image(config.image2, "t2");
  if (a.dims != b.dims) {
    throw ValidationError("cva: image sizes differ: " + config.image1.string() + " is " + dims_text(a.dims) +
                          ", " + config.image2.string() + " is " + dims_text(b.dims));
  }
  return {std::move(a), std::move(b)};
}

ordered_json cva_parameters(const CvaConfig& config) {
  return {{"resize_long_side", config.resize_long_side},
          {"min_area", config.min_area},
          {"otsu_bins", config.otsu_bins},
          {"zscore", config.zscore}};
}

}  // namespace

void validate(const RunConfig& config) {
  const PipelineConfig& p = config.pipeline;
  if (!(p.t_iou > 0.0 && p.t_iou <= 1.0)) {
    throw ValidationError("config: t_iou must lie in (0, 1], got " + std::to_string(p.t_iou));
  }
  if (p.min_area < 1) throw ValidationError("config: min_area must be at least 1");
  if (p.otsu_bins < 2) throw ValidationError("config: otsu_bins must be at least 2");
}

std::filesystem::path provenance_path_for(const std::filesystem::path& output) {
  return sibling(output, ".provenance.json");
}

PipelineResult cmd_run(const RunConfig& config, std::ostream& log) {
  validate(config);
  const MaskSet set1 = load_masks(config.masks1, "t1", log);
  const MaskSet set2 = load_masks(config.masks2, "t2", log);
  if (set1.dims != set2.dims) {
    throw ValidationError("run: mask sets disagree on image size: " + dims_text(set1.dims) + " vs " +
                          dims_text(set2.dims));
  }
  for (const MaskSet* s : {&set1, &set2}) {
    if (s->source.resize_long_side != config.resize_long_side) {
      log << "note: masks were generated at long side " << s->source.resize_long_side
          << ", configured " << config.resize_long_side << "\n";
    }
  }
  const EmbeddingGrid emb1 =
      in_stage("reading t1 embeddings", [&] { return read_embedding(config.embeddings1); });
  const EmbeddingGrid emb2 =
      in_stage("reading t2 embeddings", [&] { return read_embedding(config.embeddings2); });

  PipelineResult result = in_stage("pipeline", [&] {
    return run_pipeline(set1.masks, set2.masks, emb1, emb2, set1.dims, config.pipeline);
  });
  log << "units: " << result.scores.size() << ", matched pairs: " << result.pair_count
      << ", changed pixels: " << result.change_map.changed_count() << "\n";

  const auto scores_path = config.score_table.empty() ? sibling(config.change_map, ".scores.csv") : config.score_table;
  const auto prov_path = config.provenance.empty() ? provenance_path_for(config.change_map) : config.provenance;
  in_stage("writing change map", [&] { write_change_map(config.change_map, result.change_map); });
  in_stage("writing score table", [&] { write_text_file(scores_path, format_score_table(result.scores)); });

  const PipelineConfig& p = config.pipeline;
  ordered_json doc;
  doc["command"] = "run";
  doc["parameters"] = {{"t_iou", p.t_iou},
                       {"min_area", p.min_area},
                       {"otsu_bins", p.otsu_bins},
                       {"matched_unchanged", p.matched_unchanged},
                       {"area_weighted", p.area_weighted},
                       {"resize_long_side", config.resize_long_side}};
  doc["inputs"] = {{"masks1", config.masks1.string()},
                   {"masks2", config.masks2.string()},
                   {"embeddings1", config.embeddings1.string()},
                   {"embeddings2", config.embeddings2.string()}};
  doc["outputs"] = {{"change_map", config.change_map.string()}, {"score_table", scores_path.string()}};
  doc["working_dims"] = {{"width", set1.dims.width}, {"height", set1.dims.height}};
  if (result.threshold) {
    doc["threshold"] = result.threshold->value;
  } else {
    doc["threshold"] = nullptr;
  }
  write_provenance(prov_path, doc);
  return result;
}

ChangeMap cmd_cva(const CvaConfig& config, std::ostream& log) {
  if (config.otsu_bins < 2) throw ValidationError("config: otsu_bins must be at least 2");
  auto [a, b] = load_image_pair(config);
  if (config.resize_long_side != 0) {
    const GridDims target = scaled_dims(a.dims, config.resize_long_side);
    if (target != a.dims) {
      log << "resizing images from " << dims_text(a.dims) << " to " << dims_text(target) << "\n";
      a = resize_bilinear(a, target);
      b = resize_bilinear(b, target);
    }
  }
  const ChangeMap map = cva_map(cva_magnitude(a, b, config.zscore), config.otsu_bins);
  in_stage("writing change map", [&] { write_change_map(config.change_map, map); });

  ordered_json doc;
  doc["command"] = "cva";
  doc["parameters"] = cva_parameters(config);
  doc["inputs"] = {{"image1", config.image1.string()}, {"image2", config.image2.string()}};
  doc["outputs"] = {{"change_map", config.change_map.string()}};
  write_provenance(config.provenance.empty() ? provenance_path_for(config.change_map) : config.provenance, doc);
  return map;
}

ChangeMap cmd_cva_sam(const CvaConfig& config, std::ostream& log) {
  if (config.otsu_bins < 2) throw ValidationError("config: otsu_bins must be at least 2");
  if (config.min_area < 1) throw ValidationError("config: min_area must be at least 1");
  auto [a, b] = load_image_pair(config);
  const MaskSet set1 = load_masks(config.masks1, "t1", log);
  const MaskSet set2 = load_masks(config.masks2, "t2", log);
  if (set1.dims != set2.dims) {
    throw ValidationError("cva-sam: mask sets disagree on image size: " + dims_text(set1.dims) + " vs " +
                          dims_text(set2.dims));
  }
  if (a.dims != set1.dims) {
    log << "resizing images from " << dims_text(a.dims) << " to mask grid " << dims_text(set1.dims) << "\n";
    a = resize_bilinear(a, set1.dims);
    b = resize_bilinear(b, set1.dims);
  }
  const ChangeMap map = in_stage("cva-sam", [&] {
    return cva_sam(a, b, set1.masks, set2.masks, config.min_area, CvaOptions{config.zscore, config.otsu_bins});
  });
  in_stage("writing change map", [&] { write_change_map(config.change_map, map); });

  ordered_json doc;
  doc["command"] = "cva-sam";
  doc["parameters"] = cva_parameters(config);
  doc["inputs"] = {{"image1", config.image1.string()},
                   {"image2", config.image2.string()},
                   {"masks1", config.masks1.string()},
                   {"masks2", config.masks2.string()}};
  doc["outputs"] = {{"change_map", config.change_map.string()}};
  write_provenance(config.provenance.empty() ? provenance_path_for(config.change_map) : config.provenance, doc);
  return map;
}

MetricsReport cmd_eval(const EvalConfig& config, std::ostream& out, std::ostream& log) {
  const ChangeMap pred = in_stage("reading prediction", [&] { return read_change_map(config.prediction); });
  ChangeMap ref = in_stage("reading reference", [&] { return read_change_map(config.reference); });
  if (ref.dims != pred.dims) {
    log << "resizing reference from " << dims_text(ref.dims) << " to " << dims_text(pred.dims)
        << " (nearest neighbour)\n";
    ref = resize_nearest(ref, pred.dims);
  }
  std::optional<BinaryMask> ignore;
  if (!config.ignore.empty()) {
    Gray8 g = in_stage("reading ignore mask", [&] { return read_gray8(config.ignore); });
    if (g.dims != pred.dims) {
      log << "resizing ignore mask from " << dims_text(g.dims) << " to " << dims_text(pred.dims) << "\n";
      g.values = resize_nearest<std::uint8_t>(g.values, g.dims, pred.dims);
      g.dims = pred.dims;
    }
    ignore = rle_encode(g.dims, g.values);
  }
  const MetricsReport report = in_stage("evaluation", [&] {
    return metrics(confusion(pred, ref, ignore ? &*ignore : nullptr));
  });
  out << format_metrics_table(report, config.method);
  if (!config.report.empty()) {
    in_stage("writing report", [&] { write_text_file(config.report, serialize_metrics(report)); });
  }
  return report;
}

int exit_code(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return static_cast<int>(err->kind());
  return static_cast<int>(ErrorKind::internal);
}

}  // namespace mergesam
