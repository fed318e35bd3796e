#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mergesam/commands.hpp"

namespace {

void add_cva_options(CLI::App* cmd, mergesam::CvaConfig& cfg) {
  cmd->add_option("--image1", cfg.image1, "t1 image (8-bit PNG)")->required();
  cmd->add_option("--image2", cfg.image2, "t2 image (8-bit PNG)")->required();
  cmd->add_option("--out", cfg.change_map, "output change map (PNG, 0/255)")->required();
  cmd->add_option("--provenance", cfg.provenance, "provenance sidecar (default <out>.provenance.json)");
  cmd->add_option("--otsu-bins", cfg.otsu_bins, "histogram bins for Otsu")->capture_default_str();
  cmd->add_flag("--zscore", cfg.zscore, "z-score each band before differencing");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mergesam: unsupervised bitemporal change detection from segmentation masks"};
  app.set_config("--config", "", "TOML/INI configuration file; flags override its values");
  app.require_subcommand(1);

  mergesam::RunConfig run;
  auto* run_cmd = app.add_subcommand("run", "match, split, score and threshold two mask sets");
  run_cmd->add_option("--masks1", run.masks1, "t1 mask set")->required();
  run_cmd->add_option("--masks2", run.masks2, "t2 mask set")->required();
  run_cmd->add_option("--emb1", run.embeddings1, "t1 embedding grid")->required();
  run_cmd->add_option("--emb2", run.embeddings2, "t2 embedding grid")->required();
  run_cmd->add_option("--out", run.change_map, "output change map (PNG, 0/255)")->required();
  run_cmd->add_option("--scores", run.score_table, "per-unit score table (default <out>.scores.csv)");
  run_cmd->add_option("--provenance", run.provenance, "provenance sidecar (default <out>.provenance.json)");
  run_cmd->add_option("--t-iou", run.pipeline.t_iou, "IoU threshold for mask matching")->capture_default_str();
  run_cmd->add_option("--min-area", run.pipeline.min_area, "smallest split unit in pixels")->capture_default_str();
  run_cmd->add_option("--otsu-bins", run.pipeline.otsu_bins, "histogram bins for Otsu")->capture_default_str();
  run_cmd->add_option("--resize-long-side", run.resize_long_side, "working resolution the masks were made at")
      ->capture_default_str();
  run_cmd->add_flag("--matched-unchanged", run.pipeline.matched_unchanged, "treat matched objects as unchanged");
  run_cmd->add_flag("--area-weighted", run.pipeline.area_weighted, "weight unit scores by area in Otsu");

  mergesam::CvaConfig cva;
  auto* cva_cmd = app.add_subcommand("cva", "pixelwise change vector analysis");
  add_cva_options(cva_cmd, cva);
  cva_cmd->add_option("--resize-long-side", cva.resize_long_side, "resize so the longer side matches (0 = off)")
      ->capture_default_str();

  mergesam::CvaConfig cva_sam;
  auto* cva_sam_cmd = app.add_subcommand("cva-sam", "object-averaged change vector analysis");
  add_cva_options(cva_sam_cmd, cva_sam);
  cva_sam_cmd->add_option("--masks1", cva_sam.masks1, "t1 mask set")->required();
  cva_sam_cmd->add_option("--masks2", cva_sam.masks2, "t2 mask set")->required();
  cva_sam_cmd->add_option("--min-area", cva_sam.min_area, "smallest region scored as an object")
      ->capture_default_str();

  mergesam::EvalConfig eval;
  auto* eval_cmd = app.add_subcommand("eval", "compare a change map against a reference");
  eval_cmd->add_option("--pred", eval.prediction, "predicted change map")->required();
  eval_cmd->add_option("--ref", eval.reference, "reference change map")->required();
  eval_cmd->add_option("--ignore", eval.ignore, "optional mask of pixels to skip (nonzero = skip)");
  eval_cmd->add_option("--out", eval.report, "JSON report path");
  eval_cmd->add_option("--method", eval.method, "row label in the printed table")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd) {
      mergesam::cmd_run(run, std::cerr);
    } else if (*cva_cmd) {
      mergesam::cmd_cva(cva, std::cerr);
    } else if (*cva_sam_cmd) {
      mergesam::cmd_cva_sam(cva_sam, std::cerr);
    } else if (*eval_cmd) {
      mergesam::cmd_eval(eval, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mergesam::exit_code(e);
  }
  return 0;
}
