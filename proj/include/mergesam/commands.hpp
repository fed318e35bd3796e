#pragma once

// Command implementations behind the mergesam executable. Each command throws
// mergesam::Error subclasses; exit_code() maps them onto process exit codes.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "mergesam/evaluation.hpp"
#include "mergesam/scoring.hpp"

namespace mergesam {

inline constexpr std::uint32_t kDefaultResizeLongSide = 1600;

struct RunConfig {
  PipelineConfig pipeline;
  std::uint32_t resize_long_side = kDefaultResizeLongSide;
  std::filesystem::path masks1, masks2;
  std::filesystem::path embeddings1, embeddings2;
  std::filesystem::path change_map;
  std::filesystem::path score_table;  // empty: next to the change map
  std::filesystem::path provenance;   // empty: next to the change map
};

struct CvaConfig {
  std::filesystem::path image1, image2;
  std::filesystem::path masks1, masks2;  // cva-sam only
  std::filesystem::path change_map;
  std::filesystem::path provenance;
  std::uint32_t resize_long_side = kDefaultResizeLongSide;  // 0 keeps the input size
  std::uint64_t min_area = kDefaultMinArea;
  std::size_t otsu_bins = kDefaultOtsuBins;
  bool zscore = false;
};

struct EvalConfig {
  std::filesystem::path prediction, reference, ignore;
  std::filesystem::path report;  // empty: print only
  std::string method = "result";
};

/// Throws ValidationError when a parameter is out of range.
void validate(const RunConfig& config);

/// Writes the change map, score table and provenance sidecar.
PipelineResult cmd_run(const RunConfig& config, std::ostream& log);

ChangeMap cmd_cva(const CvaConfig& config, std::ostream& log);
ChangeMap cmd_cva_sam(const CvaConfig& config, std::ostream& log);

/// Prints the metrics table to `out` and writes the JSON report if requested.
MetricsReport cmd_eval(const EvalConfig& config, std::ostream& out, std::ostream& log);

/// Default sidecar path for an output file: <stem>.provenance.json.
std::filesystem::path provenance_path_for(const std::filesystem::path& output);

/// 1 validation, 2 I/O, 3 internal invariant breach or unknown failure.
int exit_code(const std::exception& e);

}  // namespace mergesam
