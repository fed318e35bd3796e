#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "mergesam/change_map.hpp"

namespace mergesam {

// Changed is the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Pixelwise counts; pixels set in `ignore` are skipped.
ConfusionCounts confusion(const ChangeMap& pred, const ChangeMap& ref, const BinaryMask* ignore = nullptr);

struct MetricsReport {
  ConfusionCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double oa = 0.0;
  double kappa = 0.0;
  // Set when the ratio had a zero denominator and was reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
  bool kappa_undefined = false;
};

/// Throws ValidationError when no pixels were evaluated.
MetricsReport metrics(const ConfusionCounts& counts);

/// Fixed-width table with columns F1, Prec., Rec., OA, Kappa in percent.
std::string format_metrics_table(const MetricsReport& report, std::string_view method = "result");

/// JSON document with counts, fractions, percentages and undefined flags.
std::string serialize_metrics(const MetricsReport& report);

}  // namespace mergesam
