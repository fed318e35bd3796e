#include "mergesam/evaluation.hpp"

#include <fmt/format.h>

#include "json.hpp"
#include "mergesam/error.hpp"

namespace mergesam {

ConfusionCounts confusion(const ChangeMap& pred, const ChangeMap& ref, const BinaryMask* ignore) {
  require_same_dims(pred.dims, ref.dims, "confusion: prediction vs reference");
  std::vector<std::uint8_t> skip;
  if (ignore != nullptr) {
    require_same_dims(pred.dims, ignore->dims(), "confusion: ignore mask");
    skip = rle_decode(*ignore);
  }
  ConfusionCounts c;
  for (std::size_t p = 0; p < pred.changed.size(); ++p) {
    if (!skip.empty() && skip[p]) continue;
    const bool predicted = pred.changed[p] != 0;
    const bool actual = ref.changed[p] != 0;
    if (predicted && actual) {
      ++c.tp;
    } else if (predicted) {
      ++c.fp;
    } else if (actual) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

MetricsReport metrics(const ConfusionCounts& counts) {
  const std::uint64_t n = counts.total();
  if (n == 0) throw ValidationError("metrics: no evaluated pixels");

  MetricsReport r;
  r.counts = counts;
  auto ratio = [](std::uint64_t num, std::uint64_t den, bool& undefined) {
    undefined = den == 0;
    return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  r.precision = ratio(counts.tp, counts.tp + counts.fp, r.precision_undefined);
  r.recall = ratio(counts.tp, counts.tp + counts.fn, r.recall_undefined);
  // 2pr/(p+r) == 2tp/(2tp+fp+fn) whenever both are defined.
  r.f1_undefined = r.precision_undefined || r.recall_undefined || counts.tp == 0;
  r.f1 = r.f1_undefined ? 0.0 : 2 * r.precision * r.recall / (r.precision + r.recall);
  r.oa = static_cast<double>(counts.tp + counts.tn) / static_cast<double>(n);

  // kappa = (N*(tp+tn) - E) / (N^2 - E), E = N^2 * chance agreement.
  using i128 = __int128;
  const i128 big_n = n;
  const i128 chance = static_cast<i128>(counts.tp + counts.fp) * (counts.tp + counts.fn) +
                      static_cast<i128>(counts.fn + counts.tn) * (counts.fp + counts.tn);
  const i128 num = big_n * static_cast<i128>(counts.tp + counts.tn) - chance;
  const i128 den = big_n * big_n - chance;
  r.kappa_undefined = den == 0;
  r.kappa = r.kappa_undefined ? 0.0 : static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
  return r;
}

std::string format_metrics_table(const MetricsReport& report, std::string_view method) {
  std::string out = fmt::format("{:<12} {:>7} {:>7} {:>7} {:>7} {:>7}\n", "Method", "F1", "Prec.", "Rec.",
                                "OA", "Kappa");
  out += fmt::format("{:<12} {:>7.2f} {:>7.2f} {:>7.2f} {:>7.2f} {:>7.2f}\n", method, 100 * report.f1,
                     100 * report.precision, 100 * report.recall, 100 * report.oa, 100 * report.kappa);
  return out;
}

std::string serialize_metrics(const MetricsReport& report) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["counts"] = {{"tp", report.counts.tp},
                   {"fp", report.counts.fp},
                   {"fn", report.counts.fn},
                   {"tn", report.counts.tn},
                   {"total", report.counts.total()}};
  doc["fractions"] = {{"f1", report.f1},
                      {"precision", report.precision},
                      {"recall", report.recall},
                      {"oa", report.oa},
                      {"kappa", report.kappa}};
  doc["percent"] = {{"f1", 100 * report.f1},
                    {"precision", 100 * report.precision},
                    {"recall", 100 * report.recall},
                    {"oa", 100 * report.oa},
                    {"kappa", 100 * report.kappa}};
  doc["undefined"] = {{"f1", report.f1_undefined},
                      {"precision", report.precision_undefined},
                      {"recall", report.recall_undefined},
                      {"kappa", report.kappa_undefined}};
  doc["table"] = format_metrics_table(report);
  return doc.dump(2) + "\n";
}

}  // namespace mergesam
