#ifndef ADPREP_REPORT_HPP
#define ADPREP_REPORT_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adprep/cnn.hpp"
#include "adprep/metrics.hpp"

namespace adprep {

/// CSV with header "epoch,train_loss,train_acc,test_acc"; a missing test
/// accuracy is written as NA.
std::string history_csv(const std::vector<EpochStats>& history);
/// Throws MalformedCsv on a wrong header, wrong field count or bad number.
std::vector<EpochStats> parse_history_csv(const std::string& text);

/// Accuracy and loss against epoch as a standalone SVG. Output bytes depend
/// only on the input. A single epoch is drawn as markers without lines.
std::string history_svg(const std::vector<EpochStats>& history);

struct BenchRow {
  std::string model;
  std::string stage;  // "before" or "after"
  ConfusionMatrix cm;
  Metrics metrics;
  double seconds = 0.0;
  std::optional<double> percentage_decrease;  // after rows only
  std::string error;  // non-empty when this cell failed
};

/// model,stage,accuracy,sensitivity,specificity,tp,fn,fp,tn,seconds,percentage_decrease
std::string bench_csv(const std::vector<BenchRow>& rows);

/// Splits comma-separated text into rows of fields. No quoting support.
std::vector<std::vector<std::string>> split_csv(const std::string& text);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace adprep

#endif  // ADPREP_REPORT_HPP
