#ifndef ADPREP_METRICS_HPP
#define ADPREP_METRICS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace adprep {

/// Positive class is AD (label 1).
struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fn = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fn + fp + tn; }
  /// The same counts read with label 0 as the positive class.
  ConfusionMatrix swapped() const { return {tn, fp, fn, tp}; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion_from_predictions(std::span<const int> truth, std::span<const int> pred);

/// Undefined rates (no positives, or no negatives) are empty rather than 0.
struct Metrics {
  double accuracy = 0.0;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
};

Metrics metrics_from_cm(const ConfusionMatrix& cm);

/// (before - after) / before * 100.
double percentage_decrease(double before, double after);

struct TimingRecord {
  std::string label;
  double seconds = 0.0;
};

}  // namespace adprep

#endif  // ADPREP_METRICS_HPP
