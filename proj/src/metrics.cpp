#include "adprep/metrics.hpp"

#include "adprep/error.hpp"

namespace adprep {

ConfusionMatrix confusion_from_predictions(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size())
    throw Error(ErrorCode::LengthMismatch, "truth and predictions differ in length");
  if (truth.empty()) throw Error(ErrorCode::EmptyInput, "no predictions to score");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if ((truth[i] != 0 && truth[i] != 1) || (pred[i] != 0 && pred[i] != 1))
      throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
    if (truth[i] == 1) (pred[i] == 1 ? cm.tp : cm.fn) += 1;
    else (pred[i] == 1 ? cm.fp : cm.tn) += 1;
  }
  return cm;
}

Metrics metrics_from_cm(const ConfusionMatrix& cm) {
  if (cm.tp < 0 || cm.fn < 0 || cm.fp < 0 || cm.tn < 0)
    throw Error(ErrorCode::InvalidArgument, "negative confusion count");
  if (cm.total() == 0) throw Error(ErrorCode::EmptyInput, "empty confusion matrix");
  Metrics m;
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  if (cm.tp + cm.fn > 0)
    m.sensitivity = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  if (cm.tn + cm.fp > 0)
    m.specificity = static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp);
  return m;
}

double percentage_decrease(double before, double after) {
  if (!(before > 0.0)) throw Error(ErrorCode::NonPositiveBaseline, "baseline time must be positive");
  return (before - after) / before * 100.0;
}

}  // namespace adprep
