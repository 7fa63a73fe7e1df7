#include "fairaudit/outcome_model.hpp"

#include <cmath>

namespace fairaudit {

namespace {

std::span<const double> row_of(const Dataset& d, std::size_t i) {
  const auto k = d.feature_count();
  return {d.features().data() + i * k, k};
}

void require_known(const ConditionalOutcomeModel& m) {
  if (!m.known()) throw AnalysisError("outcome model is unknown; y* and noise are not available");
}

}  // namespace

ConditionalOutcomeModel ConditionalOutcomeModel::unknown(Task task) {
  ConditionalOutcomeModel m;
  m.task = task;
  return m;
}

ConditionalOutcomeModel ConditionalOutcomeModel::known_binary(Query probability) {
  ConditionalOutcomeModel m;
  m.mode = Mode::Known;
  m.task = Task::BinaryClassification;
  m.probability = std::move(probability);
  return m;
}

ConditionalOutcomeModel ConditionalOutcomeModel::known_regression(Query mean, Query variance) {
  ConditionalOutcomeModel m;
  m.mode = Mode::Known;
  m.task = Task::Regression;
  m.mean = std::move(mean);
  m.variance = std::move(variance);
  return m;
}

double ConditionalOutcomeModel::p1(const Dataset& d, std::size_t i) const {
  require_known(*this);
  if (task != Task::BinaryClassification || !probability)
    throw AnalysisError("outcome model has no class probabilities");
  const double p = probability(row_of(d, i), d.group()[i]);
  if (!(p >= 0.0 && p <= 1.0)) throw AnalysisError("outcome model returned p outside [0,1]");
  return p;
}

double ConditionalOutcomeModel::conditional_mean(const Dataset& d, std::size_t i) const {
  require_known(*this);
  if (task != Task::Regression || !mean) throw AnalysisError("outcome model has no regression mean");
  const double v = mean(row_of(d, i), d.group()[i]);
  if (!std::isfinite(v)) throw AnalysisError("outcome model returned a non-finite mean");
  return v;
}

double ConditionalOutcomeModel::conditional_variance(const Dataset& d, std::size_t i) const {
  require_known(*this);
  if (task != Task::Regression || !variance)
    throw AnalysisError("outcome model has no regression variance");
  const double v = variance(row_of(d, i), d.group()[i]);
  if (!(v >= 0.0) || !std::isfinite(v)) throw AnalysisError("outcome model returned a negative variance");
  return v;
}

}  // namespace fairaudit
