#pragma once

#include <functional>
#include <span>

#include "fairaudit/dataset.hpp"

namespace fairaudit {

/// Conditional law of Y given (x, a). Known mode answers queries exactly
/// (synthetic generators only); Unknown mode carries no information.
struct ConditionalOutcomeModel {
  enum class Mode { Known, Unknown };
  using Query = std::function<double(std::span<const double> x, int a)>;

  Mode mode = Mode::Unknown;
  Task task = Task::BinaryClassification;
  Query probability;  // p(Y=1 | x, a), classification
  Query mean;         // E[Y | x, a], regression
  Query variance;     // Var[Y | x, a], regression

  static ConditionalOutcomeModel unknown(Task task);
  static ConditionalOutcomeModel known_binary(Query probability);
  static ConditionalOutcomeModel known_regression(Query mean, Query variance);

  bool known() const { return mode == Mode::Known; }

  // Row-level helpers that validate ranges.
  double p1(const Dataset& d, std::size_t i) const;
  double conditional_mean(const Dataset& d, std::size_t i) const;
  double conditional_variance(const Dataset& d, std::size_t i) const;
};

}  // namespace fairaudit
