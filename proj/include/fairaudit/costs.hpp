#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairaudit/dataset.hpp"

namespace fairaudit {

enum class CostKind { ZeroOne, FPR, FNR, MSE, GeneralizedZeroOne, Brier };

std::string_view to_string(CostKind kind);
CostKind parse_cost_kind(std::string_view text);
bool needs_scores(CostKind kind);
Task task_for(CostKind kind);

/// Outcome class a class-conditional kind conditions on (FPR: 0, FNR: 1).
std::optional<int> conditioning_class(CostKind kind);

/// One model's output on a dataset: hard labels (classification) or real
/// predictions (regression), plus optional scores in [0,1].
struct PredictionSet {
  std::vector<double> predictions;
  std::vector<double> scores;

  static PredictionSet from_scores(std::vector<double> scores, double threshold = 0.5);
  static PredictionSet from_labels(std::vector<double> labels);
  static PredictionSet from_values(std::vector<double> values);

  std::size_t size() const { return predictions.size(); }
  bool has_scores() const { return !scores.empty(); }
};

/// Binary predictions 1[s >= t].
std::vector<double> apply_threshold(std::span<const double> scores, double threshold);

/// Per-sample loss of row i for the given kind; ignores the conditioning set.
double sample_loss(CostKind kind, const PredictionSet& preds, const Dataset& d, std::size_t i);

/// Whether row i enters the cost's conditioning subset for its own group.
bool in_cost_subset(CostKind kind, const Dataset& d, std::size_t i);

/// Checks alignment, kind/task compatibility and score ranges.
void validate_predictions(const PredictionSet& preds, const Dataset& d, CostKind kind);

struct CostEstimate {
  double cost = 0.0;
  std::size_t count = 0;    // m_a, rows in the conditioning subset
  double variance = 0.0;    // unbiased variance of the per-sample losses
};

CostEstimate group_cost(const PredictionSet& preds, const Dataset& d, CostKind kind, int group);

struct GroupCost {
  int group = 0;
  std::string label;
  std::optional<CostEstimate> estimate;  // empty when the group is not evaluable
};

struct GroupCostReport {
  CostKind kind = CostKind::ZeroOne;
  std::vector<GroupCost> groups;
  double gap = 0.0;  // max - min over evaluable groups
  int highest = -1;
  int lowest = -1;
  std::vector<std::string> warnings;
};

GroupCostReport discrimination_level(const PredictionSet& preds, const Dataset& d, CostKind kind);

double brier_score(std::span<const double> scores, const Dataset& d, int group);
double generalized_zero_one(std::span<const double> scores, const Dataset& d, int group);

}  // namespace fairaudit
