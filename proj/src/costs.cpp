#include "fairaudit/costs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fairaudit {

std::string_view to_string(CostKind kind) {
  switch (kind) {
    case CostKind::ZeroOne: return "zero_one";
    case CostKind::FPR: return "fpr";
    case CostKind::FNR: return "fnr";
    case CostKind::MSE: return "mse";
    case CostKind::GeneralizedZeroOne: return "generalized_zero_one";
    case CostKind::Brier: return "brier";
  }
  return "?";
}

CostKind parse_cost_kind(std::string_view text) {
  for (auto k : {CostKind::ZeroOne, CostKind::FPR, CostKind::FNR, CostKind::MSE,
                 CostKind::GeneralizedZeroOne, CostKind::Brier})
    if (to_string(k) == text) return k;
  if (text == "zo") return CostKind::ZeroOne;
  if (text == "gzo") return CostKind::GeneralizedZeroOne;
  throw ConfigError("unknown cost kind '" + std::string(text) + "'");
}

bool needs_scores(CostKind kind) {
  return kind == CostKind::GeneralizedZeroOne || kind == CostKind::Brier;
}

Task task_for(CostKind kind) {
  return kind == CostKind::MSE ? Task::Regression : Task::BinaryClassification;
}

std::optional<int> conditioning_class(CostKind kind) {
  if (kind == CostKind::FPR) return 0;
  if (kind == CostKind::FNR) return 1;
  return std::nullopt;
}

PredictionSet PredictionSet::from_scores(std::vector<double> scores, double threshold) {
  PredictionSet p;
  p.predictions = apply_threshold(scores, threshold);
  p.scores = std::move(scores);
  return p;
}

PredictionSet PredictionSet::from_labels(std::vector<double> labels) {
  PredictionSet p;
  p.predictions = std::move(labels);
  return p;
}

PredictionSet PredictionSet::from_values(std::vector<double> values) {
  PredictionSet p;
  p.predictions = std::move(values);
  return p;
}

std::vector<double> apply_threshold(std::span<const double> scores, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw ConfigError("decision threshold must lie in [0,1]");
  std::vector<double> out(scores.size());
  std::transform(scores.begin(), scores.end(), out.begin(),
                 [threshold](double s) { return s >= threshold ? 1.0 : 0.0; });
  return out;
}

double sample_loss(CostKind kind, const PredictionSet& preds, const Dataset& d, std::size_t i) {
  const double y = d.outcome()[i];
  switch (kind) {
    case CostKind::ZeroOne: return preds.predictions[i] != y ? 1.0 : 0.0;
    case CostKind::FPR: return preds.predictions[i];
    case CostKind::FNR: return 1.0 - preds.predictions[i];
    case CostKind::MSE: {
      const double r = preds.predictions[i] - y;
      return r * r;
    }
    case CostKind::GeneralizedZeroOne: {
      const double s = preds.scores[i];
      return y * (1.0 - s) + (1.0 - y) * s;
    }
    case CostKind::Brier: {
      const double r = preds.scores[i] - y;
      return r * r;
    }
  }
  return 0.0;
}

bool in_cost_subset(CostKind kind, const Dataset& d, std::size_t i) {
  auto cls = conditioning_class(kind);
  return !cls || d.outcome()[i] == static_cast<double>(*cls);
}

void validate_predictions(const PredictionSet& preds, const Dataset& d, CostKind kind) {
  if (preds.size() != d.size())
    throw AnalysisError("predictions (" + std::to_string(preds.size()) +
                        ") not aligned with dataset (" + std::to_string(d.size()) + " rows)");
  if (task_for(kind) != d.task())
    throw AnalysisError("cost kind '" + std::string(to_string(kind)) + "' requires a " +
                        std::string(to_string(task_for(kind))) + " task");
  if (needs_scores(kind)) {
    if (preds.scores.size() != d.size())
      throw AnalysisError("cost kind '" + std::string(to_string(kind)) + "' requires scores");
    for (double s : preds.scores)
      if (!(s >= 0.0 && s <= 1.0)) throw AnalysisError("score outside [0,1]");
  }
  if (d.task() == Task::BinaryClassification && !needs_scores(kind))
    for (double p : preds.predictions)
      if (p != 0.0 && p != 1.0) throw AnalysisError("hard predictions must be 0 or 1");
}

namespace {

CostEstimate mean_and_variance(const std::vector<double>& losses) {
  CostEstimate e;
  e.count = losses.size();
  long double sum = 0.0L;
  for (double l : losses) sum += l;
  const long double mean = sum / static_cast<long double>(losses.size());
  long double ss = 0.0L;
  for (double l : losses) ss += (l - mean) * (l - mean);
  e.cost = static_cast<double>(mean);
  e.variance = losses.size() > 1 ? static_cast<double>(ss / static_cast<long double>(losses.size() - 1)) : 0.0;
  return e;
}

}  // namespace

CostEstimate group_cost(const PredictionSet& preds, const Dataset& d, CostKind kind, int group) {
  validate_predictions(preds, d, kind);
  std::vector<double> losses;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.group()[i] == group && in_cost_subset(kind, d, i))
      losses.push_back(sample_loss(kind, preds, d, i));
  if (losses.empty()) {
    std::string what = "group " + std::to_string(group);
    if (auto cls = conditioning_class(kind))
      what += " has no rows with Y=" + std::to_string(*cls) + " for " + std::string(to_string(kind));
    else
      what += " has no rows";
    throw AnalysisError(what);
  }
  return mean_and_variance(losses);
}

GroupCostReport discrimination_level(const PredictionSet& preds, const Dataset& d, CostKind kind) {
  validate_predictions(preds, d, kind);
  GroupCostReport report;
  report.kind = kind;
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  std::size_t evaluable = 0;
  for (std::size_t g = 0; g < d.group_count(); ++g) {
    GroupCost gc;
    gc.group = static_cast<int>(g);
    gc.label = d.group_labels()[g];
    try {
      gc.estimate = group_cost(preds, d, kind, gc.group);
    } catch (const AnalysisError& e) {
      report.warnings.push_back(std::string(to_string(kind)) + ": group '" + gc.label +
                                "' excluded: " + e.what());
    }
    if (gc.estimate) {
      ++evaluable;
      if (gc.estimate->cost > hi) {
        hi = gc.estimate->cost;
        report.highest = gc.group;
      }
      if (gc.estimate->cost < lo) {
        lo = gc.estimate->cost;
        report.lowest = gc.group;
      }
    }
    report.groups.push_back(std::move(gc));
  }
  if (evaluable < 2)
    throw AnalysisError("discrimination level for " + std::string(to_string(kind)) +
                        " needs at least 2 evaluable groups");
  report.gap = hi - lo;
  return report;
}

namespace {

double scored_group_mean(std::span<const double> scores, const Dataset& d, int group,
                         CostKind kind) {
  if (d.task() != Task::BinaryClassification)
    throw AnalysisError(std::string(to_string(kind)) + " requires a binary task");
  if (scores.size() != d.size()) throw AnalysisError("scores not aligned with dataset");
  long double sum = 0.0L;
  std::size_t m = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double s = scores[i];
    if (!(s >= 0.0 && s <= 1.0)) throw AnalysisError("score outside [0,1]");
    if (d.group()[i] != group) continue;
    const double y = d.outcome()[i];
    sum += kind == CostKind::Brier ? (s - y) * (s - y) : y * (1.0 - s) + (1.0 - y) * s;
    ++m;
  }
  if (m == 0) throw AnalysisError("group " + std::to_string(group) + " has no rows");
  return static_cast<double>(sum / static_cast<long double>(m));
}

}  // namespace

double brier_score(std::span<const double> scores, const Dataset& d, int group) {
  return scored_group_mean(scores, d, group, CostKind::Brier);
}

double generalized_zero_one(std::span<const double> scores, const Dataset& d, int group) {
  return scored_group_mean(scores, d, group, CostKind::GeneralizedZeroOne);
}

}  // namespace fairaudit
