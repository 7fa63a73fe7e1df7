#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairaudit/costs.hpp"
#include "fairaudit/learners.hpp"

namespace fairaudit {

/// Measured held-out cost for one (size, trial, group, kind); empty when the
/// group had no rows of the conditioning class in that trial's test split.
struct CurveCell {
  std::size_t n = 0;
  std::size_t trial = 0;
  int group = 0;
  CostKind kind = CostKind::ZeroOne;
  std::optional<double> cost;
};

struct CurveSummary {
  std::size_t n = 0;
  int group = 0;
  CostKind kind = CostKind::ZeroOne;
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t trials = 0;  // trials with a measured cost
};

struct CurveExperiment {
  LearnerSpec spec;
  std::vector<CostKind> kinds;
  std::vector<std::size_t> n_grid;
  std::size_t trials = 0;
  double holdout_fraction = 0.2;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  std::vector<std::string> group_labels;
  std::vector<CurveCell> cells;

  std::vector<CurveSummary> summaries() const;
  /// |mean cost of first - mean cost of second| at training size n.
  double mean_gap(CostKind kind, std::size_t n, GroupPair pair = {}) const;
};

CurveExperiment run_curve_experiment(const LearnerSpec& spec, const Dataset& d,
                                     const std::vector<std::size_t>& n_grid, std::size_t trials,
                                     const std::vector<CostKind>& kinds, std::uint64_t seed,
                                     double holdout_fraction = 0.2, double threshold = 0.5,
                                     Execution exec = Execution::Parallel);

struct CurvePoint {
  double n = 0.0;
  double value = 0.0;
  double weight = 1.0;
};

/// alpha * n^-beta + delta.
struct PowerLawFit {
  double alpha = 0.0;
  double beta = 1.0;
  double delta = 0.0;
  double rss = 0.0;
  double n_min = 0.0;
  double n_max = 0.0;
  std::optional<int> group;
  std::optional<CostKind> kind;

  double operator()(double n) const;
};

PowerLawFit fit_power_law(const std::vector<CurvePoint>& points);

/// Weighted points (weights = trial counts) for one group and kind.
std::vector<CurvePoint> curve_points(const CurveExperiment& e, int group, CostKind kind);

struct Extrapolation {
  double n = 0.0;  // +inf for the asymptote
  double gamma = 0.0;
  bool beyond_range = false;  // n > 10 * fitted n_max
};

Extrapolation extrapolate_gamma(const PowerLawFit& f0, const PowerLawFit& f1, double n);

/// Stationary point of f - g (b != e) or the single zero of f - g (b == e).
std::optional<double> power_law_critical_point(const PowerLawFit& f, const PowerLawFit& g);

struct Crossings {
  std::vector<double> roots;  // ascending, at most two
  bool degenerate = false;    // f and g coincide
};

Crossings power_law_crossings(const PowerLawFit& f, const PowerLawFit& g, double x_lo, double x_hi);

}  // namespace fairaudit
