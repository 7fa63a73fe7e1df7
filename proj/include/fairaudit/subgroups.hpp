#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fairaudit/costs.hpp"

namespace fairaudit {

/// Hard: one cluster index per row. Soft: row-stochastic n x C membership matrix.
struct Clustering {
  enum class Kind { Hard, Soft };

  Kind kind = Kind::Hard;
  std::string name;
  std::vector<int> hard;
  Matrix soft;
  std::size_t clusters = 1;
  std::vector<std::string> descriptors;  // one per cluster
  bool degenerate = false;
  std::vector<std::string> warnings;

  std::size_t rows() const;
  /// Membership of row i in cluster c (0/1 for hard clusterings).
  double membership(std::size_t i, std::size_t c) const;

  static Clustering from_hard(std::vector<int> assignment, std::size_t clusters, std::string name = {});
  /// Validates rows summing to 1 within 1e-9.
  static Clustering from_soft(Matrix memberships, std::string name = {});
  /// Hard clustering expressed as one-hot memberships.
  Clustering as_soft() const;
};

/// One two-cluster split per feature: rows at or above the feature mean go to
/// cluster 1. Constant features put every row in cluster 0 and are flagged.
std::vector<Clustering> threshold_clusterings(const Dataset& d);

struct CellCost {
  double cost = 0.0;
  double mass = 0.0;  // row count (hard) or summed membership (soft)
  bool reliable = true;
};

/// Cost of the given kind among rows in group a and cluster c, weighted by
/// membership. Empty when the cell has no mass.
std::optional<CellCost> cluster_cost(const PredictionSet& preds, const Dataset& d,
                                     const Clustering& cl, CostKind kind, int group,
                                     std::size_t cluster, double min_mass = 10.0);

/// sum 1[y != yhat] 1[a_i = a] q_ic / sum 1[a_i = a] q_ic.
double weighted_group_error(const PredictionSet& preds, const Dataset& d, const Clustering& cl,
                            int group, std::size_t cluster);

/// sum y_i q_ic / sum q_ic.
double outcome_enrichment(const Dataset& d, const Clustering& cl, std::size_t cluster);

struct ClusterRow {
  std::size_t cluster = 0;
  std::string descriptor;
  std::vector<std::optional<CellCost>> cells;  // per group
  double gap = 0.0;       // max - min over groups with a cost
  double variance = 0.0;  // population variance of the group costs
  double enrichment = 0.0;
};

struct ClusterReport {
  std::string clustering;
  CostKind kind = CostKind::ZeroOne;
  std::vector<ClusterRow> rows;  // ranked by variance, then gap, then index
  std::vector<std::string> warnings;
};

ClusterReport rank_clusters(const PredictionSet& preds, const Dataset& d, const Clustering& cl,
                            CostKind kind, double min_mass = 10.0);

/// Reads a membership CSV with columns q_0..q_{C-1}, one row per dataset row.
/// Rows within 1e-6 of summing to 1 are renormalized with a warning.
Clustering load_memberships(const std::filesystem::path& path, std::size_t expected_rows);
Clustering parse_memberships(std::string_view csv_text, std::size_t expected_rows);

}  // namespace fairaudit
