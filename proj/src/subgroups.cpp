#include "fairaudit/subgroups.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fairaudit {

std::size_t Clustering::rows() const {
  return kind == Kind::Hard ? hard.size() : static_cast<std::size_t>(soft.rows());
}

double Clustering::membership(std::size_t i, std::size_t c) const {
  if (kind == Kind::Hard) return hard[i] == static_cast<int>(c) ? 1.0 : 0.0;
  return soft(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
}

Clustering Clustering::from_hard(std::vector<int> assignment, std::size_t clusters, std::string name) {
  if (clusters < 1) throw AnalysisError("clustering needs at least one cluster");
  for (int c : assignment)
    if (c < 0 || static_cast<std::size_t>(c) >= clusters)
      throw AnalysisError("cluster index out of range");
  Clustering cl;
  cl.kind = Kind::Hard;
  cl.name = std::move(name);
  cl.hard = std::move(assignment);
  cl.clusters = clusters;
  for (std::size_t c = 0; c < clusters; ++c) cl.descriptors.push_back("cluster " + std::to_string(c));
  return cl;
}

Clustering Clustering::from_soft(Matrix memberships, std::string name) {
  if (memberships.cols() < 1) throw AnalysisError("clustering needs at least one cluster");
  for (Eigen::Index i = 0; i < memberships.rows(); ++i) {
    if ((memberships.row(i).array() < 0.0).any() || !memberships.row(i).allFinite())
      throw DataError("membership row " + std::to_string(i) + " has a negative or non-finite entry");
    if (std::fabs(memberships.row(i).sum() - 1.0) > 1e-9)
      throw DataError("membership row " + std::to_string(i) + " does not sum to 1");
  }
  Clustering cl;
  cl.kind = Kind::Soft;
  cl.name = std::move(name);
  cl.clusters = static_cast<std::size_t>(memberships.cols());
  cl.soft = std::move(memberships);
  for (std::size_t c = 0; c < cl.clusters; ++c) cl.descriptors.push_back("q_" + std::to_string(c));
  return cl;
}

Clustering Clustering::as_soft() const {
  if (kind == Kind::Soft) return *this;
  Matrix q = Matrix::Zero(static_cast<Eigen::Index>(hard.size()), static_cast<Eigen::Index>(clusters));
  for (std::size_t i = 0; i < hard.size(); ++i) q(static_cast<Eigen::Index>(i), hard[i]) = 1.0;
  Clustering out = *this;
  out.kind = Kind::Soft;
  out.soft = std::move(q);
  out.hard.clear();
  return out;
}

std::vector<Clustering> threshold_clusterings(const Dataset& d) {
  if (d.feature_count() < 1) throw AnalysisError("threshold clusterings need at least one feature");
  std::vector<Clustering> out;
  const auto& x = d.features();
  for (std::size_t j = 0; j < d.feature_count(); ++j) {
    const auto col = x.col(static_cast<Eigen::Index>(j));
    const double mean = col.mean();
    const bool constant = col.size() == 0 || col.minCoeff() == col.maxCoeff();
    std::vector<int> assign(d.size(), 0);
    if (!constant)
      for (std::size_t i = 0; i < d.size(); ++i) assign[i] = col(static_cast<Eigen::Index>(i)) >= mean ? 1 : 0;
    const auto& name = d.column_names()[j];
    Clustering cl = Clustering::from_hard(std::move(assign), 2, name);
    cl.descriptors = {name + " below mean", name + " at or above mean"};
    if (constant) {
      cl.degenerate = true;
      cl.warnings.push_back("feature '" + name + "' is constant; clustering is one-sided");
    }
    out.push_back(std::move(cl));
  }
  return out;
}

namespace {

void check_alignment(const Dataset& d, const Clustering& cl, std::size_t cluster) {
  if (cl.rows() != d.size()) throw AnalysisError("clustering not aligned with dataset");
  if (cluster >= cl.clusters) throw AnalysisError("cluster index out of range");
}

}  // namespace

std::optional<CellCost> cluster_cost(const PredictionSet& preds, const Dataset& d,
                                     const Clustering& cl, CostKind kind, int group,
                                     std::size_t cluster, double min_mass) {
  validate_predictions(preds, d, kind);
  check_alignment(d, cl, cluster);
  long double mass = 0.0L;
  long double loss = 0.0L;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.group()[i] != group || !in_cost_subset(kind, d, i)) continue;
    const double q = cl.membership(i, cluster);
    if (q == 0.0) continue;
    mass += q;
    loss += q * sample_loss(kind, preds, d, i);
  }
  if (mass <= 0.0L) return std::nullopt;
  CellCost c;
  c.mass = static_cast<double>(mass);
  c.cost = static_cast<double>(loss / mass);
  c.reliable = c.mass >= min_mass;
  return c;
}

double weighted_group_error(const PredictionSet& preds, const Dataset& d, const Clustering& cl,
                            int group, std::size_t cluster) {
  auto c = cluster_cost(preds, d, cl, CostKind::ZeroOne, group, cluster, 0.0);
  if (!c) throw AnalysisError("zero total membership for group " + std::to_string(group) +
                              " in cluster " + std::to_string(cluster));
  return c->cost;
}

double outcome_enrichment(const Dataset& d, const Clustering& cl, std::size_t cluster) {
  check_alignment(d, cl, cluster);
  long double mass = 0.0L;
  long double ys = 0.0L;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double q = cl.membership(i, cluster);
    mass += q;
    ys += q * d.outcome()[i];
  }
  if (mass <= 0.0L) throw AnalysisError("cluster " + std::to_string(cluster) + " has zero mass");
  return static_cast<double>(ys / mass);
}

ClusterReport rank_clusters(const PredictionSet& preds, const Dataset& d, const Clustering& cl,
                            CostKind kind, double min_mass) {
  ClusterReport report;
  report.clustering = cl.name;
  report.kind = kind;
  report.warnings = cl.warnings;
  for (std::size_t c = 0; c < cl.clusters; ++c) {
    ClusterRow row;
    row.cluster = c;
    row.descriptor = c < cl.descriptors.size() ? cl.descriptors[c] : "cluster " + std::to_string(c);
    std::vector<double> costs;
    for (std::size_t g = 0; g < d.group_count(); ++g) {
      auto cell = cluster_cost(preds, d, cl, kind, static_cast<int>(g), c, min_mass);
      if (cell) {
        costs.push_back(cell->cost);
        if (!cell->reliable)
          report.warnings.push_back(cl.name + ": cell (" + row.descriptor + ", group '" +
                                    d.group_labels()[g] + "') has mass below " +
                                    std::to_string(min_mass));
      }
      row.cells.push_back(cell);
    }
    if (costs.empty()) {
      report.warnings.push_back(cl.name + ": cluster '" + row.descriptor + "' has no evaluable cells; dropped");
      continue;
    }
    const auto [lo, hi] = std::minmax_element(costs.begin(), costs.end());
    row.gap = *hi - *lo;
    const double mean = std::accumulate(costs.begin(), costs.end(), 0.0) / static_cast<double>(costs.size());
    double ss = 0.0;
    for (double v : costs) ss += (v - mean) * (v - mean);
    row.variance = ss / static_cast<double>(costs.size());
    row.enrichment = outcome_enrichment(d, cl, c);
    report.rows.push_back(std::move(row));
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const ClusterRow& a, const ClusterRow& b) {
    if (a.variance != b.variance) return a.variance > b.variance;
    if (a.gap != b.gap) return a.gap > b.gap;
    return a.cluster < b.cluster;
  });
  return report;
}

Clustering parse_memberships(std::string_view csv_text, std::size_t expected_rows) {
  const auto table = parse_csv(csv_text);
  if (table.empty()) throw DataError("membership file is empty");
  const auto& header = table[0];
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] != "q_" + std::to_string(c))
      throw DataError("membership column " + std::to_string(c) + " must be named q_" + std::to_string(c));
  if (table.size() - 1 != expected_rows)
    throw DataError("membership file has " + std::to_string(table.size() - 1) + " rows, dataset has " +
                    std::to_string(expected_rows));
  Matrix q(static_cast<Eigen::Index>(expected_rows), static_cast<Eigen::Index>(header.size()));
  std::size_t renormalized = 0;
  for (std::size_t r = 1; r < table.size(); ++r) {
    if (table[r].size() != header.size())
      throw DataError("membership row " + std::to_string(r) + " has the wrong number of cells");
    for (std::size_t c = 0; c < header.size(); ++c)
      q(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c)) =
          parse_real(table[r][c], "membership");
    auto row = q.row(static_cast<Eigen::Index>(r - 1));
    if ((row.array() < 0.0).any()) throw DataError("membership row " + std::to_string(r) + " is negative");
    const double s = row.sum();
    if (std::fabs(s - 1.0) > 1e-6)
      throw DataError("membership row " + std::to_string(r) + " sums to " + std::to_string(s));
    if (std::fabs(s - 1.0) > 1e-9) {
      row /= s;
      ++renormalized;
    }
  }
  Clustering cl = Clustering::from_soft(std::move(q), "memberships");
  if (renormalized > 0)
    cl.warnings.push_back(std::to_string(renormalized) + " membership rows renormalized to sum to 1");
  return cl;
}

Clustering load_memberships(const std::filesystem::path& path, std::size_t expected_rows) {
  Clustering cl = parse_memberships(read_text_file(path), expected_rows);
  cl.name = path.filename().string();
  return cl;
}

}  // namespace fairaudit
