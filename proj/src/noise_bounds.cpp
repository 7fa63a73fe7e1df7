#include "fairaudit/noise_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairaudit/kernels.hpp"
#include "fairaudit/learners.hpp"
#include "fairaudit/rng.hpp"

namespace fairaudit {

std::string_view to_string(BoundMethod method) {
  switch (method) {
    case BoundMethod::Mahalanobis: return "mahalanobis";
    case BoundMethod::Bhattacharyya: return "bhattacharyya";
    case BoundMethod::NearestNeighbor: return "nearest_neighbor";
  }
  return "?";
}

double mahalanobis_upper_bound(double p1, double p2, double delta) {
  if (!(delta >= 0.0)) throw AnalysisError("Mahalanobis distance must be >= 0");
  return 2.0 * p1 * p2 / (1.0 + p1 * p2 * delta);
}

std::pair<double, double> bhattacharyya_bound_pair(double p1, double p2, double b) {
  const double rho = std::exp(-b);
  const double upper = std::sqrt(p1 * p2) * rho;
  const double lower = 0.5 * (1.0 - std::sqrt(std::max(0.0, 1.0 - 4.0 * p1 * p2 * rho * rho)));
  return {lower, upper};
}

double cover_hart_lower(double nn_error) {
  if (!(nn_error >= 0.0 && nn_error <= 1.0)) throw AnalysisError("error rate outside [0,1]");
  if (nn_error > 0.5) return 0.5;
  return 0.5 * (1.0 - std::sqrt(std::max(0.0, 1.0 - 2.0 * nn_error)));
}

namespace {

struct ClassSplit {
  Matrix x0;
  Matrix x1;
  double p0 = 0.0;
  double p1 = 0.0;
  std::string label;
};

ClassSplit split_by_class(const Dataset& d, int group, const NoiseBoundOptions& opt,
                          std::size_t min_per_class) {
  if (d.task() != Task::BinaryClassification) throw AnalysisError("noise bounds need a binary task");
  if (group < 0 || static_cast<std::size_t>(group) >= d.group_count())
    throw AnalysisError("noise bounds: group index out of range");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.group()[i] == group) rows.push_back(i);
  Matrix xg = d.rows(rows).features();
  if (opt.standardize && xg.rows() > 0) xg = Standardizer::fit(xg).apply(xg);
  std::vector<Eigen::Index> c0;
  std::vector<Eigen::Index> c1;
  for (std::size_t r = 0; r < rows.size(); ++r)
    (d.outcome()[rows[r]] == 1.0 ? c1 : c0).push_back(static_cast<Eigen::Index>(r));
  ClassSplit s;
  s.label = d.group_labels()[static_cast<std::size_t>(group)];
  if (c0.size() < min_per_class || c1.size() < min_per_class)
    throw AnalysisError("noise bounds: group '" + s.label + "' needs at least " +
                        std::to_string(min_per_class) + " rows of each class");
  s.x0 = xg(c0, Eigen::all);
  s.x1 = xg(c1, Eigen::all);
  const double n = static_cast<double>(rows.size());
  s.p0 = static_cast<double>(c0.size()) / n;
  s.p1 = static_cast<double>(c1.size()) / n;
  return s;
}

Eigen::MatrixXd covariance(const Matrix& x, const Eigen::RowVectorXd& mean) {
  const Eigen::MatrixXd c = x.rowwise() - mean;
  return c.transpose() * c / static_cast<double>(x.rows() - 1);
}

double ridge(const Eigen::MatrixXd& sigma, const NoiseBoundOptions& opt) {
  const double k = static_cast<double>(sigma.rows());
  const double tr = sigma.trace();
  if (!std::isfinite(tr)) throw AnalysisError("noise bounds: non-finite covariance");
  return opt.ridge_factor * (tr > 0.0 ? tr / k : 1.0);
}

double log_det(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw AnalysisError("noise bounds: regularized covariance is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

NoiseBoundEstimate mahalanobis_upper(const Dataset& d, int group, const NoiseBoundOptions& opt) {
  const auto s = split_by_class(d, group, opt, 2);
  const Eigen::RowVectorXd m0 = s.x0.colwise().mean();
  const Eigen::RowVectorXd m1 = s.x1.colwise().mean();
  const double n0 = static_cast<double>(s.x0.rows());
  const double n1 = static_cast<double>(s.x1.rows());
  Eigen::MatrixXd pooled =
      ((n0 - 1.0) * covariance(s.x0, m0) + (n1 - 1.0) * covariance(s.x1, m1)) / (n0 + n1 - 2.0);
  const double lambda = ridge(pooled, opt);
  pooled.diagonal().array() += lambda;
  const Eigen::VectorXd diff = (m1 - m0).transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(pooled);
  if (llt.info() != Eigen::Success)
    throw AnalysisError("noise bounds: regularized covariance is not positive definite");
  const double delta = std::max(0.0, diff.dot(llt.solve(diff)));
  NoiseBoundEstimate e;
  e.method = BoundMethod::Mahalanobis;
  e.group = group;
  e.label = s.label;
  e.prior0 = s.p0;
  e.prior1 = s.p1;
  e.upper = mahalanobis_upper_bound(s.p1, s.p0, delta);
  e.auxiliary = {{"delta", delta}, {"ridge", lambda}};
  return e;
}

NoiseBoundEstimate bhattacharyya_bounds(const Dataset& d, int group, const NoiseBoundOptions& opt) {
  const auto s = split_by_class(d, group, opt, 2);
  const Eigen::RowVectorXd m0 = s.x0.colwise().mean();
  const Eigen::RowVectorXd m1 = s.x1.colwise().mean();
  Eigen::MatrixXd c0 = covariance(s.x0, m0);
  Eigen::MatrixXd c1 = covariance(s.x1, m1);
  const double lambda = ridge(0.5 * (c0 + c1), opt);
  c0.diagonal().array() += lambda;
  c1.diagonal().array() += lambda;
  const Eigen::MatrixXd avg = 0.5 * (c0 + c1);
  const Eigen::VectorXd diff = (m1 - m0).transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(avg);
  if (llt.info() != Eigen::Success)
    throw AnalysisError("noise bounds: regularized covariance is not positive definite");
  const double delta_avg = std::max(0.0, diff.dot(llt.solve(diff)));
  const double b = delta_avg / 8.0 + 0.5 * (log_det(avg) - 0.5 * (log_det(c0) + log_det(c1)));
  const auto [lower, upper] = bhattacharyya_bound_pair(s.p1, s.p0, b);
  NoiseBoundEstimate e;
  e.method = BoundMethod::Bhattacharyya;
  e.group = group;
  e.label = s.label;
  e.prior0 = s.p0;
  e.prior1 = s.p1;
  e.lower = lower;
  e.upper = upper;
  e.auxiliary = {{"distance", b}, {"ridge", lambda}};
  return e;
}

NoiseBoundEstimate nn_bounds(const Dataset& d, int group, std::size_t k, std::size_t folds,
                             std::uint64_t seed, const NoiseBoundOptions& opt, Execution exec) {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (d.task() != Task::BinaryClassification) throw AnalysisError("noise bounds need a binary task");
  if (group < 0 || static_cast<std::size_t>(group) >= d.group_count())
    throw AnalysisError("noise bounds: group index out of range");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.group()[i] == group) rows.push_back(i);
  const std::string label = d.group_labels()[static_cast<std::size_t>(group)];
  if (rows.size() < 2 * folds)
    throw AnalysisError("noise bounds: group '" + label + "' has too few rows for " +
                        std::to_string(folds) + "-fold cross-validation");
  const Dataset g = d.rows(rows);
  const Matrix x = opt.standardize ? Standardizer::fit(g.features()).apply(g.features()) : g.features();

  // Fold of the i-th row in a seeded permutation is i mod folds.
  const auto perm = subsample_index(rows.size(), rows.size(), seed);
  std::vector<std::size_t> fold(rows.size());
  for (std::size_t p = 0; p < perm.size(); ++p) fold[perm[p]] = p % folds;

  std::size_t errors = 0;
  std::size_t ones = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train_rows;
    std::vector<Eigen::Index> test_rows;
    for (std::size_t r = 0; r < rows.size(); ++r)
      (fold[r] == f ? test_rows : train_rows).push_back(static_cast<Eigen::Index>(r));
    const Matrix ref = x(train_rows, Eigen::all);
    const Matrix q = x(test_rows, Eigen::all);
    const auto nb = nearest_neighbors(ref, q, k, exec);
    const std::size_t kk = nb.size() / test_rows.size();
    for (std::size_t t = 0; t < test_rows.size(); ++t) {
      double votes = 0.0;
      for (std::size_t j = 0; j < kk; ++j)
        votes += g.outcome()[static_cast<std::size_t>(train_rows[nb[t * kk + j]])];
      const double predicted = votes / static_cast<double>(kk) >= 0.5 ? 1.0 : 0.0;
      if (predicted != g.outcome()[static_cast<std::size_t>(test_rows[t])]) ++errors;
    }
  }
  for (double y : g.outcome()) ones += y == 1.0 ? 1 : 0;
  const double eps = static_cast<double>(errors) / static_cast<double>(rows.size());
  NoiseBoundEstimate e;
  e.method = BoundMethod::NearestNeighbor;
  e.group = group;
  e.label = label;
  e.prior1 = static_cast<double>(ones) / static_cast<double>(rows.size());
  e.prior0 = 1.0 - e.prior1;
  e.upper = std::min(eps, 0.5);
  e.lower = cover_hart_lower(eps);
  if (eps > 0.5) e.warnings.push_back("k-NN error above 0.5; bounds clamped at 0.5");
  e.auxiliary = {{"cv_error", eps}, {"k", static_cast<double>(k)}, {"folds", static_cast<double>(folds)}};
  return e;
}

}  // namespace fairaudit
