#include "fairaudit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fairaudit/rng.hpp"

namespace fairaudit {

namespace {

void check_distribution(const std::vector<double>& p, const char* what) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(what) + ": entry outside [0,1]");
    total += v;
  }
  if (std::fabs(total - 1.0) > 1e-12) throw ConfigError(std::string(what) + " does not sum to 1");
}

std::vector<std::string> index_labels(std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(std::to_string(i));
  return out;
}

double conditional_mean_regression(double x) { return 2.0 * x * x - 2.0 * x + 0.1; }

}  // namespace

void RegressionSynthSpec::validate() const {
  if (!(p_group1 > 0.0 && p_group1 < 1.0)) throw ConfigError("p(A=1) must lie in (0,1)");
  if (!(sigma[0] > 0.0 && sigma[1] > 0.0)) throw ConfigError("group feature sigma must be > 0");
  if (!(sigma_eps > 0.0)) throw ConfigError("sigma_eps must be > 0");
}

void DiscreteSynthSpec::validate() const {
  if (group_prior.size() < 2) throw ConfigError("discrete spec needs at least 2 groups");
  if (feature_given_group.size() != group_prior.size() || outcome_table.size() != group_prior.size())
    throw ConfigError("discrete spec tables must have one row per group");
  check_distribution(group_prior, "group prior");
  const std::size_t m = alphabet();
  if (m == 0) throw ConfigError("discrete spec needs a nonempty alphabet");
  for (std::size_t a = 0; a < groups(); ++a) {
    if (feature_given_group[a].size() != m || outcome_table[a].size() != m)
      throw ConfigError("discrete spec rows must share the alphabet size");
    check_distribution(feature_given_group[a], "p(x|a)");
    for (double p : outcome_table[a])
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("outcome table entry outside [0,1]");
  }
}

DiscreteSynthSpec DiscreteSynthSpec::default_spec() {
  DiscreteSynthSpec s;
  s.group_prior = {0.65, 0.35};
  const double centre[2] = {3.0, 6.0};
  for (int a = 0; a < 2; ++a) {
    std::vector<double> w(10);
    for (int x = 0; x < 10; ++x) w[x] = std::exp(-0.5 * std::pow((x - centre[a]) / 2.2, 2));
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= total;
    // Absorb the rounding residue so the row sums to 1 within 1e-12.
    w.back() = 1.0 - std::accumulate(w.begin(), w.end() - 1, 0.0);
    s.feature_given_group.push_back(std::move(w));
  }
  s.outcome_table = {
      {0.05, 0.10, 0.20, 0.30, 0.45, 0.60, 0.70, 0.80, 0.90, 0.95},
      {0.20, 0.30, 0.40, 0.45, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80},
  };
  return s;
}

std::size_t discrete_value(std::span<const double> x) {
  for (std::size_t j = 0; j < x.size(); ++j)
    if (x[j] == 1.0) return j;
  throw AnalysisError("row is not a one-hot discrete feature vector");
}

ConditionalOutcomeModel outcome_model(const RegressionSynthSpec& spec) {
  spec.validate();
  const double s2 = spec.sigma_eps * spec.sigma_eps;
  const bool homo = spec.homoskedastic;
  return ConditionalOutcomeModel::known_regression(
      [](std::span<const double> x, int) { return conditional_mean_regression(x[0]); },
      [s2, homo](std::span<const double> x, int) {
        const double x2 = x[0] * x[0];
        return homo ? s2 : s2 * x2 * x2;
      });
}

ConditionalOutcomeModel outcome_model(const DiscreteSynthSpec& spec) {
  spec.validate();
  auto table = spec.outcome_table;
  return ConditionalOutcomeModel::known_binary(
      [table = std::move(table)](std::span<const double> x, int a) {
        return table.at(static_cast<std::size_t>(a)).at(discrete_value(x));
      });
}

SynthSample gen_regression(const RegressionSynthSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw ConfigError("synthetic sample size must be >= 1");
  Rng rng(seed);
  std::bernoulli_distribution group1(spec.p_group1);
  std::normal_distribution<double> unit(0.0, 1.0);
  Matrix x(static_cast<Eigen::Index>(n), 1);
  std::vector<int> group(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int a = group1(rng) ? 1 : 0;
    const double xi = spec.mu[a] + spec.sigma[a] * unit(rng);
    const double eps = spec.sigma_eps * unit(rng);
    group[i] = a;
    x(static_cast<Eigen::Index>(i), 0) = xi;
    y[i] = conditional_mean_regression(xi) + (spec.homoskedastic ? eps : eps * xi * xi);
  }
  return {Dataset(std::move(x), std::move(group), std::move(y), Task::Regression, {"x"},
                  index_labels(2), {}, "group", "y"),
          outcome_model(spec)};
}

SynthSample gen_discrete(const DiscreteSynthSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw ConfigError("synthetic sample size must be >= 1");
  const std::size_t m = spec.alphabet();
  Rng rng(seed);
  std::discrete_distribution<int> pick_group(spec.group_prior.begin(), spec.group_prior.end());
  std::vector<std::discrete_distribution<std::size_t>> pick_x;
  for (const auto& row : spec.feature_given_group) pick_x.emplace_back(row.begin(), row.end());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  std::vector<int> group(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int a = pick_group(rng);
    const std::size_t v = pick_x[static_cast<std::size_t>(a)](rng);
    group[i] = a;
    x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(v)) = 1.0;
    y[i] = unif(rng) < spec.outcome_table[static_cast<std::size_t>(a)][v] ? 1.0 : 0.0;
  }
  std::vector<std::string> names;
  for (std::size_t v = 0; v < m; ++v) names.push_back("x=" + std::to_string(v));
  return {Dataset(std::move(x), std::move(group), std::move(y), Task::BinaryClassification,
                  std::move(names), index_labels(spec.groups()), {}, "group", "y"),
          outcome_model(spec)};
}

double gaussian_fourth_moment(double mu, double sigma) {
  const double m2 = mu * mu;
  const double s2 = sigma * sigma;
  return m2 * m2 + 6.0 * m2 * s2 + 3.0 * s2 * s2;
}

ExactBayes exact_bayes(const RegressionSynthSpec& spec) {
  spec.validate();
  ExactBayes out;
  const double s2 = spec.sigma_eps * spec.sigma_eps;
  for (int a = 0; a < 2; ++a)
    out.noise.push_back(spec.homoskedastic ? s2 : s2 * gaussian_fourth_moment(spec.mu[a], spec.sigma[a]));
  return out;
}

ExactBayes exact_bayes(const DiscreteSynthSpec& spec) {
  spec.validate();
  ExactBayes out;
  for (std::size_t a = 0; a < spec.groups(); ++a) {
    double noise = 0.0;
    std::vector<int> labels;
    for (std::size_t v = 0; v < spec.alphabet(); ++v) {
      const double p = spec.outcome_table[a][v];
      noise += spec.feature_given_group[a][v] * std::min(p, 1.0 - p);
      labels.push_back(p > 0.5 ? 1 : 0);
    }
    out.noise.push_back(noise);
    out.bayes_label.push_back(std::move(labels));
  }
  return out;
}

}  // namespace fairaudit
