#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fairaudit/outcome_model.hpp"

namespace fairaudit {

/// Y = 2X^2 - 2X + 0.1 + eps * X^2 with eps ~ Normal(0, sigma_eps^2) and
/// X | A=a ~ Normal(mu_a, sigma_a^2). The homoskedastic variant drops the
/// X^2 factor on the noise term.
struct RegressionSynthSpec {
  double p_group1 = 0.3;
  std::array<double, 2> mu{0.0, 1.0};
  std::array<double, 2> sigma{1.0, 2.0};
  double sigma_eps = 1.0;
  bool homoskedastic = false;

  void validate() const;
};

/// Categorical feature x in {0..m-1}, one-hot encoded as columns "x=0".."x=m-1".
struct DiscreteSynthSpec {
  std::vector<double> group_prior;                      // p(a)
  std::vector<std::vector<double>> feature_given_group;  // p(x | a), rows sum to 1
  std::vector<std::vector<double>> outcome_table;        // p(Y=1 | x, a)

  std::size_t alphabet() const { return feature_given_group.empty() ? 0 : feature_given_group[0].size(); }
  std::size_t groups() const { return group_prior.size(); }
  void validate() const;

  /// Ten feature values, two groups with shifted overlapping supports and a
  /// heteroskedastic outcome table.
  static DiscreteSynthSpec default_spec();
};

struct SynthSample {
  Dataset data;
  ConditionalOutcomeModel model;
};

SynthSample gen_regression(const RegressionSynthSpec& spec, std::size_t n, std::uint64_t seed);
SynthSample gen_discrete(const DiscreteSynthSpec& spec, std::size_t n, std::uint64_t seed);

ConditionalOutcomeModel outcome_model(const RegressionSynthSpec& spec);
ConditionalOutcomeModel outcome_model(const DiscreteSynthSpec& spec);

/// Gaussian fourth moment E[X^4] = mu^4 + 6 mu^2 sigma^2 + 3 sigma^4.
double gaussian_fourth_moment(double mu, double sigma);

struct ExactBayes {
  std::vector<double> noise;                 // N-bar per group
  std::vector<std::vector<int>> bayes_label;  // discrete: y*(x, a), indexed [a][x]
};

ExactBayes exact_bayes(const RegressionSynthSpec& spec);
ExactBayes exact_bayes(const DiscreteSynthSpec& spec);

/// Category decoded from a one-hot row of a discrete synthetic dataset.
std::size_t discrete_value(std::span<const double> x);

}  // namespace fairaudit
