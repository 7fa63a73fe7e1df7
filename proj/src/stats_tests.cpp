#include "fairaudit/stats_tests.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fairaudit/distributions.hpp"
#include "fairaudit/rng.hpp"

namespace fairaudit {

namespace {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  std::size_t count = 0;
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  m.count = x.size();
  if (x.empty()) return m;
  long double s = 0.0L;
  for (double v : x) s += v;
  const long double mean = s / static_cast<long double>(x.size());
  long double ss = 0.0L;
  for (double v : x) ss += (v - mean) * (v - mean);
  m.mean = static_cast<double>(mean);
  m.variance = x.size() > 1 ? static_cast<double>(ss / static_cast<long double>(x.size() - 1)) : 0.0;
  return m;
}

// Signed infinity is not representable in reports; saturate instead.
double saturate(double v) {
  constexpr double big = std::numeric_limits<double>::max();
  return std::clamp(v, -big, big);
}

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("significance level must lie in (0,1)");
}

}  // namespace

TestResult make_test_result(std::string name, double statistic, double p_value, double level) {
  check_level(level);
  TestResult r;
  r.name = std::move(name);
  r.statistic = saturate(statistic);
  r.p_value = std::clamp(p_value, 0.0, 1.0);
  r.level = level;
  r.reject = r.p_value < level;
  return r;
}

TestResult two_sample_z_test(double mean0, double var0, std::size_t m0, double mean1,
                             double var1, std::size_t m1, double level) {
  if (m0 == 0 || m1 == 0) throw AnalysisError("z-test needs samples in both groups");
  const double diff = mean0 - mean1;
  const double se = std::sqrt(var0 / static_cast<double>(m0) + var1 / static_cast<double>(m1));
  double z = 0.0;
  double p = 1.0;
  std::vector<std::string> warnings;
  if (se > 0.0) {
    z = diff / se;
    p = normal_two_sided_p(z);
  } else if (diff != 0.0) {
    z = std::copysign(std::numeric_limits<double>::infinity(), diff);
    p = 0.0;
    warnings.push_back("zero standard error with unequal means");
  }
  auto r = make_test_result("two_sample_z", z, p, level);
  r.warnings = std::move(warnings);
  r.auxiliary = {{"difference", diff}, {"standard_error", se}};
  return r;
}

TestResult gamma_z_test(const PredictionSet& preds, const Dataset& d, CostKind kind, double level,
                        GroupPair pair) {
  if (pair.first == pair.second) throw AnalysisError("z-test needs two distinct groups");
  const auto g0 = group_cost(preds, d, kind, pair.first);
  const auto g1 = group_cost(preds, d, kind, pair.second);
  auto r = two_sample_z_test(g0.cost, g0.variance, g0.count, g1.cost, g1.variance, g1.count, level);
  r.name = "gamma_z_test:" + std::string(to_string(kind));
  r.auxiliary["cost_first"] = g0.cost;
  r.auxiliary["cost_second"] = g1.cost;
  r.auxiliary["variance_first"] = g0.variance;
  r.auxiliary["variance_second"] = g1.variance;
  r.auxiliary["count_first"] = static_cast<double>(g0.count);
  r.auxiliary["count_second"] = static_cast<double>(g1.count);
  if (g0.count < 30 || g1.count < 30)
    r.warnings.push_back("small sample (m < 30): normal approximation may be inaccurate");
  return r;
}

TestResult compare_discrimination_test(const PredictionSet& a, const PredictionSet& b,
                                       const Dataset& d, CostKind kind, double level,
                                       GroupPair pair) {
  validate_predictions(a, d, kind);
  validate_predictions(b, d, kind);
  if (pair.first == pair.second) throw AnalysisError("comparison needs two distinct groups");
  double z_stat[2] = {0.0, 0.0};
  double p[2] = {1.0, 1.0};
  double raw[2] = {0.0, 0.0};
  const int alphas[2] = {-1, +1};
  for (int s = 0; s < 2; ++s) {
    std::vector<double> u0;
    std::vector<double> u1;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!in_cost_subset(kind, d, i)) continue;
      const double u = alphas[s] * sample_loss(kind, a, d, i) - sample_loss(kind, b, d, i);
      if (d.group()[i] == pair.first) u0.push_back(u);
      else if (d.group()[i] == pair.second) u1.push_back(u);
    }
    if (u0.empty() || u1.empty())
      throw AnalysisError("comparison: a group has no rows in the conditioning subset");
    const auto m0 = moments(u0);
    const auto m1 = moments(u1);
    auto t = two_sample_z_test(m0.mean, m0.variance, m0.count, m1.mean, m1.variance, m1.count,
                               level);
    raw[s] = m0.mean - m1.mean;
    z_stat[s] = t.statistic;
    p[s] = t.p_value;
  }
  // |Gamma - Gamma'| = min over alpha of |Z_alpha|; H0 survives unless both are unlikely.
  const double pmax = std::max(p[0], p[1]);
  auto r = make_test_result("compare_discrimination:" + std::string(to_string(kind)),
                            std::min(std::fabs(raw[0]), std::fabs(raw[1])), pmax, level);
  r.auxiliary = {{"z_minus", raw[0]},       {"z_plus", raw[1]},
                 {"zscore_minus", z_stat[0]}, {"zscore_plus", z_stat[1]},
                 {"p_minus", p[0]},           {"p_plus", p[1]}};
  return r;
}

Interval bootstrap_gamma_ci(const PredictionSet& preds, const Dataset& d, CostKind kind,
                            std::size_t reps, double level, std::uint64_t seed, Execution exec) {
  check_level(level);
  if (reps < 100) throw ConfigError("bootstrap needs at least 100 replicates");
  validate_predictions(preds, d, kind);
  Interval out;
  out.estimate = discrimination_level(preds, d, kind).gap;
  std::vector<double> gaps(reps, std::numeric_limits<double>::quiet_NaN());
  for_each_index(reps, exec, [&](std::size_t r) {
    const auto idx = bootstrap_index(d.size(), d.size(), derive_seed(seed, r));
    PredictionSet sub;
    sub.predictions.reserve(idx.size());
    for (auto i : idx) sub.predictions.push_back(preds.predictions[i]);
    if (preds.has_scores())
      for (auto i : idx) sub.scores.push_back(preds.scores[i]);
    const auto rows = d.rows(idx);
    try {
      gaps[r] = discrimination_level(sub, rows, kind).gap;
    } catch (const AnalysisError&) {
      // resample lost a group; counted below
    }
  });
  std::vector<double> kept;
  for (double g : gaps)
    if (!std::isnan(g)) kept.push_back(g);
  out.replicates = reps;
  out.skipped = reps - kept.size();
  if (static_cast<double>(out.skipped) > 0.1 * static_cast<double>(reps))
    throw AnalysisError("bootstrap: " + std::to_string(out.skipped) + " of " +
                        std::to_string(reps) + " resamples lacked an evaluable group");
  std::sort(kept.begin(), kept.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(kept.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, kept.size() - 1);
    return kept[lo] + (pos - static_cast<double>(lo)) * (kept[hi] - kept[lo]);
  };
  out.lower = quantile(level / 2.0);
  out.upper = quantile(1.0 - level / 2.0);
  return out;
}

TestResult anova_f(const std::vector<std::vector<double>>& groups, double level) {
  if (groups.size() < 2) throw AnalysisError("ANOVA needs at least 2 groups");
  std::size_t total = 0;
  long double grand = 0.0L;
  for (const auto& g : groups) {
    if (g.size() < 2) throw AnalysisError("ANOVA needs at least 2 samples per group");
    total += g.size();
    for (double v : g) grand += v;
  }
  grand /= static_cast<long double>(total);
  long double ssb = 0.0L;
  long double ssw = 0.0L;
  for (const auto& g : groups) {
    const auto m = moments(g);
    ssb += static_cast<long double>(g.size()) * (m.mean - grand) * (m.mean - grand);
    for (double v : g) ssw += (v - m.mean) * (v - m.mean);
  }
  const double df1 = static_cast<double>(groups.size() - 1);
  const double df2 = static_cast<double>(total - groups.size());
  double f = 0.0;
  double p = 1.0;
  std::vector<std::string> warnings;
  if (ssw > 0.0L) {
    f = static_cast<double>((ssb / df1) / (ssw / df2));
    p = f_upper_tail(f, df1, df2);
  } else if (ssb > 0.0L) {
    f = std::numeric_limits<double>::infinity();
    p = 0.0;
    warnings.push_back("zero within-group variance with unequal means");
  }
  auto r = make_test_result("anova_f", f, p, level);
  r.warnings = std::move(warnings);
  r.auxiliary = {{"df_between", df1},
                 {"df_within", df2},
                 {"ss_between", static_cast<double>(ssb)},
                 {"ss_within", static_cast<double>(ssw)}};
  return r;
}

TestResult pooled_t_test(const std::vector<double>& x, const std::vector<double>& y, double level) {
  if (x.size() < 2 || y.size() < 2) throw AnalysisError("t test needs at least 2 samples per group");
  const auto mx = moments(x);
  const auto my = moments(y);
  const double df = static_cast<double>(x.size() + y.size() - 2);
  const double sp2 = ((static_cast<double>(x.size()) - 1) * mx.variance +
                      (static_cast<double>(y.size()) - 1) * my.variance) / df;
  const double se = std::sqrt(sp2 * (1.0 / static_cast<double>(x.size()) + 1.0 / static_cast<double>(y.size())));
  const double diff = mx.mean - my.mean;
  double t = 0.0;
  double p = 1.0;
  if (se > 0.0) {
    t = diff / se;
    p = student_t_two_sided_p(t, df);
  } else if (diff != 0.0) {
    t = std::copysign(std::numeric_limits<double>::infinity(), diff);
    p = 0.0;
  }
  auto r = make_test_result("pooled_t", t, p, level);
  r.auxiliary = {{"df", df}};
  return r;
}

TestResult welch_t_test(const std::vector<double>& x, const std::vector<double>& y, double level) {
  if (x.size() < 2 || y.size() < 2) throw AnalysisError("Welch test needs at least 2 samples per group");
  const auto mx = moments(x);
  const auto my = moments(y);
  const double rx = mx.variance / static_cast<double>(x.size());
  const double ry = my.variance / static_cast<double>(y.size());
  const double se = std::sqrt(rx + ry);
  const double diff = mx.mean - my.mean;
  double t = 0.0;
  double p = 1.0;
  double df = static_cast<double>(x.size() + y.size() - 2);
  if (se > 0.0) {
    t = diff / se;
    df = (rx + ry) * (rx + ry) /
         (rx * rx / static_cast<double>(x.size() - 1) + ry * ry / static_cast<double>(y.size() - 1));
    p = student_t_two_sided_p(t, df);
  } else if (diff != 0.0) {
    t = std::copysign(std::numeric_limits<double>::infinity(), diff);
    p = 0.0;
  }
  auto r = make_test_result("welch_t", t, p, level);
  r.auxiliary = {{"df", df}, {"mean_first", mx.mean}, {"mean_second", my.mean}};
  return r;
}

std::vector<double> holm_adjust(const std::vector<double>& p) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
  std::vector<double> adjusted(m);
  double running = 0.0;
  for (std::size_t rank = 0; rank < m; ++rank) {
    const double v = std::min(1.0, static_cast<double>(m - rank) * p[order[rank]]);
    running = std::max(running, v);
    adjusted[order[rank]] = running;
  }
  return adjusted;
}

std::vector<PairwiseResult> pairwise_welch_holm(const std::vector<std::vector<double>>& groups,
                                                double level) {
  if (groups.size() < 2) throw AnalysisError("pairwise tests need at least 2 groups");
  std::vector<PairwiseResult> out;
  for (std::size_t i = 0; i < groups.size(); ++i)
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      PairwiseResult pr;
      pr.first = static_cast<int>(i);
      pr.second = static_cast<int>(j);
      pr.result = welch_t_test(groups[i], groups[j], level);
      out.push_back(std::move(pr));
    }
  std::vector<double> raw;
  for (const auto& pr : out) raw.push_back(pr.result.p_value);
  const auto adjusted = holm_adjust(raw);
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto& r = out[k].result;
    r.name = "welch_holm";
    r.auxiliary["raw_p"] = raw[k];
    r.p_value = adjusted[k];
    r.reject = r.p_value < level;
  }
  return out;
}

std::vector<std::vector<double>> group_loss_samples(const PredictionSet& preds, const Dataset& d,
                                                    CostKind kind) {
  validate_predictions(preds, d, kind);
  std::vector<std::vector<double>> out(d.group_count());
  for (std::size_t i = 0; i < d.size(); ++i)
    if (in_cost_subset(kind, d, i))
      out[static_cast<std::size_t>(d.group()[i])].push_back(sample_loss(kind, preds, d, i));
  return out;
}

}  // namespace fairaudit
