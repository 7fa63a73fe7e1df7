#include <cmath>
#include <limits>

#include "doctest.h"
#include "fairaudit/learning_curves.hpp"
#include "fairaudit/synth.hpp"
#include "support.hpp"

using namespace fairaudit;

namespace {

PowerLawFit curve(double a, double b, double c) {
  PowerLawFit f;
  f.alpha = a;
  f.beta = b;
  f.delta = c;
  f.n_min = 1;
  f.n_max = 1000;
  return f;
}

std::vector<CurvePoint> sample(double a, double b, double c, const std::vector<double>& ns) {
  std::vector<CurvePoint> pts;
  for (double n : ns) pts.push_back({n, a * std::pow(n, -b) + c, 1.0});
  return pts;
}

}  // namespace

TEST_CASE("noiseless power law is recovered") {
  const auto f = fit_power_law(sample(2.0, 0.5, 0.1, {10, 100, 1e3, 1e4, 1e5}));
  CHECK(f.alpha == doctest::Approx(2.0).epsilon(0.01));
  CHECK(f.beta == doctest::Approx(0.5).epsilon(0.01));
  CHECK(f.delta == doctest::Approx(0.1).epsilon(0.01));
  CHECK(f.n_min == 10);
  CHECK(f.n_max == 1e5);
  const auto g = fit_power_law(sample(0.8, 1.7, 0.02, {20, 50, 100, 400, 1000, 5000}));
  CHECK(g.alpha == doctest::Approx(0.8).epsilon(0.01));
  CHECK(g.beta == doctest::Approx(1.7).epsilon(0.01));
  CHECK(g.delta == doctest::Approx(0.02).epsilon(0.01));
}

TEST_CASE("flat curve fits its constant") {
  const auto f = fit_power_law(sample(0.0, 1.0, 0.3, {100, 200, 400, 800}));
  for (double n : {100.0, 150.0, 800.0, 1e6}) CHECK(std::fabs(f(n) - 0.3) < 1e-9);
}

TEST_CASE("fit never loses to the flat fit and decreases in n") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<CurvePoint> pts;
    long double mean = 0.0L;
    for (double n : {50.0, 100.0, 200.0, 400.0, 800.0}) {
      pts.push_back({n, u(rng), 1.0 + std::floor(3.0 * u(rng))});
    }
    long double w = 0.0L;
    for (const auto& p : pts) {
      mean += p.weight * p.value;
      w += p.weight;
    }
    mean /= w;
    double flat = 0.0;
    for (const auto& p : pts) flat += p.weight * (p.value - static_cast<double>(mean)) * (p.value - static_cast<double>(mean));
    const auto f = fit_power_law(pts);
    CHECK(f.rss <= flat + 1e-12);
    CHECK(f.alpha >= 0.0);
    CHECK(f.delta >= 0.0);
    CHECK(f.beta >= 0.01);
    CHECK(f.beta <= 3.0);
    CHECK(f(800.0) <= f(50.0));
  }
}

TEST_CASE("fit input validation") {
  CHECK_THROWS_AS(fit_power_law(sample(1, 1, 0, {10, 20})), AnalysisError);
  CHECK_THROWS_AS(fit_power_law(sample(1, 1, 0, {10, 10, 10, 10})), AnalysisError);
}

TEST_CASE("discrimination extrapolation") {
  const auto f = curve(2, 0.5, 0.1);
  CHECK(extrapolate_gamma(f, f, 123.0).gamma == 0.0);
  CHECK(extrapolate_gamma(f, curve(1, 0.5, 0.1), 100.0).gamma == doctest::Approx(0.1));
  const auto inf = extrapolate_gamma(f, curve(1, 0.5, 0.35), std::numeric_limits<double>::infinity());
  CHECK(inf.gamma == doctest::Approx(0.25));
  CHECK(inf.beyond_range);
  CHECK_FALSE(extrapolate_gamma(f, f, 10000.0).beyond_range);
  CHECK(extrapolate_gamma(f, f, 10001.0).beyond_range);
  auto a = f;
  a.kind = CostKind::FPR;
  auto b = f;
  b.kind = CostKind::FNR;
  CHECK_THROWS_AS(extrapolate_gamma(a, b, 10.0), AnalysisError);
}

TEST_CASE("critical points") {
  const auto x = power_law_critical_point(curve(100, 2, 1), curve(50, 1, 0));
  REQUIRE(x.has_value());
  CHECK(std::fabs(*x - 4.0) < 1e-9);
  const auto same_exp = power_law_critical_point(curve(1, 1, 0.5), curve(3, 1, 0));
  REQUIRE(same_exp.has_value());
  CHECK(*same_exp == doctest::Approx(4.0));
  CHECK_FALSE(power_law_critical_point(curve(3, 1, 0.5), curve(1, 1, 0)).has_value());
}

TEST_CASE("crossings") {
  const auto c = power_law_crossings(curve(100, 2, 1), curve(50, 1, 0), 0.1, 1e6);
  REQUIRE(c.roots.size() == 2);
  CHECK(std::fabs(c.roots[0] - (50.0 - std::sqrt(2100.0)) / 2.0) < 1e-6);
  CHECK(std::fabs(c.roots[1] - (50.0 + std::sqrt(2100.0)) / 2.0) < 1e-6);
  CHECK(std::fabs(c.roots[0] - 2.0871) < 1e-4);
  CHECK(std::fabs(c.roots[1] - 47.9129) < 1e-4);
  const auto same = power_law_crossings(curve(2, 1, 1), curve(2, 1, 1), 1, 10);
  CHECK(same.degenerate);
  CHECK(same.roots.empty());
  CHECK(power_law_crossings(curve(2, 1, 1), curve(1, 1, 0.5), 1, 1e6).roots.empty());
  CHECK_THROWS_AS(power_law_crossings(curve(2, 1, 1), curve(1, 1, 0), 0.0, 1.0), AnalysisError);
  CHECK_THROWS_AS(power_law_crossings(curve(2, 1, 1), curve(1, 1, 0), 5.0, 1.0), AnalysisError);
}

TEST_CASE("at most two crossings for random positive parameters") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> la(-2.0, 3.0);
  std::uniform_real_distribution<double> be(0.05, 3.0);
  std::uniform_real_distribution<double> de(0.0, 1.0);
  std::size_t two = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto f = curve(std::pow(10.0, la(rng)), be(rng), de(rng));
    const auto g = curve(std::pow(10.0, la(rng)), be(rng), de(rng));
    const auto c = power_law_crossings(f, g, 1e-3, 1e9);
    CHECK(c.roots.size() <= 2);
    for (double r : c.roots) CHECK(std::fabs(f(r) - g(r)) <= 1e-8 * std::max(1.0, f(r)));
    if (c.roots.size() == 2) ++two;
  }
  CHECK(two > 0);
}

TEST_CASE("curve experiment bookkeeping") {
  const auto d = gen_discrete(DiscreteSynthSpec::default_spec(), 1000, 1).data;
  LearnerSpec spec;
  spec.kind = LearnerKind::Tree;
  const std::vector<CostKind> kinds{CostKind::ZeroOne, CostKind::FPR};
  const auto one = run_curve_experiment(spec, d, {100}, 1, kinds, 5);
  CHECK(one.cells.size() == 2 * 2);
  for (const auto& c : one.cells) CHECK(c.cost.has_value());
  const auto a = run_curve_experiment(spec, d, {50, 100, 400}, 3, kinds, 5);
  const auto b = run_curve_experiment(spec, d, {50, 100, 400}, 3, kinds, 5);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i].cost == b.cells[i].cost);
  CHECK(a.summaries().size() == 3 * 2 * 2);
  for (const auto& s : a.summaries()) CHECK(s.trials == 3);
  CHECK(curve_points(a, 0, CostKind::ZeroOne).size() == 3);
  CHECK_THROWS_AS(run_curve_experiment(spec, d, {801}, 1, kinds, 5), ConfigError);
  CHECK_THROWS_AS(run_curve_experiment(spec, d, {100}, 1, kinds, 5, 0.1), ConfigError);
  CHECK_THROWS_AS(run_curve_experiment(spec, d, {200, 100}, 1, kinds, 5), ConfigError);
  CHECK_THROWS_AS(run_curve_experiment(spec, d, {100}, 0, kinds, 5), ConfigError);
}

TEST_CASE("measured curve matches a simulated population curve") {
  // Oracle: exact held-out risk of trees trained on fresh draws, averaged.
  const auto spec = DiscreteSynthSpec::default_spec();
  LearnerSpec tree;
  tree.kind = LearnerKind::Tree;
  tree.max_depth = 3;
  const std::vector<std::size_t> grid{40, 160, 640};
  const std::size_t trials = 40;
  const auto d = gen_discrete(spec, 40000, 77).data;
  const auto exp = run_curve_experiment(tree, d, grid, trials, {CostKind::ZeroOne}, 8);
  const std::size_t m = spec.alphabet();
  Matrix cells = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t x = 0; x < m; ++x) cells(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)) = 1.0;
  for (std::size_t n : grid) {
    double oracle[2] = {0.0, 0.0};
    const int draws = 400;
    for (int r = 0; r < draws; ++r) {
      auto ls = tree;
      ls.seed = static_cast<std::uint64_t>(r);
      const auto model = train(ls, gen_discrete(spec, n, 10000 + static_cast<std::uint64_t>(r) * 7 + n).data);
      const auto yhat = predict_scores(model, cells);
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t x = 0; x < m; ++x) {
          const double p = spec.outcome_table[a][x];
          oracle[a] += spec.feature_given_group[a][x] * (yhat[x] >= 0.5 ? 1.0 - p : p) / draws;
        }
    }
    for (const auto& s : exp.summaries()) {
      if (s.n != n) continue;
      CHECK(std::fabs(s.mean - oracle[s.group]) <= 4.0 * s.stderr_ + 0.005);
    }
  }
}
