#include <cmath>

#include "doctest.h"
#include "fairaudit/decomposition.hpp"
#include "fairaudit/synth.hpp"
#include "support.hpp"

using namespace fairaudit;

namespace {

// One evaluation point in group 0 plus one in group 1, both with p(Y=1|x,a) = p.
struct SinglePoint {
  Dataset eval = fixtures::binary({0, 1}, {1, 0});
  ConditionalOutcomeModel om;
  explicit SinglePoint(double p)
      : om(ConditionalOutcomeModel::known_binary([p](std::span<const double>, int) { return p; })) {}
};

EnsemblePredictions votes(const Dataset& eval, std::size_t ones, std::size_t total) {
  Matrix v = Matrix::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(eval.size()));
  for (std::size_t t = 0; t < ones; ++t) v.row(static_cast<Eigen::Index>(t)).setOnes();
  return EnsemblePredictions::from_matrix(v, eval);
}

struct DiscreteEnsemble {
  DiscreteSynthSpec spec = DiscreteSynthSpec::default_spec();
  SynthSample eval;
  EnsemblePredictions e;
  DiscreteEnsemble(LearnerKind kind, std::size_t depth, std::uint64_t seed)
      : eval(gen_discrete(spec, 500, seed)) {
    LearnerSpec ls;
    ls.kind = kind;
    ls.max_depth = depth;
    const auto s = spec;
    e = ensemble_train(ls, TrainingSource::fresh([s](std::size_t n, std::uint64_t sd) { return gen_discrete(s, n, sd).data; }),
                       50, 200, eval.data, seed + 1);
  }
};

}  // namespace

TEST_CASE("main prediction rules") {
  const auto eval = fixtures::binary({0}, {1}, 1);
  Matrix a(3, 1);
  a << 1, 1, 0;
  CHECK(main_prediction(EnsemblePredictions::from_matrix(a, eval), 0, DecompositionLoss::ZeroOne) == 1.0);
  Matrix tie(2, 1);
  tie << 0, 1;
  CHECK(main_prediction(EnsemblePredictions::from_matrix(tie, eval), 0, DecompositionLoss::ZeroOne) == 0.0);
  const auto reval = fixtures::regression({0}, {0.0});
  Matrix r(3, 1);
  r << 1, 2, 3;
  CHECK(main_prediction(EnsemblePredictions::from_matrix(r, reval), 0, DecompositionLoss::Squared) == 2.0);
  Matrix one(1, 1);
  CHECK_THROWS_AS(EnsemblePredictions::from_matrix(one, eval), AnalysisError);
}

TEST_CASE("pointwise zero-one terms, majority agrees with the Bayes label") {
  SinglePoint sp(0.9);
  const auto e = votes(sp.eval, 6, 10);
  const auto pd = point_decomposition(e, sp.eval, 0, sp.om, DecompositionLoss::ZeroOne);
  CHECK(pd.y_star == 1.0);
  CHECK(pd.noise == doctest::Approx(0.1));
  CHECK(pd.y_main == 1.0);
  CHECK(pd.bias == 0.0);
  CHECK(pd.variance == doctest::Approx(0.4));
  CHECK(pd.c_v == 1.0);
  CHECK(pd.c_n == doctest::Approx(0.2));
  // direct enumeration over models and outcomes: 0.9*0.4 + 0.1*0.6
  CHECK(pd.expected_loss == doctest::Approx(0.42));
  CHECK(std::fabs(pd.reconstructed() - 0.42) < 1e-15);
}

TEST_CASE("pointwise zero-one terms, majority disagrees") {
  SinglePoint sp(0.9);
  const auto e = votes(sp.eval, 3, 10);
  const auto pd = point_decomposition(e, sp.eval, 0, sp.om, DecompositionLoss::ZeroOne);
  CHECK(pd.y_main == 0.0);
  CHECK(pd.bias == 1.0);
  CHECK(pd.variance == doctest::Approx(0.3));
  CHECK(pd.c_v == -1.0);
  CHECK(pd.c_n == doctest::Approx(-0.4));
  CHECK(pd.expected_loss == doctest::Approx(0.9 * 0.7 + 0.1 * 0.3));
  CHECK(std::fabs(pd.reconstructed() - 0.66) < 1e-15);
}

TEST_CASE("pointwise squared terms") {
  const auto eval = fixtures::regression({0, 1}, {0.0, 0.0});
  const auto om = ConditionalOutcomeModel::known_regression(
      [](std::span<const double>, int) { return 2.5; }, [](std::span<const double>, int) { return 0.25; });
  Matrix v(3, 2);
  v << 1, 1, 2, 2, 3, 3;
  const auto e = EnsemblePredictions::from_matrix(v, eval);
  const auto pd = point_decomposition(e, eval, 0, om, DecompositionLoss::Squared);
  CHECK(pd.y_main == 2.0);
  CHECK(pd.bias == doctest::Approx(0.25));
  CHECK(pd.variance == doctest::Approx(2.0 / 3.0));
  CHECK(pd.noise == doctest::Approx(0.25));
  CHECK(pd.c_n == 1.0);
  CHECK(pd.c_v == 1.0);
  // E[(Y - yhat)^2] = Var Y + mean (EY - yhat)^2 = 0.25 + (2.25 + 0.25 + 0.25)/3
  CHECK(pd.expected_loss == doctest::Approx(7.0 / 6.0));
  CHECK(std::fabs(pd.reconstructed() - 7.0 / 6.0) < 1e-15);
}

TEST_CASE("class-conditional pointwise terms") {
  SinglePoint sp(0.9);
  const auto up = class_conditional_point(votes(sp.eval, 6, 10), sp.eval, 0, sp.om, 1);
  CHECK(up.expected_loss == doctest::Approx(0.4));
  CHECK(up.noise == 0.0);
  CHECK(std::fabs(up.reconstructed() - 0.4) < 1e-15);
  const auto down = class_conditional_point(votes(sp.eval, 3, 10), sp.eval, 0, sp.om, 0);
  CHECK(down.expected_loss == doctest::Approx(0.3));
  CHECK(down.noise == 1.0);
  CHECK(std::fabs(down.reconstructed() - 0.3) < 1e-15);
}

TEST_CASE("certain outcomes and a perfect ensemble decompose to zero") {
  SinglePoint sp(1.0);
  const auto e = votes(sp.eval, 5, 5);
  const auto g = group_decomposition(e, sp.eval, sp.om, DecompositionLoss::ZeroOne, 1);
  for (const auto& t : g.groups) {
    CHECK(t.gamma == 0.0);
    CHECK(*t.noise == 0.0);
    CHECK(*t.bias == 0.0);
    CHECK(*t.variance == 0.0);
  }
}

TEST_CASE("known-mode identity on the discrete synthetic") {
  for (auto kind : {LearnerKind::Tree, LearnerKind::KNN, LearnerKind::Logistic}) {
    DiscreteEnsemble de(kind, 2, 17);
    for (std::size_t i = 0; i < de.eval.data.size(); ++i) {
      const auto pd = point_decomposition(de.e, de.eval.data, i, de.eval.model, DecompositionLoss::ZeroOne);
      CHECK(std::fabs(pd.expected_loss - pd.reconstructed()) <= 1e-12);
      for (int y : {0, 1}) {
        const auto cc = class_conditional_point(de.e, de.eval.data, i, de.eval.model, y);
        CHECK(std::fabs(cc.expected_loss - cc.reconstructed()) <= 1e-12);
      }
    }
    for (std::optional<int> cond : {std::optional<int>{}, std::optional<int>{0}, std::optional<int>{1}}) {
      const auto g = group_decomposition(de.e, de.eval.data, de.eval.model, DecompositionLoss::ZeroOne, cond);
      for (const auto& t : g.groups) CHECK(std::fabs(t.gamma - (*t.noise + *t.bias + *t.variance)) <= 1e-12);
      const auto gap = gap_terms(g);
      CHECK(std::fabs(std::fabs(gap.gamma) - std::fabs(*gap.noise + *gap.bias + *gap.variance)) <= 1e-12);
    }
  }
}

TEST_CASE("identical members carry no variance") {
  DiscreteEnsemble de(LearnerKind::Tree, 3, 5);
  Matrix same(4, static_cast<Eigen::Index>(de.eval.data.size()));
  for (Eigen::Index t = 0; t < 4; ++t) same.row(t) = de.e.values.row(0);
  const auto e = EnsemblePredictions::from_matrix(same, de.eval.data);
  const auto g = group_decomposition(e, de.eval.data, de.eval.model, DecompositionLoss::ZeroOne);
  for (const auto& t : g.groups) {
    CHECK(*t.variance == 0.0);
    CHECK(t.unsigned_variance == 0.0);
    CHECK(std::fabs(t.gamma - (*t.noise + *t.bias)) <= 1e-12);
  }
}

TEST_CASE("Bayes-optimal members have neither bias nor variance") {
  const auto sample = gen_discrete(DiscreteSynthSpec::default_spec(), 2000, 9);
  const auto ystar = bayes_predictions(sample.model, sample.data);
  Matrix v(3, static_cast<Eigen::Index>(ystar.size()));
  for (Eigen::Index t = 0; t < 3; ++t)
    for (std::size_t i = 0; i < ystar.size(); ++i) v(t, static_cast<Eigen::Index>(i)) = ystar[i];
  const auto e = EnsemblePredictions::from_matrix(v, sample.data);
  const auto g = group_decomposition(e, sample.data, sample.model, DecompositionLoss::ZeroOne);
  for (const auto& t : g.groups) {
    CHECK(*t.bias == 0.0);
    CHECK(*t.variance == 0.0);
    CHECK(std::fabs(t.gamma - *t.noise) <= 1e-12);
  }
}

TEST_CASE("unknown mode reports the same unsigned variance") {
  DiscreteEnsemble de(LearnerKind::Tree, 4, 23);
  const auto unknown = ConditionalOutcomeModel::unknown(Task::BinaryClassification);
  const auto k = group_decomposition(de.e, de.eval.data, de.eval.model, DecompositionLoss::ZeroOne);
  const auto u = group_decomposition(de.e, de.eval.data, unknown, DecompositionLoss::ZeroOne);
  for (int a = 0; a < 2; ++a) {
    CHECK(u.at(a).unsigned_variance == doctest::Approx(k.at(a).unsigned_variance).epsilon(1e-14));
    CHECK_FALSE(u.at(a).noise.has_value());
    REQUIRE(u.at(a).bias_plus_noise.has_value());
    CHECK(*u.at(a).bias_plus_noise + u.at(a).unsigned_variance == doctest::Approx(u.at(a).gamma));
  }
  CHECK_FALSE(u.warnings.empty());
  CHECK_THROWS_AS(point_decomposition(de.e, de.eval.data, 0, unknown, DecompositionLoss::ZeroOne), AnalysisError);
}

TEST_CASE("ensemble determinism and provenance") {
  const auto spec = DiscreteSynthSpec::default_spec();
  const auto eval = gen_discrete(spec, 100, 1).data;
  const auto fixed = gen_discrete(spec, 80, 2).data;
  LearnerSpec ls;
  ls.kind = LearnerKind::Tree;
  // a sampler that ignores its seed hands every member the same data
  const auto same = ensemble_train(ls, TrainingSource::fresh([fixed](std::size_t, std::uint64_t) { return fixed; }),
                                   2, 80, eval, 3);
  CHECK(same.values.row(0) == same.values.row(1));
  const Sampler draw = [spec](std::size_t n, std::uint64_t s) { return gen_discrete(spec, n, s).data; };
  const auto a = ensemble_train(ls, TrainingSource::fresh(draw), 50, 60, eval, 4);
  const auto b = ensemble_train(ls, TrainingSource::fresh(draw), 50, 60, eval, 4);
  CHECK(a.models() == 50);
  CHECK(a.points() == 100);
  CHECK(a.values == b.values);
  CHECK(a.provenance.source == TrainingSourceKind::FreshDraws);
  const auto boot = ensemble_train(ls, TrainingSource::bootstrap(fixed), 3, 80, eval, 4);
  CHECK(boot.provenance.n_train == 80);
  CHECK_THROWS_AS(ensemble_train(ls, TrainingSource::subsample(fixed), 3, 81, eval, 4), ConfigError);
  CHECK_THROWS_AS(ensemble_train(ls, TrainingSource::bootstrap(fixed), 1, 80, eval, 4), ConfigError);
  CHECK_THROWS_AS(group_decomposition(a, fixed, ConditionalOutcomeModel::unknown(Task::BinaryClassification),
                                      DecompositionLoss::ZeroOne),
                  AnalysisError);
}

TEST_CASE("comparing a model with itself") {
  DiscreteEnsemble de(LearnerKind::Tree, 2, 31);
  const auto r = compare_models_bias_variance(de.e, de.e, de.eval.data, DecompositionLoss::ZeroOne);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == 1.0);
  CHECK_FALSE(r.reject);
}

TEST_CASE("comparison statistic tracks the exact gap difference (zero-one)") {
  // Under zero-one loss the noise term is scaled by the model-dependent c_n, so
  // the oracle is the difference of exact expected-loss gaps.
  const auto spec = DiscreteSynthSpec::default_spec();
  const Sampler draw = [spec](std::size_t n, std::uint64_t s) { return gen_discrete(spec, n, s).data; };
  LearnerSpec shallow;
  shallow.kind = LearnerKind::Tree;
  shallow.max_depth = 1;
  LearnerSpec knn;
  knn.kind = LearnerKind::KNN;
  knn.k = 1;
  std::size_t inside = 0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    const auto sample = gen_discrete(spec, 4000, 100 + static_cast<std::uint64_t>(r));
    const auto e1 = ensemble_train(shallow, TrainingSource::fresh(draw), 10, 60, sample.data, 7);
    const auto e2 = ensemble_train(knn, TrainingSource::fresh(draw), 10, 60, sample.data, 8);
    const auto k1 = gap_terms(group_decomposition(e1, sample.data, sample.model, DecompositionLoss::ZeroOne));
    const auto k2 = gap_terms(group_decomposition(e2, sample.data, sample.model, DecompositionLoss::ZeroOne));
    const double oracle = (*k1.noise + *k1.bias + *k1.variance) - (*k2.noise + *k2.bias + *k2.variance);
    const auto t = compare_models_bias_variance(e1, e2, sample.data, DecompositionLoss::ZeroOne);
    if (std::fabs(t.statistic - oracle) <= 3.0 * t.auxiliary.at("standard_error")) ++inside;
  }
  CHECK(inside >= reps - 1);
}

TEST_CASE("comparison statistic tracks the bias+variance gap difference (squared)") {
  RegressionSynthSpec spec;
  spec.sigma_eps = 0.3;
  const Sampler draw = [spec](std::size_t n, std::uint64_t s) { return gen_regression(spec, n, s).data; };
  LearnerSpec ridge;
  ridge.kind = LearnerKind::Ridge;
  LearnerSpec tree;
  tree.kind = LearnerKind::Tree;
  tree.max_depth = 3;
  std::size_t inside = 0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    const auto sample = gen_regression(spec, 3000, 300 + static_cast<std::uint64_t>(r));
    const auto e1 = ensemble_train(ridge, TrainingSource::fresh(draw), 10, 100, sample.data, 7);
    const auto e2 = ensemble_train(tree, TrainingSource::fresh(draw), 10, 100, sample.data, 8);
    const auto k1 = gap_terms(group_decomposition(e1, sample.data, sample.model, DecompositionLoss::Squared));
    const auto k2 = gap_terms(group_decomposition(e2, sample.data, sample.model, DecompositionLoss::Squared));
    CHECK(*k1.noise == *k2.noise);
    const double oracle = (*k1.bias + *k1.variance) - (*k2.bias + *k2.variance);
    const auto t = compare_models_bias_variance(e1, e2, sample.data, DecompositionLoss::Squared);
    if (std::fabs(t.statistic - oracle) <= 3.0 * t.auxiliary.at("standard_error")) ++inside;
  }
  CHECK(inside >= reps - 1);
}

TEST_CASE("shared label noise leaves the squared-loss comparison unchanged on average") {
  RegressionSynthSpec spec;
  spec.sigma_eps = 0.5;
  const Sampler draw = [spec](std::size_t n, std::uint64_t s) { return gen_regression(spec, n, s).data; };
  LearnerSpec ridge;
  ridge.kind = LearnerKind::Ridge;
  LearnerSpec tree;
  tree.kind = LearnerKind::Tree;
  tree.max_depth = 3;
  double clean = 0.0;
  double noisy = 0.0;
  double sq = 0.0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    const auto sample = gen_regression(spec, 600, 500 + static_cast<std::uint64_t>(r));
    const auto& d = sample.data;
    std::mt19937_64 rng(900 + static_cast<std::uint64_t>(r));
    std::normal_distribution<double> eta(0.0, 1.0);
    std::vector<double> y = d.outcome();
    for (auto& v : y) v += eta(rng);
    const Dataset dn(d.features(), d.group(), y, d.task(), d.column_names(), d.group_labels());
    const auto e1 = ensemble_train(ridge, TrainingSource::fresh(draw), 5, 100, d, 1);
    const auto e2 = ensemble_train(tree, TrainingSource::fresh(draw), 5, 100, d, 2);
    const auto n1 = EnsemblePredictions::from_matrix(e1.values, dn);
    const auto n2 = EnsemblePredictions::from_matrix(e2.values, dn);
    const double a = compare_models_bias_variance(e1, e2, d, DecompositionLoss::Squared).statistic;
    const double b = compare_models_bias_variance(n1, n2, dn, DecompositionLoss::Squared).statistic;
    clean += a;
    noisy += b;
    sq += (b - a) * (b - a);
  }
  const double mean_diff = (noisy - clean) / reps;
  const double se = std::sqrt(sq / reps) / std::sqrt(static_cast<double>(reps));
  CHECK(std::fabs(mean_diff) <= 3.5 * se);
}

TEST_CASE("noise gap under squared loss") {
  RegressionSynthSpec homo;
  homo.homoskedastic = true;
  homo.sigma_eps = 0.7;
  const auto h = gen_regression(homo, 3000, 1);
  CHECK(homoskedastic_noise_gap(h.model, h.data) == 0.0);

  RegressionSynthSpec het;
  het.sigma_eps = 0.1;
  const auto s = gen_regression(het, 200000, 2);
  long double sum[2] = {0, 0};
  std::size_t cnt[2] = {0, 0};
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    const double x = s.data.features()(static_cast<Eigen::Index>(i), 0);
    const int g = s.data.group()[i];
    sum[g] += 0.01L * x * x * x * x;
    ++cnt[g];
  }
  const double oracle = static_cast<double>(sum[0] / cnt[0] - sum[1] / cnt[1]);
  const double gap = homoskedastic_noise_gap(s.model, s.data);
  CHECK(gap == doctest::Approx(oracle).epsilon(1e-10));
  // population value sigma^2 (3 - 73)
  CHECK(gap == doctest::Approx(-0.70).epsilon(0.05));
  const auto disc = gen_discrete(DiscreteSynthSpec::default_spec(), 100, 3);
  CHECK_THROWS_AS(homoskedastic_noise_gap(disc.model, disc.data), AnalysisError);
}

TEST_CASE("squared-loss identity on the regression synthetic") {
  RegressionSynthSpec spec;
  const auto eval = gen_regression(spec, 500, 4);
  LearnerSpec tree;
  tree.kind = LearnerKind::Tree;
  tree.max_depth = 4;
  const auto e = ensemble_train(tree, TrainingSource::fresh([spec](std::size_t n, std::uint64_t s) {
                                  return gen_regression(spec, n, s).data;
                                }),
                                50, 200, eval.data, 5);
  const auto g = group_decomposition(e, eval.data, eval.model, DecompositionLoss::Squared);
  for (const auto& t : g.groups)
    CHECK(std::fabs(t.gamma - (*t.noise + *t.bias + *t.variance)) <= 1e-12 * std::max(1.0, std::fabs(t.gamma)));
  CHECK_THROWS_AS(group_decomposition(e, eval.data, eval.model, DecompositionLoss::Squared, 1), ConfigError);
}
