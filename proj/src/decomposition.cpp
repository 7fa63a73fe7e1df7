#include "fairaudit/decomposition.hpp"

#include <cmath>

#include "fairaudit/costs.hpp"
#include "fairaudit/rng.hpp"

namespace fairaudit {

std::string_view to_string(DecompositionLoss loss) {
  return loss == DecompositionLoss::ZeroOne ? "zero_one" : "squared";
}

std::string_view to_string(TrainingSourceKind kind) {
  switch (kind) {
    case TrainingSourceKind::Bootstrap: return "bootstrap";
    case TrainingSourceKind::Subsample: return "subsample";
    case TrainingSourceKind::FreshDraws: return "fresh_draws";
  }
  return "?";
}

TrainingSource TrainingSource::bootstrap(const Dataset& d) {
  return {TrainingSourceKind::Bootstrap, &d, {}};
}

TrainingSource TrainingSource::subsample(const Dataset& d) {
  return {TrainingSourceKind::Subsample, &d, {}};
}

TrainingSource TrainingSource::fresh(Sampler sampler) {
  return {TrainingSourceKind::FreshDraws, nullptr, std::move(sampler)};
}

EnsemblePredictions EnsemblePredictions::from_matrix(Matrix values, const Dataset& eval) {
  if (values.rows() < 2) throw AnalysisError("an ensemble needs at least 2 models");
  if (static_cast<std::size_t>(values.cols()) != eval.size())
    throw AnalysisError("ensemble predictions not aligned with the evaluation set");
  EnsemblePredictions e;
  e.values = std::move(values);
  e.eval_fingerprint = fingerprint(eval);
  return e;
}

EnsemblePredictions ensemble_train(const LearnerSpec& spec, const TrainingSource& source,
                                   std::size_t models, std::size_t n_train, const Dataset& eval,
                                   std::uint64_t seed, double threshold, Execution exec) {
  if (models < 2) throw ConfigError("ensemble size T must be at least 2");
  if (n_train < 1) throw ConfigError("training size must be at least 1");
  if (source.kind == TrainingSourceKind::FreshDraws) {
    if (!source.sampler) throw ConfigError("fresh-draw source has no sampler");
  } else {
    if (source.data == nullptr) throw ConfigError("resampling source has no dataset");
    if (source.data->task() != eval.task())
      throw AnalysisError("training and evaluation tasks differ");
    if (source.kind == TrainingSourceKind::Subsample && n_train > source.data->size())
      throw ConfigError("training size " + std::to_string(n_train) + " exceeds source size " +
                        std::to_string(source.data->size()) + " without replacement");
  }
  const bool classify = eval.task() == Task::BinaryClassification;
  Matrix values(static_cast<Eigen::Index>(models), static_cast<Eigen::Index>(eval.size()));
  for_each_index(models, exec, [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(seed, "ensemble", t);
    Dataset train_set;
    switch (source.kind) {
      case TrainingSourceKind::Bootstrap:
        train_set = bootstrap_resample(*source.data, n_train, derive_seed(trial_seed, 0));
        break;
      case TrainingSourceKind::Subsample:
        train_set = subsample(*source.data, n_train, derive_seed(trial_seed, 0));
        break;
      case TrainingSourceKind::FreshDraws:
        train_set = source.sampler(n_train, derive_seed(trial_seed, 0));
        break;
    }
    LearnerSpec member = spec;
    member.seed = derive_seed(trial_seed, 1);
    const auto model = train(member, train_set);
    auto scores = predict_scores(model, eval, Execution::Serial);
    if (classify) scores = apply_threshold(scores, threshold);
    for (std::size_t i = 0; i < scores.size(); ++i)
      values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = scores[i];
  });
  EnsemblePredictions e = EnsemblePredictions::from_matrix(std::move(values), eval);
  e.provenance = {spec, n_train, source.kind, seed};
  return e;
}

namespace {

void check_point(const EnsemblePredictions& e, std::size_t i) {
  if (i >= e.points()) throw AnalysisError("evaluation point index out of range");
}

void check_eval(const EnsemblePredictions& e, const Dataset& eval) {
  if (e.points() != eval.size() || e.eval_fingerprint != fingerprint(eval))
    throw AnalysisError("ensemble was not evaluated on this dataset");
}

double share_of_ones(const EnsemblePredictions& e, std::size_t i) {
  const auto col = e.values.col(static_cast<Eigen::Index>(i));
  std::size_t ones = 0;
  for (Eigen::Index t = 0; t < col.size(); ++t) {
    if (col(t) == 1.0) ++ones;
    else if (col(t) != 0.0) throw AnalysisError("zero-one decomposition needs hard 0/1 predictions");
  }
  return static_cast<double>(ones) / static_cast<double>(e.models());
}

// Shared by the unconditioned and class-conditional zero-one cases.
PointDecomposition zero_one_terms(const EnsemblePredictions& e, std::size_t i, double y_star) {
  PointDecomposition pd;
  const double q = share_of_ones(e, i);
  pd.y_star = y_star;
  pd.y_main = main_prediction(e, i, DecompositionLoss::ZeroOne);
  pd.bias = pd.y_main != y_star ? 1.0 : 0.0;
  pd.variance = pd.y_main == 1.0 ? 1.0 - q : q;
  pd.c_v = pd.bias == 0.0 ? 1.0 : -1.0;
  const double agree = y_star == 1.0 ? q : 1.0 - q;
  pd.c_n = 2.0 * agree - 1.0;
  return pd;
}

}  // namespace

double main_prediction(const EnsemblePredictions& e, std::size_t i, DecompositionLoss loss) {
  check_point(e, i);
  const auto col = e.values.col(static_cast<Eigen::Index>(i));
  if (loss == DecompositionLoss::Squared) {
    long double s = 0.0L;
    for (Eigen::Index t = 0; t < col.size(); ++t) s += col(t);
    return static_cast<double>(s / static_cast<long double>(col.size()));
  }
  const double q = share_of_ones(e, i);
  return q > 0.5 ? 1.0 : 0.0;
}

PointDecomposition point_decomposition(const EnsemblePredictions& e, const Dataset& eval,
                                       std::size_t i, const ConditionalOutcomeModel& om,
                                       DecompositionLoss loss) {
  check_point(e, i);
  check_eval(e, eval);
  if (!om.known())
    throw AnalysisError("pointwise decomposition needs a known outcome model; "
                        "use group_decomposition in unknown mode instead");
  if (loss == DecompositionLoss::ZeroOne) {
    const double p = om.p1(eval, i);
    PointDecomposition pd = zero_one_terms(e, i, p > 0.5 ? 1.0 : 0.0);
    pd.noise = std::min(p, 1.0 - p);
    const double q = share_of_ones(e, i);
    pd.expected_loss = p * (1.0 - q) + (1.0 - p) * q;
    return pd;
  }
  const double mu = om.conditional_mean(eval, i);
  const double var = om.conditional_variance(eval, i);
  const auto col = e.values.col(static_cast<Eigen::Index>(i));
  PointDecomposition pd;
  pd.y_star = mu;
  pd.y_main = main_prediction(e, i, loss);
  pd.noise = var;
  pd.bias = (mu - pd.y_main) * (mu - pd.y_main);
  long double v = 0.0L;
  long double direct = 0.0L;
  for (Eigen::Index t = 0; t < col.size(); ++t) {
    const long double dv = static_cast<long double>(pd.y_main) - col(t);
    const long double dm = static_cast<long double>(mu) - col(t);
    v += dv * dv;
    direct += dm * dm;
  }
  const auto T = static_cast<long double>(col.size());
  pd.variance = static_cast<double>(v / T);
  pd.expected_loss = static_cast<double>(var + direct / T);
  return pd;
}

PointDecomposition class_conditional_point(const EnsemblePredictions& e, const Dataset& eval,
                                           std::size_t i, const ConditionalOutcomeModel& om,
                                           int y) {
  check_point(e, i);
  check_eval(e, eval);
  if (y != 0 && y != 1) throw ConfigError("conditioning class must be 0 or 1");
  const double p = om.p1(eval, i);
  PointDecomposition pd = zero_one_terms(e, i, p > 0.5 ? 1.0 : 0.0);
  pd.noise = pd.y_star != static_cast<double>(y) ? 1.0 : 0.0;
  const double q = share_of_ones(e, i);
  pd.expected_loss = y == 1 ? 1.0 - q : q;
  return pd;
}

const GroupTerms& GroupDecomposition::at(int group) const {
  for (const auto& g : groups)
    if (g.group == group) return g;
  throw AnalysisError("decomposition has no group " + std::to_string(group));
}

namespace {

struct Accumulator {
  long double mass = 0.0L;
  long double gamma = 0.0L;
  long double noise = 0.0L;
  long double bias = 0.0L;
  long double variance = 0.0L;
  long double unsigned_variance = 0.0L;
  std::size_t count = 0;

  void add(double w, const PointDecomposition& pd) {
    mass += w;
    gamma += w * static_cast<long double>(pd.expected_loss);
    noise += w * static_cast<long double>(pd.c_n) * pd.noise;
    bias += w * static_cast<long double>(pd.bias);
    variance += w * static_cast<long double>(pd.c_v) * pd.variance;
    unsigned_variance += w * static_cast<long double>(pd.variance);
    ++count;
  }
};

// Observed-label pointwise terms used when no outcome model is available.
PointDecomposition observed_terms(const EnsemblePredictions& e, const Dataset& eval, std::size_t i,
                                  DecompositionLoss loss) {
  PointDecomposition pd;
  const double y = eval.outcome()[i];
  pd.y_main = main_prediction(e, i, loss);
  const auto col = e.values.col(static_cast<Eigen::Index>(i));
  const auto T = static_cast<long double>(col.size());
  long double v = 0.0L;
  long double l = 0.0L;
  for (Eigen::Index t = 0; t < col.size(); ++t) {
    if (loss == DecompositionLoss::ZeroOne) {
      v += col(t) != pd.y_main ? 1.0L : 0.0L;
      l += col(t) != y ? 1.0L : 0.0L;
    } else {
      const long double dv = static_cast<long double>(pd.y_main) - col(t);
      const long double dl = static_cast<long double>(y) - col(t);
      v += dv * dv;
      l += dl * dl;
    }
  }
  if (loss == DecompositionLoss::ZeroOne) share_of_ones(e, i);  // validates labels
  pd.variance = static_cast<double>(v / T);
  pd.expected_loss = static_cast<double>(l / T);
  return pd;
}

}  // namespace

GroupDecomposition group_decomposition(const EnsemblePredictions& e, const Dataset& eval,
                                       const ConditionalOutcomeModel& om, DecompositionLoss loss,
                                       std::optional<int> condition) {
  check_eval(e, eval);
  if (condition && loss != DecompositionLoss::ZeroOne)
    throw ConfigError("class-conditional decomposition is defined for zero-one loss");
  if (condition && *condition != 0 && *condition != 1)
    throw ConfigError("conditioning class must be 0 or 1");
  const bool classify = eval.task() == Task::BinaryClassification;
  if (classify != (loss == DecompositionLoss::ZeroOne))
    throw AnalysisError("zero-one loss needs a binary task and squared loss a regression task");
  GroupDecomposition out;
  out.loss = loss;
  out.condition = condition;
  out.mode = om.mode;
  std::vector<Accumulator> acc(eval.group_count());
  for (std::size_t i = 0; i < eval.size(); ++i) {
    auto& a = acc[static_cast<std::size_t>(eval.group()[i])];
    if (om.known()) {
      if (condition) {
        const double p = om.p1(eval, i);
        const double w = *condition == 1 ? p : 1.0 - p;
        if (w > 0.0) a.add(w, class_conditional_point(e, eval, i, om, *condition));
      } else {
        a.add(1.0, point_decomposition(e, eval, i, om, loss));
      }
    } else {
      if (condition && eval.outcome()[i] != static_cast<double>(*condition)) continue;
      a.add(1.0, observed_terms(e, eval, i, loss));
    }
  }
  for (std::size_t g = 0; g < acc.size(); ++g) {
    const auto& a = acc[g];
    if (a.mass <= 0.0L) {
      std::string what = "decomposition: group '" + eval.group_labels()[g] + "' has no ";
      what += condition ? "points with Y=" + std::to_string(*condition) : std::string("points");
      throw AnalysisError(what);
    }
    GroupTerms t;
    t.group = static_cast<int>(g);
    t.label = eval.group_labels()[g];
    t.count = a.count;
    t.mass = static_cast<double>(a.mass);
    t.gamma = static_cast<double>(a.gamma / a.mass);
    t.unsigned_variance = static_cast<double>(a.unsigned_variance / a.mass);
    if (om.known()) {
      t.noise = static_cast<double>(a.noise / a.mass);
      t.bias = static_cast<double>(a.bias / a.mass);
      t.variance = static_cast<double>(a.variance / a.mass);
    } else {
      t.bias_plus_noise = t.gamma - t.unsigned_variance;
    }
    out.groups.push_back(std::move(t));
  }
  if (!om.known())
    out.warnings.push_back("outcome model unknown: bias and noise reported only as a combined "
                           "residual; see noise bounds and the bias-variance comparison test");
  return out;
}

GapTerms gap_terms(const GroupDecomposition& g, GroupPair pair) {
  const auto& a = g.at(pair.first);
  const auto& b = g.at(pair.second);
  auto diff = [](const std::optional<double>& x, const std::optional<double>& y) -> std::optional<double> {
    if (x && y) return *x - *y;
    return std::nullopt;
  };
  GapTerms t;
  t.gamma = a.gamma - b.gamma;
  t.noise = diff(a.noise, b.noise);
  t.bias = diff(a.bias, b.bias);
  t.variance = diff(a.variance, b.variance);
  t.bias_plus_noise = diff(a.bias_plus_noise, b.bias_plus_noise);
  t.unsigned_variance = a.unsigned_variance - b.unsigned_variance;
  return t;
}

TestResult compare_models_bias_variance(const EnsemblePredictions& e1,
                                        const EnsemblePredictions& e2, const Dataset& eval,
                                        DecompositionLoss loss, double level, GroupPair pair) {
  check_eval(e1, eval);
  check_eval(e2, eval);
  if (pair.first == pair.second) throw AnalysisError("comparison needs two distinct groups");
  std::vector<double> u0;
  std::vector<double> u1;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const int g = eval.group()[i];
    if (g != pair.first && g != pair.second) continue;
    const double u = observed_terms(e1, eval, i, loss).expected_loss -
                     observed_terms(e2, eval, i, loss).expected_loss;
    (g == pair.first ? u0 : u1).push_back(u);
  }
  auto moments = [](const std::vector<double>& x) {
    long double s = 0.0L;
    for (double v : x) s += v;
    const long double mean = s / static_cast<long double>(x.size());
    long double ss = 0.0L;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double var = x.size() > 1 ? static_cast<double>(ss / static_cast<long double>(x.size() - 1)) : 0.0;
    return std::pair<double, double>(static_cast<double>(mean), var);
  };
  if (u0.empty() || u1.empty()) throw AnalysisError("comparison: a group has no evaluation points");
  const auto [m0, v0] = moments(u0);
  const auto [m1, v1] = moments(u1);
  auto z = two_sample_z_test(m0, v0, u0.size(), m1, v1, u1.size(), level);
  TestResult r = make_test_result("compare_bias_variance:" + std::string(to_string(loss)),
                                  m0 - m1, z.p_value, level);
  r.auxiliary = z.auxiliary;
  r.auxiliary["zscore"] = z.statistic;
  r.warnings = z.warnings;
  return r;
}

double homoskedastic_noise_gap(const ConditionalOutcomeModel& om, const Dataset& eval,
                               GroupPair pair) {
  if (om.task != Task::Regression)
    throw AnalysisError("noise-gap result applies to squared loss only: under zero-one loss the "
                        "noise term is scaled by a model-dependent factor c_n");
  if (!om.known()) throw AnalysisError("noise gap needs a known outcome model");
  long double s[2] = {0.0L, 0.0L};
  std::size_t m[2] = {0, 0};
  double first[2] = {0.0, 0.0};
  bool constant[2] = {true, true};
  for (std::size_t i = 0; i < eval.size(); ++i) {
    const int g = eval.group()[i];
    const int slot = g == pair.first ? 0 : (g == pair.second ? 1 : -1);
    if (slot < 0) continue;
    const double v = om.conditional_variance(eval, i);
    if (m[slot] == 0) first[slot] = v;
    constant[slot] = constant[slot] && v == first[slot];
    s[slot] += v;
    ++m[slot];
  }
  if (m[0] == 0 || m[1] == 0) throw AnalysisError("noise gap: a group has no evaluation points");
  // A constant variance is its own mean; skipping the division keeps it exact.
  double mean[2];
  for (int k = 0; k < 2; ++k)
    mean[k] = constant[k] ? first[k] : static_cast<double>(s[k] / static_cast<long double>(m[k]));
  return mean[0] - mean[1];
}

std::vector<double> bayes_predictions(const ConditionalOutcomeModel& om, const Dataset& eval) {
  std::vector<double> out(eval.size());
  for (std::size_t i = 0; i < eval.size(); ++i)
    out[i] = om.task == Task::BinaryClassification ? (om.p1(eval, i) > 0.5 ? 1.0 : 0.0)
                                                    : om.conditional_mean(eval, i);
  return out;
}

}  // namespace fairaudit
