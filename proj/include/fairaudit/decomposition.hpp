#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fairaudit/learners.hpp"
#include "fairaudit/outcome_model.hpp"
#include "fairaudit/stats_tests.hpp"

namespace fairaudit {

enum class DecompositionLoss { ZeroOne, Squared };

std::string_view to_string(DecompositionLoss loss);

enum class TrainingSourceKind { Bootstrap, Subsample, FreshDraws };

std::string_view to_string(TrainingSourceKind kind);

/// Draws a fresh training set of size n from a synthetic distribution.
using Sampler = std::function<Dataset(std::size_t n, std::uint64_t seed)>;

/// Where ensemble members get their training data: resamples of a fixed
/// dataset (with or without replacement) or fresh synthetic draws.
struct TrainingSource {
  TrainingSourceKind kind = TrainingSourceKind::Bootstrap;
  const Dataset* data = nullptr;
  Sampler sampler;

  static TrainingSource bootstrap(const Dataset& d);
  static TrainingSource subsample(const Dataset& d);
  static TrainingSource fresh(Sampler sampler);
};

struct EnsembleProvenance {
  LearnerSpec spec;
  std::size_t n_train = 0;
  TrainingSourceKind source = TrainingSourceKind::Bootstrap;
  std::uint64_t seed = 0;
};

/// T models' predictions on one evaluation set: hard labels for
/// classification, real values for regression. Row t holds model t.
struct EnsemblePredictions {
  Matrix values;
  EnsembleProvenance provenance;
  std::uint64_t eval_fingerprint = 0;

  std::size_t models() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t points() const { return static_cast<std::size_t>(values.cols()); }

  /// Wraps precomputed predictions (T >= 2) for the given evaluation set.
  static EnsemblePredictions from_matrix(Matrix values, const Dataset& eval);
};

/// Trains T models, each on its own resample or fresh draw, with seeds
/// derived from (seed, trial). Classification members are thresholded.
EnsemblePredictions ensemble_train(const LearnerSpec& spec, const TrainingSource& source,
                                   std::size_t models, std::size_t n_train, const Dataset& eval,
                                   std::uint64_t seed, double threshold = 0.5,
                                   Execution exec = Execution::Parallel);

/// Majority vote (ties toward 0) or mean over the ensemble at point i.
double main_prediction(const EnsemblePredictions& e, std::size_t i, DecompositionLoss loss);

struct PointDecomposition {
  double y_star = 0.0;
  double y_main = 0.0;
  double noise = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  double c_n = 1.0;
  double c_v = 1.0;
  double expected_loss = 0.0;  // average over models and the outcome law

  double reconstructed() const { return c_n * noise + bias + c_v * variance; }
};

PointDecomposition point_decomposition(const EnsemblePredictions& e, const Dataset& eval,
                                       std::size_t i, const ConditionalOutcomeModel& om,
                                       DecompositionLoss loss);

/// Zero-one loss with the outcome fixed at y: noise is L(y*, y) and
/// expected_loss is the models' average of 1[y != prediction].
PointDecomposition class_conditional_point(const EnsemblePredictions& e, const Dataset& eval,
                                           std::size_t i, const ConditionalOutcomeModel& om,
                                           int y);

struct GroupTerms {
  int group = 0;
  std::string label;
  std::size_t count = 0;  // evaluation points in the (conditioned) group
  double mass = 0.0;      // total weight behind the averages
  double gamma = 0.0;
  std::optional<double> noise;     // Known mode: E[c_n N]
  std::optional<double> bias;      // Known mode
  std::optional<double> variance;  // Known mode: E[c_v V]
  double unsigned_variance = 0.0;  // E[V], needs no outcome model
  std::optional<double> bias_plus_noise;  // Unknown mode: gamma - E[V]
};

struct GroupDecomposition {
  DecompositionLoss loss = DecompositionLoss::ZeroOne;
  std::optional<int> condition;  // class y for FPR (0) / FNR (1) variants
  ConditionalOutcomeModel::Mode mode = ConditionalOutcomeModel::Mode::Unknown;
  std::vector<GroupTerms> groups;
  std::vector<std::string> warnings;

  const GroupTerms& at(int group) const;
};

/// Per-group averages of the pointwise terms. Known mode uses the outcome
/// model (class-conditional terms weight point i by p(y | x_i, a_i)); Unknown
/// mode scores observed labels and reports E[V] plus a bias+noise residual.
GroupDecomposition group_decomposition(const EnsemblePredictions& e, const Dataset& eval,
                                       const ConditionalOutcomeModel& om, DecompositionLoss loss,
                                       std::optional<int> condition = std::nullopt);

struct GapTerms {
  double gamma = 0.0;
  std::optional<double> noise;
  std::optional<double> bias;
  std::optional<double> variance;
  std::optional<double> bias_plus_noise;
  double unsigned_variance = 0.0;
};

/// Differences first - second of every term; |noise + bias + variance| is the
/// decomposed discrimination level in Known mode.
GapTerms gap_terms(const GroupDecomposition& g, GroupPair pair = {});

/// Tests H0: the bias+variance gap of model 1 equals that of model 2, via
/// (gamma_0 - gamma_1)(e1) - (gamma_0 - gamma_1)(e2) on observed labels with
/// per-point paired differences.
TestResult compare_models_bias_variance(const EnsemblePredictions& e1,
                                        const EnsemblePredictions& e2, const Dataset& eval,
                                        DecompositionLoss loss, double level = 0.05,
                                        GroupPair pair = {});

/// Squared-loss noise gap N_first - N_second averaged over the evaluation points.
double homoskedastic_noise_gap(const ConditionalOutcomeModel& om, const Dataset& eval,
                               GroupPair pair = {});

/// y*(x_i, a_i) for every evaluation point.
std::vector<double> bayes_predictions(const ConditionalOutcomeModel& om, const Dataset& eval);

}  // namespace fairaudit
