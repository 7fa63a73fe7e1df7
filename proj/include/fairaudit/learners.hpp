#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/parallel.hpp"

namespace fairaudit {

enum class LearnerKind { Logistic, Ridge, KNN, Tree, BaggedTrees };
enum class Penalty { L1, L2 };

std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view text);
std::string_view to_string(Penalty penalty);
Penalty parse_penalty(std::string_view text);

struct LearnerSpec {
  LearnerKind kind = LearnerKind::Logistic;
  double lambda = 0.0;          // Logistic / Ridge regularization weight
  Penalty penalty = Penalty::L2;
  std::size_t epochs = 500;     // Logistic full-batch proximal-gradient steps
  double step_size = 0.1;       // decays as step_size / sqrt(t)
  std::size_t k = 5;            // KNN
  std::size_t max_depth = 4;    // Tree, BaggedTrees
  std::size_t min_leaf = 1;
  std::size_t n_trees = 50;
  double feature_fraction = 0.0;  // per split; 0 selects floor(sqrt(k)) features
  bool bootstrap = true;
  bool include_group = false;   // append group indicators to the inputs
  std::uint64_t seed = 0;

  void validate() const;
};

struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // 1 for constant columns

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

struct LinearModel {
  Standardizer standardizer;  // identity for ridge
  Vector weights;
  double intercept = 0.0;
};

struct KnnModel {
  Standardizer standardizer;
  Matrix reference;  // standardized training rows
  std::vector<double> outcome;
  std::size_t k = 1;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // class-1 frequency or mean outcome
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(const double* x) const;
  std::size_t depth() const;
};

struct ForestModel {
  std::vector<TreeModel> trees;
};

struct TrainedModel {
  LearnerKind kind = LearnerKind::Logistic;
  Task task = Task::BinaryClassification;
  std::size_t input_dim = 0;  // columns expected by predict_scores(Matrix)
  bool include_group = false;
  std::size_t group_count = 0;
  std::variant<LinearModel, KnnModel, TreeModel, ForestModel> params;
};

TrainedModel train(const LearnerSpec& spec, const Dataset& d);

/// Scores in [0,1] for classification, real predictions for regression.
/// The matrix must already contain any group columns the model expects.
std::vector<double> predict_scores(const TrainedModel& m, const Matrix& features,
                                   Execution exec = Execution::Parallel);
std::vector<double> predict_scores(const TrainedModel& m, const Dataset& d,
                                   Execution exec = Execution::Parallel);

/// Model input matrix for d: its features, plus G-1 group indicators when requested.
Matrix model_inputs(const Dataset& d, bool include_group);

/// Fits one tree with per-row weights; rows with zero weight are ignored.
/// feature_count == 0 considers every feature at each split.
TreeModel fit_tree(const Matrix& x, const std::vector<double>& y, const std::vector<double>& w,
                   std::size_t max_depth, std::size_t min_leaf, std::size_t feature_count,
                   std::uint64_t seed);

}  // namespace fairaudit
