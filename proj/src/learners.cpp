#include "fairaudit/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairaudit/kernels.hpp"
#include "fairaudit/rng.hpp"

namespace fairaudit {

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::Logistic: return "logistic";
    case LearnerKind::Ridge: return "ridge";
    case LearnerKind::KNN: return "knn";
    case LearnerKind::Tree: return "tree";
    case LearnerKind::BaggedTrees: return "bagged_trees";
  }
  return "?";
}

LearnerKind parse_learner_kind(std::string_view text) {
  for (auto k : {LearnerKind::Logistic, LearnerKind::Ridge, LearnerKind::KNN, LearnerKind::Tree,
                 LearnerKind::BaggedTrees})
    if (to_string(k) == text) return k;
  if (text == "forest" || text == "bagged") return LearnerKind::BaggedTrees;
  throw ConfigError("unknown learner '" + std::string(text) + "'");
}

std::string_view to_string(Penalty penalty) { return penalty == Penalty::L1 ? "l1" : "l2"; }

Penalty parse_penalty(std::string_view text) {
  if (text == "l1" || text == "L1") return Penalty::L1;
  if (text == "l2" || text == "L2") return Penalty::L2;
  throw ConfigError("unknown penalty '" + std::string(text) + "'");
}

void LearnerSpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be >= 0");
  if (!(step_size > 0.0)) throw ConfigError("step_size must be > 0");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
  if (n_trees < 1) throw ConfigError("n_trees must be >= 1");
  if (!(feature_fraction >= 0.0 && feature_fraction <= 1.0))
    throw ConfigError("feature_fraction must lie in [0,1]");
}

// ---------------------------------------------------------------------------

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  const auto n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean();
  s.scale = Eigen::RowVectorXd::Ones(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean(j)).square().sum() / n;
    if (var > 0.0) s.scale(j) = std::sqrt(var);
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) throw AnalysisError("standardizer: column count mismatch");
  Matrix out = x;
  out.rowwise() -= mean;
  out.array().rowwise() /= scale.array();
  return out;
}

Matrix model_inputs(const Dataset& d, bool include_group) {
  if (!include_group || d.group_count() < 2) return d.features();
  const auto extra = static_cast<Eigen::Index>(d.group_count() - 1);
  Matrix out(static_cast<Eigen::Index>(d.size()), d.features().cols() + extra);
  out.leftCols(d.features().cols()) = d.features();
  out.rightCols(extra).setZero();
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.group()[i] > 0)
      out(static_cast<Eigen::Index>(i), d.features().cols() + d.group()[i] - 1) = 1.0;
  return out;
}

// --- trees -----------------------------------------------------------------

double TreeModel::predict(const double* x) const {
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(at)];
    at = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(at)].value;
}

std::size_t TreeModel::depth() const {
  std::vector<std::size_t> level(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes[i].feature >= 0) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<std::size_t>& presorted,
              const std::vector<double>& y, const std::vector<double>& w, std::size_t max_depth, std::size_t min_leaf, std::size_t feature_count,
              std::uint64_t seed)
      : x_(x), y_(y), w_(w), max_depth_(max_depth), min_leaf_(min_leaf), rng_(seed) {
    dim_ = static_cast<std::size_t>(x.cols());
    for (std::size_t i = 0; i < y.size(); ++i)
      if (w[i] > 0.0) active_.push_back(i);
    m_ = active_.size();
    if (m_ == 0) throw AnalysisError("tree: no rows with positive weight");
    try_count_ = feature_count == 0 ? dim_ : std::min(feature_count, dim_);
    // Restrict the shared presorted order to the rows this tree sees.
    sorted_.resize(dim_ * m_);
    const std::size_t n = y.size();
    for (std::size_t f = 0; f < dim_; ++f) {
      auto* seg = sorted_.data() + f * m_;
      std::size_t at = 0;
      for (std::size_t p = 0; p < n; ++p) {
        const std::size_t r = presorted[f * n + p];
        if (w[r] > 0.0) seg[at++] = r;
      }
    }
    left_flag_.assign(y.size(), 0);
    scratch_.resize(m_);
    order_.resize(dim_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }

  TreeModel build() {
    TreeModel t;
    grow(t, 0, m_, 0);
    return t;
  }

 private:
  double value(std::size_t row, std::size_t f) const {
    return x_.data()[row * dim_ + f];
  }

  struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
  };

  std::vector<std::size_t> candidate_features(std::size_t b, std::size_t e) {
    std::vector<std::size_t> chosen;
    if (try_count_ >= dim_) {
      chosen = order_;
    } else {
      // Walk a random permutation and keep the first try_count non-constant features.
      std::vector<std::size_t> perm = order_;
      for (std::size_t i = 0; i < dim_ && chosen.size() < try_count_; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, dim_ - 1);
        std::swap(perm[i], perm[pick(rng_)]);
        const std::size_t f = perm[i];
        const auto* seg = sorted_.data() + f * m_;
        if (value(seg[b], f) < value(seg[e - 1], f)) chosen.push_back(f);
      }
      std::sort(chosen.begin(), chosen.end());
    }
    return chosen;
  }

  Split best_split(std::size_t b, std::size_t e, double total_w, double total_s) {
    Split best;
    const double parent = total_s * total_s / total_w;
    const std::size_t count = e - b;
    for (std::size_t f : candidate_features(b, e)) {
      const auto* seg = sorted_.data() + f * m_;
      double wl = 0.0;
      double sl = 0.0;
      for (std::size_t p = b; p + 1 < e; ++p) {
        const std::size_t r = seg[p];
        wl += w_[r];
        sl += w_[r] * y_[r];
        const double here = value(r, f);
        const double next = value(seg[p + 1], f);
        if (!(here < next)) continue;
        const std::size_t nl = p + 1 - b;
        if (nl < min_leaf_ || count - nl < min_leaf_) continue;
        const double wr = total_w - wl;
        const double sr = total_s - sl;
        const double gain = sl * sl / wl + sr * sr / wr - parent;
        if (gain > best.gain + 1e-12) {
          double thr = 0.5 * (here + next);
          if (!(thr < next)) thr = here;
          best = {true, f, thr, gain};
        }
      }
    }
    return best;
  }

  int grow(TreeModel& t, std::size_t b, std::size_t e, std::size_t depth) {
    const int id = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    double total_w = 0.0;
    double total_s = 0.0;
    double lo = y_[sorted_[b]];
    double hi = lo;
    for (std::size_t p = b; p < e; ++p) {
      const std::size_t r = sorted_[p];
      total_w += w_[r];
      total_s += w_[r] * y_[r];
      lo = std::min(lo, y_[r]);
      hi = std::max(hi, y_[r]);
    }
    t.nodes[static_cast<std::size_t>(id)].value = total_s / total_w;
    if (depth >= max_depth_ || e - b < 2 * min_leaf_ || lo == hi) return id;
    const Split s = best_split(b, e, total_w, total_s);
    if (!s.found) return id;

    std::size_t n_left = 0;
    for (std::size_t p = b; p < e; ++p) {
      const std::size_t r = sorted_[p];
      left_flag_[r] = value(r, s.feature) <= s.threshold ? 1 : 0;
      n_left += left_flag_[r];
    }
    for (std::size_t f = 0; f < dim_; ++f) {
      auto* seg = sorted_.data() + f * m_;
      std::size_t li = b;
      std::size_t ri = 0;
      for (std::size_t p = b; p < e; ++p) {
        if (left_flag_[seg[p]]) seg[li++] = seg[p];
        else scratch_[ri++] = seg[p];
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(ri), seg + li);
    }
    auto& node = t.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<int>(s.feature);
    node.threshold = s.threshold;
    const int left = grow(t, b, b + n_left, depth + 1);
    const int right = grow(t, b + n_left, e, depth + 1);
    t.nodes[static_cast<std::size_t>(id)].left = left;
    t.nodes[static_cast<std::size_t>(id)].right = right;
    return id;
  }

  const Matrix& x_;
  const std::vector<double>& y_;
  const std::vector<double>& w_;
  std::size_t max_depth_;
  std::size_t min_leaf_;
  Rng rng_;
  std::size_t dim_ = 0;
  std::size_t m_ = 0;
  std::size_t try_count_ = 0;
  std::vector<std::size_t> active_;
  std::vector<std::size_t> sorted_;  // dim_ segments of m_ row ids
  std::vector<unsigned char> left_flag_;
  std::vector<std::size_t> scratch_;
  std::vector<std::size_t> order_;
};

// Row ids sorted by value, one segment of n per feature.
std::vector<std::size_t> presort(const Matrix& x) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto dim = static_cast<std::size_t>(x.cols());
  std::vector<std::size_t> out(n * dim);
  for (std::size_t f = 0; f < dim; ++f) {
    auto* seg = out.data() + f * n;
    std::iota(seg, seg + n, std::size_t{0});
    std::stable_sort(seg, seg + n, [&](std::size_t a, std::size_t b) {
      return x.data()[a * dim + f] < x.data()[b * dim + f];
    });
  }
  return out;
}

std::size_t split_feature_count(const LearnerSpec& spec, std::size_t dim) {
  if (spec.feature_fraction >= 1.0) return 0;
  if (spec.feature_fraction <= 0.0)
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(dim))));
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(spec.feature_fraction * static_cast<double>(dim))));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LinearModel train_logistic(const LearnerSpec& spec, const Matrix& raw, const Dataset& d) {
  LinearModel m;
  m.standardizer = Standardizer::fit(raw);
  const Matrix z = m.standardizer.apply(raw);
  const Eigen::Map<const Vector> y(d.outcome().data(), static_cast<Eigen::Index>(d.size()));
  const double n = static_cast<double>(d.size());
  m.weights = Vector::Zero(z.cols());
  for (std::size_t t = 1; t <= spec.epochs; ++t) {
    const double eta = spec.step_size / std::sqrt(static_cast<double>(t));
    Vector residual = (z * m.weights).array() + m.intercept;
    residual = residual.unaryExpr([](double v) { return sigmoid(v); }) - y;
    const Vector grad = z.transpose() * residual / n;
    const double grad_b = residual.sum() / n;
    if (spec.penalty == Penalty::L2) {
      m.weights -= eta * (grad + spec.lambda * m.weights);
    } else {
      m.weights -= eta * grad;
      const double cut = eta * spec.lambda;
      m.weights = m.weights.unaryExpr([cut](double v) {
        return v > cut ? v - cut : (v < -cut ? v + cut : 0.0);
      });
    }
    m.intercept -= eta * grad_b;
  }
  return m;
}

LinearModel train_ridge(const LearnerSpec& spec, const Matrix& x, const Dataset& d) {
  LinearModel m;
  m.standardizer.mean = Eigen::RowVectorXd::Zero(x.cols());
  m.standardizer.scale = Eigen::RowVectorXd::Ones(x.cols());
  const Eigen::Map<const Vector> y(d.outcome().data(), static_cast<Eigen::Index>(d.size()));
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Vector yc = y.array() - y_mean;
  if (spec.lambda > 0.0) {
    Eigen::MatrixXd a = xc.transpose() * xc;
    a.diagonal().array() += spec.lambda;
    m.weights = a.ldlt().solve(xc.transpose() * yc);
  } else {
    m.weights = xc.completeOrthogonalDecomposition().solve(yc);
  }
  m.intercept = y_mean - x_mean.dot(m.weights);
  return m;
}

}  // namespace

TreeModel fit_tree(const Matrix& x, const std::vector<double>& y, const std::vector<double>& w,
                   std::size_t max_depth, std::size_t min_leaf, std::size_t feature_count,
                   std::uint64_t seed) {
  if (static_cast<std::size_t>(x.rows()) != y.size() || y.size() != w.size())
    throw AnalysisError("tree: inputs not aligned");
  return TreeBuilder(x, presort(x), y, w, max_depth, min_leaf, feature_count, seed).build();
}

TrainedModel train(const LearnerSpec& spec, const Dataset& d) {
  spec.validate();
  if (d.size() == 0) throw AnalysisError("cannot train on an empty dataset");
  TrainedModel m;
  m.kind = spec.kind;
  m.task = d.task();
  m.include_group = spec.include_group;
  m.group_count = d.group_count();
  const Matrix x = model_inputs(d, spec.include_group);
  m.input_dim = static_cast<std::size_t>(x.cols());
  switch (spec.kind) {
    case LearnerKind::Logistic:
      if (d.task() != Task::BinaryClassification)
        throw AnalysisError("logistic regression needs a binary outcome");
      m.params = train_logistic(spec, x, d);
      break;
    case LearnerKind::Ridge:
      if (d.task() != Task::Regression) throw AnalysisError("ridge regression needs a real outcome");
      m.params = train_ridge(spec, x, d);
      break;
    case LearnerKind::KNN: {
      KnnModel knn;
      knn.standardizer = Standardizer::fit(x);
      knn.reference = knn.standardizer.apply(x);
      knn.outcome = d.outcome();
      knn.k = spec.k;
      m.params = std::move(knn);
      break;
    }
    case LearnerKind::Tree: {
      const std::vector<double> w(d.size(), 1.0);
      m.params = fit_tree(x, d.outcome(), w, spec.max_depth, spec.min_leaf, 0, spec.seed);
      break;
    }
    case LearnerKind::BaggedTrees: {
      ForestModel forest;
      const std::size_t try_count = split_feature_count(spec, m.input_dim);
      const auto order = presort(x);
      for (std::size_t t = 0; t < spec.n_trees; ++t) {
        const std::uint64_t tree_seed = derive_seed(spec.seed, "tree", t);
        std::vector<double> w(d.size(), 1.0);
        if (spec.bootstrap) {
          std::fill(w.begin(), w.end(), 0.0);
          for (auto i : bootstrap_index(d.size(), d.size(), tree_seed)) w[i] += 1.0;
        }
        forest.trees.push_back(TreeBuilder(x, order, d.outcome(), w, spec.max_depth,
                                           spec.min_leaf, try_count, derive_seed(tree_seed, 1))
                                   .build());
      }
      m.params = std::move(forest);
      break;
    }
  }
  return m;
}

std::vector<double> predict_scores(const TrainedModel& m, const Matrix& x, Execution exec) {
  if (static_cast<std::size_t>(x.cols()) != m.input_dim)
    throw AnalysisError("predict: expected " + std::to_string(m.input_dim) + " columns, got " +
                        std::to_string(x.cols()));
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<double> out(n);
  const bool classify = m.task == Task::BinaryClassification;
  if (const auto* lin = std::get_if<LinearModel>(&m.params)) {
    const Vector eta = (lin->standardizer.apply(x) * lin->weights).array() + lin->intercept;
    for (std::size_t i = 0; i < n; ++i)
      out[i] = classify ? sigmoid(eta(static_cast<Eigen::Index>(i))) : eta(static_cast<Eigen::Index>(i));
  } else if (const auto* knn = std::get_if<KnnModel>(&m.params)) {
    const Matrix q = knn->standardizer.apply(x);
    const auto nb = nearest_neighbors(knn->reference, q, knn->k, exec);
    const std::size_t kk = n == 0 ? 0 : nb.size() / n;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < kk; ++j) s += knn->outcome[nb[i * kk + j]];
      out[i] = s / static_cast<double>(kk);
    }
  } else if (const auto* tree = std::get_if<TreeModel>(&m.params)) {
    for (std::size_t i = 0; i < n; ++i) out[i] = tree->predict(x.data() + i * m.input_dim);
  } else {
    const auto& forest = std::get<ForestModel>(m.params);
    for_each_index(n, exec, [&](std::size_t i) {
      double s = 0.0;
      for (const auto& t : forest.trees) s += t.predict(x.data() + i * m.input_dim);
      out[i] = s / static_cast<double>(forest.trees.size());
    });
  }
  if (classify)
    for (double s : out)
      if (!(s >= 0.0 && s <= 1.0)) throw AnalysisError("classifier produced a score outside [0,1]");
  return out;
}

std::vector<double> predict_scores(const TrainedModel& m, const Dataset& d, Execution exec) {
  if (m.include_group && d.group_count() != m.group_count)
    throw AnalysisError("predict: group labelling differs from the training data");
  return predict_scores(m, model_inputs(d, m.include_group), exec);
}

}  // namespace fairaudit
