#include "fairaudit/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "fairaudit/decomposition.hpp"
#include "fairaudit/learning_curves.hpp"
#include "fairaudit/noise_bounds.hpp"
#include "fairaudit/rng.hpp"
#include "fairaudit/stats_tests.hpp"
#include "fairaudit/subgroups.hpp"
#include "fairaudit/synth.hpp"

namespace fairaudit {

namespace {

std::string trim_copy(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_commas(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(',', start);
    if (end == std::string_view::npos) end = s.size();
    auto item = trim_copy(s.substr(start, end - start));
    if (!item.empty()) out.push_back(item);
    start = end + 1;
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("'" + key + "' expects a nonnegative integer, got '" + v + "'");
  return out;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(parse_u64(key, v));
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' expects true|false, got '" + v + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
  std::filesystem::path p(v);
  if (p.is_relative() && !base.empty()) return base / p;
  return p;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& raw, const std::filesystem::path& base) {
  const std::string v = trim_copy(raw);
  if (key == "data") data = resolve(base, v);
  else if (key == "schema") schema = resolve(base, v);
  else if (key == "out") out = resolve(base, v);
  else if (key == "seed") seed = parse_u64(key, v);
  else if (key == "format") format = parse_report_format(v);
  else if (key == "kinds" || key == "kind") {
    kinds.clear();
    for (const auto& k : split_commas(v)) kinds.push_back(parse_cost_kind(k));
  } else if (key == "learner") learner = parse_learner_kind(v);
  else if (key == "lambda") learner_spec.lambda = parse_double(key, v);
  else if (key == "penalty") learner_spec.penalty = parse_penalty(v);
  else if (key == "epochs") learner_spec.epochs = parse_size(key, v);
  else if (key == "step_size") learner_spec.step_size = parse_double(key, v);
  else if (key == "max_depth") learner_spec.max_depth = parse_size(key, v);
  else if (key == "min_leaf") learner_spec.min_leaf = parse_size(key, v);
  else if (key == "n_trees") learner_spec.n_trees = parse_size(key, v);
  else if (key == "feature_fraction") learner_spec.feature_fraction = parse_double(key, v);
  else if (key == "bootstrap") learner_spec.bootstrap = parse_bool(key, v);
  else if (key == "include_group") learner_spec.include_group = parse_bool(key, v);
  else if (key == "threshold") threshold = parse_double(key, v);
  else if (key == "level") level = parse_double(key, v);
  else if (key == "test_fraction") test_fraction = parse_double(key, v);
  else if (key == "holdout") holdout = parse_double(key, v);
  else if (key == "trials") trials = parse_size(key, v);
  else if (key == "grid") {
    grid.clear();
    for (const auto& g : split_commas(v)) grid.push_back(parse_size(key, g));
  } else if (key == "ensemble_size") ensemble_size = parse_size(key, v);
  else if (key == "n_train") n_train = parse_size(key, v);
  else if (key == "k") {
    k = parse_size(key, v);
    learner_spec.k = k;
  } else if (key == "folds") folds = parse_size(key, v);
  else if (key == "reps") reps = parse_size(key, v);
  else if (key == "topics") topics = resolve(base, v);
  else if (key == "min_mass") min_mass = parse_double(key, v);
  else if (key == "standardize") standardize = parse_bool(key, v);
  else if (key == "synth") {
    if (v != "discrete" && v != "regression" && !v.empty())
      throw ConfigError("synth must be discrete or regression, got '" + v + "'");
    synth = v;
  } else if (key == "synth_n") synth_n = parse_size(key, v);
  else if (key == "sigma_eps") sigma_eps = parse_double(key, v);
  else if (key == "homoskedastic") homoskedastic = parse_bool(key, v);
  else throw ConfigError("unknown configuration key '" + key + "'");
}

Json RunConfig::echo() const {
  Json j;
  j["command"] = command;
  j["data"] = data.string();
  j["schema"] = schema.string();
  j["seed"] = seed ? Json(*seed) : Json(nullptr);
  std::string ks;
  for (auto kd : kinds) ks += (ks.empty() ? "" : ",") + std::string(to_string(kd));
  j["kinds"] = ks;
  j["learner"] = learner ? std::string(to_string(*learner)) : std::string("default");
  j["lambda"] = learner_spec.lambda;
  j["penalty"] = std::string(to_string(learner_spec.penalty));
  j["epochs"] = learner_spec.epochs;
  j["step_size"] = learner_spec.step_size;
  j["max_depth"] = learner_spec.max_depth;
  j["min_leaf"] = learner_spec.min_leaf;
  j["n_trees"] = learner_spec.n_trees;
  j["feature_fraction"] = learner_spec.feature_fraction;
  j["bootstrap"] = learner_spec.bootstrap;
  j["include_group"] = learner_spec.include_group;
  j["threshold"] = threshold;
  j["level"] = level;
  j["test_fraction"] = test_fraction;
  j["holdout"] = holdout;
  j["trials"] = trials;
  std::string gs;
  for (auto g : grid) gs += (gs.empty() ? "" : ",") + std::to_string(g);
  j["grid"] = gs;
  j["ensemble_size"] = ensemble_size;
  j["n_train"] = n_train;
  j["k"] = k;
  j["folds"] = folds;
  j["reps"] = reps;
  j["topics"] = topics ? topics->string() : std::string();
  j["min_mass"] = min_mass;
  j["standardize"] = standardize;
  j["synth"] = synth;
  j["synth_n"] = synth_n;
  j["sigma_eps"] = sigma_eps;
  j["homoskedastic"] = homoskedastic;
  return j;
}

void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: '" + path.string() + "'");
  const std::string text = read_text_file(path);
  const auto base = path.parent_path();
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = trim_copy(std::string_view(text).substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    try {
      cfg.set(trim_copy(line.substr(0, eq)), line.substr(eq + 1), base);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

// ---------------------------------------------------------------------------
namespace {

std::string label_of(const Dataset& d, int g) { return d.group_labels()[static_cast<std::size_t>(g)]; }

Dataset load_data(const RunConfig& cfg) {
  if (cfg.data.empty()) throw ConfigError("no dataset given (--data)");
  if (cfg.schema.empty()) throw ConfigError("no schema given (--schema)");
  if (!std::filesystem::exists(cfg.schema))
    throw ConfigError("schema file not found: '" + cfg.schema.string() + "'");
  if (!std::filesystem::exists(cfg.data))
    throw DataError("data file not found: '" + cfg.data.string() + "'");
  return load_dataset(cfg.data, load_schema(cfg.schema));
}

std::vector<CostKind> resolve_kinds(const RunConfig& cfg, Task task, bool scores) {
  std::vector<CostKind> kinds = cfg.kinds;
  if (kinds.empty()) {
    if (task == Task::Regression) kinds = {CostKind::MSE};
    else kinds = {CostKind::ZeroOne, CostKind::FPR, CostKind::FNR};
    if (task == Task::BinaryClassification && scores) {
      kinds.push_back(CostKind::GeneralizedZeroOne);
      kinds.push_back(CostKind::Brier);
    }
  }
  for (auto k : kinds) {
    if (task_for(k) != task)
      throw ConfigError("cost kind '" + std::string(to_string(k)) + "' does not fit a " +
                        std::string(to_string(task)) + " task");
    if (needs_scores(k) && !scores)
      throw ConfigError("cost kind '" + std::string(to_string(k)) + "' needs scores");
  }
  return kinds;
}

LearnerSpec learner_for(const RunConfig& cfg, Task task, std::uint64_t seed) {
  LearnerSpec spec = cfg.learner_spec;
  spec.kind = cfg.learner ? *cfg.learner
                          : (task == Task::Regression ? LearnerKind::Ridge : LearnerKind::Logistic);
  spec.seed = seed;
  return spec;
}

std::uint64_t master(const RunConfig& cfg) {
  if (!cfg.seed) throw ConfigError("a master seed is required (--seed)");
  return *cfg.seed;
}

/// Held-out predictions of the configured model, or externally supplied score columns.
struct Evaluation {
  Dataset eval;
  std::vector<PredictionSet> models;  // first is the audited model
  std::vector<std::string> model_names;
  std::size_t n_train = 0;
  bool scores = false;
};

PredictionSet to_predictions(std::vector<double> scores, Task task, double threshold) {
  if (task == Task::Regression) return PredictionSet::from_values(std::move(scores));
  return PredictionSet::from_scores(std::move(scores), threshold);
}

Evaluation evaluate(const RunConfig& cfg, const Dataset& d) {
  Evaluation ev;
  if (!d.extra_columns().empty()) {
    ev.eval = d;
    ev.scores = d.task() == Task::BinaryClassification;
    for (const auto& [name, col] : d.extra_columns()) {
      if (ev.scores)
        for (double s : col)
          if (!(s >= 0.0 && s <= 1.0))
            throw DataError("score column '" + name + "' has values outside [0,1]");
      ev.models.push_back(to_predictions(col, d.task(), cfg.threshold));
      ev.model_names.push_back(name);
    }
    return ev;
  }
  const std::uint64_t seed = master(cfg);
  auto parts = split(d, cfg.test_fraction, derive_seed(seed, "split"), true);
  const LearnerSpec spec = learner_for(cfg, d.task(), derive_seed(seed, "model"));
  const auto model = train(spec, parts.train);
  ev.n_train = parts.train.size();
  ev.models.push_back(to_predictions(predict_scores(model, parts.test), d.task(), cfg.threshold));
  ev.model_names.push_back(std::string(to_string(spec.kind)));
  ev.eval = std::move(parts.test);
  ev.scores = d.task() == Task::BinaryClassification;
  return ev;
}

Record test_record(const TestResult& t) {
  Record r;
  r["test"] = t.name;
  r["statistic"] = finite(t.statistic);
  r["p_value"] = finite(t.p_value);
  r["level"] = t.level;
  r["reject"] = t.reject;
  for (const auto& [k, v] : t.auxiliary) r[k] = finite(v);
  return r;
}

// --- audit -------------------------------------------------------------------

AnalysisResult run_audit(const RunConfig& cfg, AuditReport& report) {
  const Dataset d = load_data(cfg);
  const Evaluation ev = evaluate(cfg, d);
  const auto kinds = resolve_kinds(cfg, d.task(), ev.scores);
  AnalysisResult res{"audit", {}};
  res.tables["model"].push_back({{"model", ev.model_names.front()},
                                 {"n_train", ev.n_train},
                                 {"n_eval", ev.eval.size()},
                                 {"threshold", cfg.threshold}});
  const auto& preds = ev.models.front();
  for (auto kind : kinds) {
    const auto rep = discrimination_level(preds, ev.eval, kind);
    report.warn_all(rep.warnings);
    for (const auto& g : rep.groups) {
      Record r{{"kind", std::string(to_string(kind))}, {"group", g.label}, {"evaluable", g.estimate.has_value()}};
      r["cost"] = g.estimate ? finite(g.estimate->cost) : Json(nullptr);
      r["count"] = g.estimate ? Json(g.estimate->count) : Json(0);
      r["variance"] = g.estimate ? finite(g.estimate->variance) : Json(nullptr);
      res.tables["costs"].push_back(std::move(r));
    }
    res.tables["gaps"].push_back({{"kind", std::string(to_string(kind))},
                                  {"gamma", finite(rep.gap)},
                                  {"highest", label_of(ev.eval, rep.highest)},
                                  {"lowest", label_of(ev.eval, rep.lowest)}});
  }
  if (ev.scores) {
    const auto& s = preds.scores;
    for (std::size_t g = 0; g < ev.eval.group_count(); ++g) {
      if (ev.eval.group_size(static_cast<int>(g)) == 0) continue;
      res.tables["scores"].push_back(
          {{"group", label_of(ev.eval, static_cast<int>(g))},
           {"brier", finite(brier_score(s, ev.eval, static_cast<int>(g)))},
           {"generalized_zero_one", finite(generalized_zero_one(s, ev.eval, static_cast<int>(g)))}});
    }
  }
  return res;
}

// --- test --------------------------------------------------------------------

AnalysisResult run_tests(const RunConfig& cfg, AuditReport& report) {
  const Dataset d = load_data(cfg);
  const Evaluation ev = evaluate(cfg, d);
  const auto kinds = resolve_kinds(cfg, d.task(), ev.scores);
  const std::uint64_t seed = master(cfg);
  AnalysisResult res{"test", {}};
  const auto& preds = ev.models.front();
  const int groups = static_cast<int>(ev.eval.group_count());
  for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
    const auto kind = kinds[ki];
    const std::string kname(to_string(kind));
    for (int a = 0; a < groups; ++a)
      for (int b = a + 1; b < groups; ++b) {
        try {
          auto t = gamma_z_test(preds, ev.eval, kind, cfg.level, {a, b});
          report.warn_all(t.warnings);
          Record r = test_record(t);
          r["kind"] = kname;
          r["first"] = label_of(ev.eval, a);
          r["second"] = label_of(ev.eval, b);
          res.tables["z_tests"].push_back(std::move(r));
        } catch (const AnalysisError& e) {
          report.warn(kname + " z-test (" + label_of(ev.eval, a) + " vs " + label_of(ev.eval, b) +
                      ") skipped: " + e.what());
        }
      }
    try {
      const auto ci = bootstrap_gamma_ci(preds, ev.eval, kind, cfg.reps, cfg.level,
                                         derive_seed(seed, "bootstrap", ki));
      if (ci.skipped > 0)
        report.warn(kname + " bootstrap: " + std::to_string(ci.skipped) + " resamples lacked a group and were skipped");
      res.tables["bootstrap"].push_back({{"kind", kname},
                                         {"estimate", finite(ci.estimate)},
                                         {"lower", finite(ci.lower)},
                                         {"upper", finite(ci.upper)},
                                         {"replicates", ci.replicates},
                                         {"skipped", ci.skipped},
                                         {"level", cfg.level}});
    } catch (const AnalysisError& e) {
      report.warn(kname + " bootstrap interval not reported: " + e.what());
    }
    std::vector<std::vector<double>> samples;
    std::vector<int> sample_group;
    auto all = group_loss_samples(preds, ev.eval, kind);
    for (int g = 0; g < groups; ++g)
      if (all[static_cast<std::size_t>(g)].size() >= 2) {
        samples.push_back(all[static_cast<std::size_t>(g)]);
        sample_group.push_back(g);
      }
    if (samples.size() >= 2) {
      Record r = test_record(anova_f(samples, cfg.level));
      r["kind"] = kname;
      res.tables["anova"].push_back(std::move(r));
      for (const auto& pr : pairwise_welch_holm(samples, cfg.level)) {
        Record w = test_record(pr.result);
        w["kind"] = kname;
        w["first"] = label_of(ev.eval, sample_group[static_cast<std::size_t>(pr.first)]);
        w["second"] = label_of(ev.eval, sample_group[static_cast<std::size_t>(pr.second)]);
        res.tables["pairwise"].push_back(std::move(w));
      }
    }
    if (ev.models.size() >= 2 && groups >= 2) {
      Record r = test_record(compare_discrimination_test(ev.models[0], ev.models[1], ev.eval, kind, cfg.level));
      r["kind"] = kname;
      r["model_a"] = ev.model_names[0];
      r["model_b"] = ev.model_names[1];
      res.tables["comparison"].push_back(std::move(r));
    }
  }
  report.warn("pairwise comparisons use Welch t tests with Holm adjustment");
  return res;
}

// --- decompose ---------------------------------------------------------------

void decomposition_tables(AnalysisResult& res, const GroupDecomposition& g, const std::string& name,
                          const Dataset& eval) {
  for (const auto& t : g.groups) {
    Record r{{"decomposition", name}, {"group", t.label}, {"count", t.count}, {"mass", finite(t.mass)},
             {"gamma", finite(t.gamma)}, {"unsigned_variance", finite(t.unsigned_variance)}};
    r["noise"] = t.noise ? finite(*t.noise) : Json(nullptr);
    r["bias"] = t.bias ? finite(*t.bias) : Json(nullptr);
    r["variance"] = t.variance ? finite(*t.variance) : Json(nullptr);
    r["bias_plus_noise"] = t.bias_plus_noise ? finite(*t.bias_plus_noise) : Json(nullptr);
    res.tables["groups"].push_back(std::move(r));
  }
  for (int b = 1; b < static_cast<int>(eval.group_count()); ++b) {
    const auto gap = gap_terms(g, {0, b});
    Record r{{"decomposition", name}, {"first", label_of(eval, 0)}, {"second", label_of(eval, b)},
             {"gamma_gap", finite(gap.gamma)}, {"unsigned_variance_gap", finite(gap.unsigned_variance)}};
    r["noise_gap"] = gap.noise ? finite(*gap.noise) : Json(nullptr);
    r["bias_gap"] = gap.bias ? finite(*gap.bias) : Json(nullptr);
    r["variance_gap"] = gap.variance ? finite(*gap.variance) : Json(nullptr);
    r["bias_plus_noise_gap"] = gap.bias_plus_noise ? finite(*gap.bias_plus_noise) : Json(nullptr);
    res.tables["gaps"].push_back(std::move(r));
  }
}

AnalysisResult run_decompose(const RunConfig& cfg, AuditReport& report) {
  const std::uint64_t seed = master(cfg);
  AnalysisResult res{"decompose", {}};
  Dataset eval;
  ConditionalOutcomeModel om;
  EnsemblePredictions ens;
  if (!cfg.synth.empty()) {
    Sampler sampler;
    if (cfg.synth == "discrete") {
      const auto spec = DiscreteSynthSpec::default_spec();
      sampler = [spec](std::size_t n, std::uint64_t s) { return gen_discrete(spec, n, s).data; };
      auto sample = gen_discrete(spec, cfg.synth_n, derive_seed(seed, "synth-eval"));
      eval = std::move(sample.data);
      om = std::move(sample.model);
    } else {
      RegressionSynthSpec spec;
      spec.sigma_eps = cfg.sigma_eps;
      spec.homoskedastic = cfg.homoskedastic;
      sampler = [spec](std::size_t n, std::uint64_t s) { return gen_regression(spec, n, s).data; };
      auto sample = gen_regression(spec, cfg.synth_n, derive_seed(seed, "synth-eval"));
      eval = std::move(sample.data);
      om = std::move(sample.model);
    }
    const LearnerSpec spec = learner_for(cfg, eval.task(), 0);
    ens = ensemble_train(spec, TrainingSource::fresh(sampler), cfg.ensemble_size,
                         cfg.n_train == 0 ? 200 : cfg.n_train, eval, derive_seed(seed, "ensemble"),
                         cfg.threshold);
  } else {
    const Dataset d = load_data(cfg);
    auto parts = split(d, cfg.test_fraction, derive_seed(seed, "split"), true);
    const LearnerSpec spec = learner_for(cfg, d.task(), 0);
    const std::size_t n_train = cfg.n_train == 0 ? parts.train.size() : cfg.n_train;
    ens = ensemble_train(spec, TrainingSource::bootstrap(parts.train), cfg.ensemble_size, n_train,
                         parts.test, derive_seed(seed, "ensemble"), cfg.threshold);
    eval = std::move(parts.test);
    om = ConditionalOutcomeModel::unknown(d.task());
  }
  res.tables["ensemble"].push_back({{"models", ens.models()},
                                    {"points", ens.points()},
                                    {"n_train", ens.provenance.n_train},
                                    {"source", std::string(to_string(ens.provenance.source))},
                                    {"learner", std::string(to_string(ens.provenance.spec.kind))},
                                    {"outcome_model", om.known() ? "known" : "unknown"}});
  if (eval.task() == Task::Regression) {
    auto g = group_decomposition(ens, eval, om, DecompositionLoss::Squared);
    report.warn_all(g.warnings);
    decomposition_tables(res, g, "mse", eval);
  } else {
    const std::pair<const char*, std::optional<int>> variants[] = {
        {"zero_one", std::nullopt}, {"fpr", 0}, {"fnr", 1}};
    for (const auto& [name, cond] : variants) {
      auto g = group_decomposition(ens, eval, om, DecompositionLoss::ZeroOne, cond);
      report.warn_all(g.warnings);
      decomposition_tables(res, g, name, eval);
    }
  }
  if (om.known()) {
    // Largest pointwise deviation from the decomposition identity.
    double worst = 0.0;
    const auto loss = eval.task() == Task::Regression ? DecompositionLoss::Squared : DecompositionLoss::ZeroOne;
    for (std::size_t i = 0; i < eval.size(); ++i) {
      const auto pd = point_decomposition(ens, eval, i, om, loss);
      worst = std::max(worst, std::fabs(pd.expected_loss - pd.reconstructed()));
    }
    res.tables["identity"].push_back({{"max_abs_residual", finite(worst)}, {"points", eval.size()}});
    if (cfg.synth == "regression") {
      RegressionSynthSpec spec;
      spec.sigma_eps = cfg.sigma_eps;
      spec.homoskedastic = cfg.homoskedastic;
      const auto exact = exact_bayes(spec);
      for (int a = 0; a < 2; ++a)
        res.tables["exact_noise"].push_back({{"group", label_of(eval, a)}, {"noise", finite(exact.noise[static_cast<std::size_t>(a)])}});
    } else {
      const auto exact = exact_bayes(DiscreteSynthSpec::default_spec());
      for (std::size_t a = 0; a < exact.noise.size(); ++a)
        res.tables["exact_noise"].push_back({{"group", label_of(eval, static_cast<int>(a))}, {"noise", finite(exact.noise[a])}});
    }
  }
  return res;
}

// --- curves ------------------------------------------------------------------

AnalysisResult run_curves(const RunConfig& cfg, AuditReport& report) {
  const std::uint64_t seed = master(cfg);
  if (cfg.grid.empty()) throw ConfigError("curves analysis needs a size grid (--grid)");
  Dataset d;
  if (cfg.synth == "discrete") d = gen_discrete(DiscreteSynthSpec::default_spec(), cfg.synth_n, derive_seed(seed, "synth-data")).data;
  else if (cfg.synth == "regression") {
    RegressionSynthSpec spec;
    spec.sigma_eps = cfg.sigma_eps;
    spec.homoskedastic = cfg.homoskedastic;
    d = gen_regression(spec, cfg.synth_n, derive_seed(seed, "synth-data")).data;
  } else {
    d = load_data(cfg);
  }
  auto kinds = resolve_kinds(cfg, d.task(), false);
  const LearnerSpec spec = learner_for(cfg, d.task(), 0);
  const auto exp = run_curve_experiment(spec, d, cfg.grid, cfg.trials, kinds, derive_seed(seed, "curves"),
                                        cfg.holdout, cfg.threshold);
  AnalysisResult res{"curves", {}};
  for (const auto& c : exp.cells)
    if (!c.cost)
      report.warn("curves: missing cell for group '" + label_of(d, c.group) + "', " +
                  std::string(to_string(c.kind)) + " (a test split lacked the conditioning class)");
  const auto summaries = exp.summaries();
  std::map<std::pair<int, int>, PowerLawFit> fits;  // (kind, group)
  for (auto kind : kinds)
    for (int g = 0; g < static_cast<int>(d.group_count()); ++g) {
      const auto pts = curve_points(exp, g, kind);
      std::set<double> distinct;
      for (const auto& p : pts) distinct.insert(p.n);
      if (distinct.size() < 3) {
        report.warn("curves: fewer than 3 sizes measured for group '" + label_of(d, g) + "', " +
                    std::string(to_string(kind)) + "; no power-law fit");
        continue;
      }
      auto f = fit_power_law(pts);
      f.group = g;
      f.kind = kind;
      fits[{static_cast<int>(kind), g}] = f;
      res.tables["fits"].push_back({{"kind", std::string(to_string(kind))}, {"group", label_of(d, g)},
                                    {"alpha", finite(f.alpha)}, {"beta", finite(f.beta)},
                                    {"delta", finite(f.delta)}, {"rss", finite(f.rss)},
                                    {"n_min", finite(f.n_min)}, {"n_max", finite(f.n_max)}});
    }
  for (const auto& s : summaries) {
    auto it = fits.find({static_cast<int>(s.kind), s.group});
    Record r{{"n", s.n}, {"group", label_of(d, s.group)}, {"kind", std::string(to_string(s.kind))},
             {"mean", finite(s.mean)}, {"stderr", finite(s.stderr_)}, {"trials", s.trials}};
    r["fitted_value"] = it != fits.end() ? finite(it->second(static_cast<double>(s.n))) : Json(nullptr);
    res.tables["summary"].push_back(std::move(r));
  }
  for (auto kind : kinds)
    for (int b = 1; b < static_cast<int>(d.group_count()); ++b) {
      auto f0 = fits.find({static_cast<int>(kind), 0});
      auto f1 = fits.find({static_cast<int>(kind), b});
      if (f0 == fits.end() || f1 == fits.end()) continue;
      const std::string kname(to_string(kind));
      const double n_max = std::max(f0->second.n_max, f1->second.n_max);
      std::vector<double> sizes;
      for (auto n : cfg.grid) sizes.push_back(static_cast<double>(n));
      sizes.push_back(10.0 * n_max);
      sizes.push_back(100.0 * n_max);
      sizes.push_back(std::numeric_limits<double>::infinity());
      for (double n : sizes) {
        const auto e = extrapolate_gamma(f0->second, f1->second, n);
        if (e.beyond_range)
          report.warn("curves: " + kname + " extrapolation beyond 10x the largest fitted size is unreliable");
        Record r{{"kind", kname}, {"first", label_of(d, 0)}, {"second", label_of(d, b)},
                 {"gamma", finite(e.gamma)}, {"beyond_range", e.beyond_range}};
        r["n"] = std::isinf(n) ? Json("inf") : Json(n);
        res.tables["extrapolation"].push_back(std::move(r));
      }
      const auto crit = power_law_critical_point(f0->second, f1->second);
      const auto cross = power_law_crossings(f0->second, f1->second, 1.0, 1e9);
      res.tables["crossings"].push_back({{"kind", kname}, {"first", label_of(d, 0)}, {"second", label_of(d, b)},
                                         {"critical_point", crit ? finite(*crit) : Json(nullptr)},
                                         {"degenerate", cross.degenerate}, {"count", cross.roots.size()},
                                         {"root_1", cross.roots.size() > 0 ? finite(cross.roots[0]) : Json(nullptr)},
                                         {"root_2", cross.roots.size() > 1 ? finite(cross.roots[1]) : Json(nullptr)}});
    }
  return res;
}

// --- noise -------------------------------------------------------------------

AnalysisResult run_noise(const RunConfig& cfg, AuditReport& report) {
  const std::uint64_t seed = master(cfg);
  const Dataset d = load_data(cfg);
  NoiseBoundOptions opt;
  opt.standardize = cfg.standardize;
  AnalysisResult res{"noise", {}};
  std::size_t ok = 0;
  for (int g = 0; g < static_cast<int>(d.group_count()); ++g) {
    const std::function<NoiseBoundEstimate()> methods[] = {
        [&] { return mahalanobis_upper(d, g, opt); },
        [&] { return bhattacharyya_bounds(d, g, opt); },
        [&] { return nn_bounds(d, g, cfg.k, cfg.folds, derive_seed(seed, "noise-nn", static_cast<std::uint64_t>(g)), opt); },
    };
    const char* names[] = {"mahalanobis", "bhattacharyya", "nearest_neighbor"};
    for (int m = 0; m < 3; ++m) {
      try {
        const auto e = methods[m]();
        report.warn_all(e.warnings);
        Record r{{"method", std::string(to_string(e.method))}, {"group", e.label},
                 {"upper", finite(e.upper)}, {"prior0", finite(e.prior0)}, {"prior1", finite(e.prior1)}};
        r["lower"] = e.lower ? finite(*e.lower) : Json(nullptr);
        for (const auto& [k, v] : e.auxiliary) r[k] = finite(v);
        res.tables["bounds"].push_back(std::move(r));
        ++ok;
      } catch (const AnalysisError& e) {
        report.warn(std::string(names[m]) + " bounds for group '" + label_of(d, g) + "' skipped: " + e.what());
      }
    }
  }
  if (ok == 0) throw AnalysisError("no noise bound could be computed");
  report.warn(std::string("noise bounds computed on ") + (cfg.standardize ? "z-scored" : "raw") +
              " features, covariance ridge 1e-3 * trace / k");
  return res;
}

// --- subgroups ---------------------------------------------------------------

AnalysisResult run_subgroups(const RunConfig& cfg, AuditReport& report) {
  const Dataset d = load_data(cfg);
  Evaluation ev;
  std::vector<Clustering> clusterings;
  if (cfg.topics) {
    // Membership rows align with the full dataset, so evaluate on every row.
    if (d.extra_columns().empty())
      throw ConfigError("topic memberships need model scores in the dataset (schema score=)");
    ev = evaluate(cfg, d);
    clusterings.push_back(load_memberships(*cfg.topics, d.size()));
  } else {
    ev = evaluate(cfg, d);
    clusterings = threshold_clusterings(ev.eval);
  }
  std::vector<CostKind> kinds = cfg.kinds;
  if (kinds.empty()) kinds = d.task() == Task::Regression ? std::vector<CostKind>{CostKind::MSE}
                                                          : std::vector<CostKind>{CostKind::ZeroOne, CostKind::FPR, CostKind::FNR};
  resolve_kinds(cfg, d.task(), ev.scores);
  AnalysisResult res{"subgroups", {}};
  const auto& preds = ev.models.front();
  for (const auto& cl : clusterings) {
    report.warn_all(cl.warnings);
    if (cl.degenerate) continue;
    for (auto kind : kinds) {
      const auto rep = rank_clusters(preds, ev.eval, cl, kind, cfg.min_mass);
      report.warn_all(rep.warnings);
      for (std::size_t rank = 0; rank < rep.rows.size(); ++rank) {
        const auto& row = rep.rows[rank];
        Record r{{"clustering", cl.name}, {"kind", std::string(to_string(kind))}, {"rank", rank + 1},
                 {"cluster", row.cluster}, {"descriptor", row.descriptor}, {"gap", finite(row.gap)},
                 {"variance", finite(row.variance)}, {"enrichment", finite(row.enrichment)}};
        for (std::size_t g = 0; g < row.cells.size(); ++g) {
          const auto& lab = ev.eval.group_labels()[g];
          const auto& cell = row.cells[g];
          r["cost:" + lab] = cell ? finite(cell->cost) : Json(nullptr);
          r["mass:" + lab] = cell ? finite(cell->mass) : Json(0.0);
          r["reliable:" + lab] = cell ? cell->reliable : false;
        }
        res.tables["clusters"].push_back(std::move(r));
      }
    }
  }
  return res;
}

// --- synth -------------------------------------------------------------------

AnalysisResult run_synth(const RunConfig& cfg, AuditReport&) {
  const std::uint64_t seed = master(cfg);
  if (cfg.synth.empty()) throw ConfigError("synth needs --synth discrete|regression");
  AnalysisResult res{"synth", {}};
  Dataset d;
  if (cfg.synth == "discrete") {
    const auto spec = DiscreteSynthSpec::default_spec();
    d = gen_discrete(spec, cfg.synth_n, derive_seed(seed, "synth-data")).data;
    const auto exact = exact_bayes(spec);
    for (std::size_t a = 0; a < spec.groups(); ++a) {
      res.tables["exact_noise"].push_back({{"group", label_of(d, static_cast<int>(a))}, {"noise", finite(exact.noise[a])}});
      for (std::size_t x = 0; x < spec.alphabet(); ++x)
        res.tables["table"].push_back({{"group", label_of(d, static_cast<int>(a))}, {"x", x},
                                       {"p_x_given_group", finite(spec.feature_given_group[a][x])},
                                       {"p_y1", finite(spec.outcome_table[a][x])},
                                       {"y_star", exact.bayes_label[a][x]}});
    }
  } else {
    RegressionSynthSpec spec;
    spec.sigma_eps = cfg.sigma_eps;
    spec.homoskedastic = cfg.homoskedastic;
    d = gen_regression(spec, cfg.synth_n, derive_seed(seed, "synth-data")).data;
    const auto exact = exact_bayes(spec);
    for (int a = 0; a < 2; ++a)
      res.tables["exact_noise"].push_back({{"group", label_of(d, a)}, {"noise", finite(exact.noise[static_cast<std::size_t>(a)])},
                                           {"fourth_moment", finite(gaussian_fourth_moment(spec.mu[static_cast<std::size_t>(a)], spec.sigma[static_cast<std::size_t>(a)]))}});
  }
  res.tables["dataset"].push_back({{"rows", d.size()}, {"features", d.feature_count()},
                                   {"fingerprint", std::to_string(fingerprint(d))}});
  if (cfg.out) {
    std::filesystem::create_directories(*cfg.out);
    write_dataset(d, *cfg.out / "synth.csv", *cfg.out / "synth.schema");
  }
  return res;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  return 4;
}

}  // namespace

AuditReport run_analysis(const RunConfig& cfg) {
  AuditReport report;
  report.version = std::string(kVersion);
  report.config = cfg.echo();
  if (cfg.command == "audit") report.results.push_back(run_audit(cfg, report));
  else if (cfg.command == "test") report.results.push_back(run_tests(cfg, report));
  else if (cfg.command == "decompose") report.results.push_back(run_decompose(cfg, report));
  else if (cfg.command == "curves") report.results.push_back(run_curves(cfg, report));
  else if (cfg.command == "noise") report.results.push_back(run_noise(cfg, report));
  else if (cfg.command == "subgroups") report.results.push_back(run_subgroups(cfg, report));
  else if (cfg.command == "synth") report.results.push_back(run_synth(cfg, report));
  else if (!cfg.command.empty()) throw ConfigError("unknown analysis '" + cfg.command + "'");
  return report;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fairness audit: group costs, bias-variance-noise decomposition, noise bounds, "
               "learning curves, significance tests and subgroup localization"};
  app.require_subcommand(1);
  std::map<std::string, std::string> values;
  std::vector<std::string> overrides;
  std::string config_path;
  const std::pair<const char*, const char*> flags[] = {
      {"--data", "data"},         {"--schema", "schema"},   {"--seed", "seed"},
      {"--out", "out"},           {"--format", "format"},   {"--trials", "trials"},
      {"--grid", "grid"},         {"--kind", "kinds"},      {"--threshold", "threshold"},
      {"--level", "level"},       {"--k", "k"},             {"--folds", "folds"},
      {"--reps", "reps"},         {"--topics", "topics"},   {"--learner", "learner"},
      {"--synth", "synth"},
  };
  const std::pair<const char*, const char*> commands[] = {
      {"audit", "Group costs and discrimination levels of a model"},
      {"decompose", "Bias-variance-noise decomposition of group costs"},
      {"curves", "Learning curves, power-law fits and extrapolated discrimination"},
      {"noise", "Bayes-error bounds per group"},
      {"subgroups", "Localize cost gaps to clusters"},
      {"test", "Significance tests for cost gaps"},
      {"synth", "Generate a synthetic dataset with known Bayes quantities"},
      {"report", "Re-emit a saved report.json (--data) in the requested format"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key=value configuration file");
    for (const auto& [flag, key] : flags) sub->add_option(flag, values[key], key);
    sub->add_option("--set", overrides, "extra key=value setting (repeatable)");
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  RunConfig cfg;
  cfg.command = app.get_subcommands().front()->get_name();
  const auto* sub = app.get_subcommands().front();
  try {
    if (!config_path.empty()) load_config_file(cfg, config_path);
    for (const auto& [flag, key] : flags)
      if (sub->count(flag) > 0) cfg.set(key, values[key]);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
      cfg.set(o.substr(0, eq), o.substr(eq + 1));
    }
    if (cfg.format == ReportFormat::Csv && !cfg.out)
      throw ConfigError("csv output needs an output directory (--out)");
    if (cfg.command != "report") master(cfg);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }

  AuditReport report;
  int status = 0;
  try {
    if (cfg.command == "report") {
      if (cfg.data.empty()) throw ConfigError("report needs the saved report path (--data)");
      if (!std::filesystem::exists(cfg.data)) throw ConfigError("report file not found: '" + cfg.data.string() + "'");
      report = parse_report(read_text_file(cfg.data));
    } else {
      report = run_analysis(cfg);
    }
  } catch (const Error& e) {
    status = exit_code_for(e);
    report.version = std::string(kVersion);
    report.config = cfg.echo();
    report.errors.push_back(std::string(cfg.command) + ": " + e.what());
    err << "error: " << e.what() << "\n";
    if (status == 2) return status;
  } catch (const std::exception& e) {
    status = 4;
    report.version = std::string(kVersion);
    report.config = cfg.echo();
    report.errors.push_back(std::string(cfg.command) + ": " + e.what());
    err << "error: " << e.what() << "\n";
  }
  try {
    if (cfg.out) {
      emit_report(report, *cfg.out, cfg.format);
      if (cfg.command == "curves" && status == 0) {
        // Plot data accompanies the report; regenerate it from the summary table.
        for (const auto& r : report.results)
          if (r.analysis == "curves" && r.tables.count("summary")) {
            std::string csv = "n,group,cost_kind,mean,stderr,fitted_value\n";
            for (const auto& row : r.tables.at("summary"))
              csv += row.at("n").dump() + "," + csv_escape(row.at("group").get<std::string>()) + "," +
                     row.at("kind").get<std::string>() + "," + row.at("mean").dump() + "," +
                     row.at("stderr").dump() + "," +
                     (row.at("fitted_value").is_null() ? std::string() : row.at("fitted_value").dump()) + "\n";
            write_text_file(*cfg.out / "curves_plot.csv", csv);
          }
      }
    } else {
      out << render_json(report);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  if (!report.errors.empty() && status == 0) status = 4;
  return status;
}

}  // namespace fairaudit
