#include "fairaudit/learning_curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "fairaudit/rng.hpp"

namespace fairaudit {

CurveExperiment run_curve_experiment(const LearnerSpec& spec, const Dataset& d,
                                     const std::vector<std::size_t>& n_grid, std::size_t trials,
                                     const std::vector<CostKind>& kinds, std::uint64_t seed,
                                     double holdout_fraction, double threshold, Execution exec) {
  if (trials < 1) throw ConfigError("curve experiment needs at least 1 trial");
  if (n_grid.empty()) throw ConfigError("curve experiment needs a nonempty size grid");
  if (kinds.empty()) throw ConfigError("curve experiment needs at least one cost kind");
  if (!(holdout_fraction >= 0.2 && holdout_fraction < 1.0))
    throw ConfigError("holdout fraction must lie in [0.2, 1)");
  if (!std::is_sorted(n_grid.begin(), n_grid.end()) ||
      std::adjacent_find(n_grid.begin(), n_grid.end()) != n_grid.end())
    throw ConfigError("size grid must be strictly ascending");
  const auto budget = static_cast<std::size_t>(
      std::floor((1.0 - holdout_fraction) * static_cast<double>(d.size())));
  if (n_grid.front() < 1 || n_grid.back() > budget)
    throw ConfigError("size grid exceeds the training budget of " + std::to_string(budget) +
                      " rows (" + std::to_string(d.size()) + " rows with " +
                      std::to_string(holdout_fraction) + " held out)");
  for (auto k : kinds)
    if (task_for(k) != d.task() || needs_scores(k))
      throw ConfigError("cost kind '" + std::string(to_string(k)) + "' unsupported for curves on this task");

  CurveExperiment e;
  e.spec = spec;
  e.kinds = kinds;
  e.n_grid = n_grid;
  e.trials = trials;
  e.holdout_fraction = holdout_fraction;
  e.threshold = threshold;
  e.seed = seed;
  e.group_labels = d.group_labels();

  const std::size_t jobs = n_grid.size() * trials;
  std::vector<std::vector<CurveCell>> results(jobs);
  for_each_index(jobs, exec, [&](std::size_t job) {
    const std::size_t s = job / trials;
    const std::size_t t = job % trials;
    // Each trial keeps one held-out split across all sizes.
    const auto parts = split(d, holdout_fraction, derive_seed(seed, "curve-split", t), true);
    const Dataset train_set = subsample(parts.train, n_grid[s], derive_seed(seed, "curve-train", job));
    LearnerSpec member = spec;
    member.seed = derive_seed(seed, "curve-model", job);
    const auto model = train(member, train_set);
    auto scores = predict_scores(model, parts.test, Execution::Serial);
    const PredictionSet preds = d.task() == Task::BinaryClassification
                                    ? PredictionSet::from_scores(std::move(scores), threshold)
                                    : PredictionSet::from_values(std::move(scores));
    for (auto kind : kinds)
      for (std::size_t g = 0; g < d.group_count(); ++g) {
        CurveCell c{n_grid[s], t, static_cast<int>(g), kind, std::nullopt};
        try {
          c.cost = group_cost(preds, parts.test, kind, c.group).cost;
        } catch (const AnalysisError&) {
          // recorded as a missing cell
        }
        results[job].push_back(c);
      }
  });
  for (auto& r : results)
    for (auto& c : r) e.cells.push_back(c);
  return e;
}

std::vector<CurveSummary> CurveExperiment::summaries() const {
  std::map<std::tuple<int, int, std::size_t>, std::vector<double>> by_key;  // (kind, group, n)
  for (const auto& c : cells)
    if (c.cost) by_key[{static_cast<int>(c.kind), c.group, c.n}].push_back(*c.cost);
  std::vector<CurveSummary> out;
  for (auto kind : kinds)
    for (std::size_t g = 0; g < group_labels.size(); ++g)
      for (auto n : n_grid) {
        auto it = by_key.find({static_cast<int>(kind), static_cast<int>(g), n});
        if (it == by_key.end()) continue;
        const auto& v = it->second;
        CurveSummary s{n, static_cast<int>(g), kind, 0.0, 0.0, v.size()};
        long double sum = 0.0L;
        for (double x : v) sum += x;
        s.mean = static_cast<double>(sum / static_cast<long double>(v.size()));
        if (v.size() > 1) {
          long double ss = 0.0L;
          for (double x : v) ss += (x - s.mean) * (x - s.mean);
          s.stderr_ = std::sqrt(static_cast<double>(ss / static_cast<long double>(v.size() - 1)) /
                                static_cast<double>(v.size()));
        }
        out.push_back(s);
      }
  return out;
}

double CurveExperiment::mean_gap(CostKind kind, std::size_t n, GroupPair pair) const {
  std::optional<double> a;
  std::optional<double> b;
  for (const auto& s : summaries()) {
    if (s.kind != kind || s.n != n) continue;
    if (s.group == pair.first) a = s.mean;
    if (s.group == pair.second) b = s.mean;
  }
  if (!a || !b) throw AnalysisError("curve: no measured costs for both groups at n=" + std::to_string(n));
  return std::fabs(*a - *b);
}

std::vector<CurvePoint> curve_points(const CurveExperiment& e, int group, CostKind kind) {
  std::vector<CurvePoint> out;
  for (const auto& s : e.summaries())
    if (s.group == group && s.kind == kind)
      out.push_back({static_cast<double>(s.n), s.mean, static_cast<double>(s.trials)});
  return out;
}

// --- power-law fitting -------------------------------------------------------

double PowerLawFit::operator()(double n) const {
  if (std::isinf(n)) return delta;
  return alpha * std::pow(n, -beta) + delta;
}

namespace {

struct LinearFit {
  double alpha = 0.0;
  double delta = 0.0;
  double rss = std::numeric_limits<double>::infinity();
};

double weighted_rss(const std::vector<CurvePoint>& pts, double beta, double alpha, double delta) {
  long double rss = 0.0L;
  for (const auto& p : pts) {
    const long double r = p.value - (alpha * std::pow(p.n, -beta) + delta);
    rss += p.weight * r * r;
  }
  return static_cast<double>(rss);
}

// Best (alpha, delta) >= 0 for fixed beta: interior solution or the best
// feasible point on the alpha = 0 / delta = 0 boundaries.
LinearFit solve_linear(const std::vector<CurvePoint>& pts, double beta) {
  long double w = 0.0L, su = 0.0L, sy = 0.0L, suu = 0.0L, suy = 0.0L;
  for (const auto& p : pts) {
    const long double u = std::pow(p.n, -beta);
    w += p.weight;
    su += p.weight * u;
    sy += p.weight * p.value;
    suu += p.weight * u * u;
    suy += p.weight * u * p.value;
  }
  const long double ubar = su / w;
  const long double ybar = sy / w;
  const long double sxx = suu - su * ubar;
  const long double sxy = suy - su * ybar;
  std::vector<std::pair<double, double>> candidates;
  if (sxx > 0.0L) {
    const long double a = sxy / sxx;
    const long double dl = ybar - a * ubar;
    if (a >= 0.0L && dl >= 0.0L) candidates.emplace_back(static_cast<double>(a), static_cast<double>(dl));
  }
  candidates.emplace_back(0.0, std::max(0.0, static_cast<double>(ybar)));
  if (suu > 0.0L) candidates.emplace_back(std::max(0.0, static_cast<double>(suy / suu)), 0.0);
  LinearFit best;
  for (const auto& [a, dl] : candidates) {
    const double rss = weighted_rss(pts, beta, a, dl);
    if (rss < best.rss) best = {a, dl, rss};
  }
  return best;
}

}  // namespace

PowerLawFit fit_power_law(const std::vector<CurvePoint>& points) {
  std::vector<CurvePoint> pts;
  for (const auto& p : points) {
    if (!(p.n > 0.0) || !std::isfinite(p.value) || !(p.weight >= 0.0))
      throw AnalysisError("power-law fit: invalid point");
    if (p.weight > 0.0) pts.push_back(p);
  }
  std::vector<double> ns;
  for (const auto& p : pts) ns.push_back(p.n);
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  if (ns.size() < 3) throw AnalysisError("power-law fit needs at least 3 distinct sizes");

  constexpr double lo = 0.01;
  constexpr double hi = 3.0;
  constexpr int grid = 200;
  const double log_lo = std::log(lo);
  const double step = (std::log(hi) - log_lo) / (grid - 1);
  int best_i = 0;
  double best_rss = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    const double rss = solve_linear(pts, std::exp(log_lo + step * i)).rss;
    if (rss < best_rss) {
      best_rss = rss;
      best_i = i;
    }
  }
  // Golden-section refinement in log(beta) between the neighbouring grid points.
  double a = log_lo + step * std::max(0, best_i - 1);
  double b = log_lo + step * std::min(grid - 1, best_i + 1);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = solve_linear(pts, std::exp(c)).rss;
  double fd = solve_linear(pts, std::exp(d)).rss;
  for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = solve_linear(pts, std::exp(c)).rss;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = solve_linear(pts, std::exp(d)).rss;
    }
  }
  double beta = std::clamp(std::exp(0.5 * (a + b)), lo, hi);
  LinearFit lin = solve_linear(pts, beta);
  const double grid_beta = std::clamp(std::exp(log_lo + step * best_i), lo, hi);
  const LinearFit at_grid = solve_linear(pts, grid_beta);
  if (at_grid.rss < lin.rss) {
    beta = grid_beta;
    lin = at_grid;
  }
  PowerLawFit f;
  f.alpha = lin.alpha;
  f.beta = beta;
  f.delta = lin.delta;
  f.rss = lin.rss;
  f.n_min = ns.front();
  f.n_max = ns.back();
  return f;
}

Extrapolation extrapolate_gamma(const PowerLawFit& f0, const PowerLawFit& f1, double n) {
  if (f0.kind && f1.kind && *f0.kind != *f1.kind)
    throw AnalysisError("extrapolation: fits belong to different cost kinds");
  if (!(n > 0.0)) throw AnalysisError("extrapolation size must be positive");
  Extrapolation e;
  e.n = n;
  e.gamma = std::fabs(f0(n) - f1(n));
  e.beyond_range = n > 10.0 * std::max(f0.n_max, f1.n_max);
  return e;
}

std::optional<double> power_law_critical_point(const PowerLawFit& f, const PowerLawFit& g) {
  const double a = f.alpha, b = f.beta, c = f.delta;
  const double d = g.alpha, e = g.beta, h = g.delta;
  if (!(a > 0.0 && d > 0.0)) return std::nullopt;
  if (b != e) {
    const double x = std::pow(b * a / (d * e), 1.0 / (b - e));
    if (std::isfinite(x) && x > 0.0) return x;
    return std::nullopt;
  }
  if (a == d) return std::nullopt;
  const double ratio = (c - h) / (d - a);
  if (!(ratio > 0.0)) return std::nullopt;
  const double x = std::pow(ratio, -1.0 / b);
  if (std::isfinite(x) && x > 0.0) return x;
  return std::nullopt;
}

Crossings power_law_crossings(const PowerLawFit& f, const PowerLawFit& g, double x_lo, double x_hi) {
  if (!(x_lo > 0.0 && x_lo < x_hi) || !std::isfinite(x_hi))
    throw AnalysisError("crossings: domain must satisfy 0 < x_lo < x_hi");
  Crossings out;
  if (f.alpha == g.alpha && f.beta == g.beta && f.delta == g.delta) {
    out.degenerate = true;
    return out;
  }
  auto diff = [&](double x) { return f(x) - g(x); };
  std::vector<double> cuts{x_lo};
  if (f.beta != g.beta)
    if (auto x = power_law_critical_point(f, g); x && *x > x_lo && *x < x_hi) cuts.push_back(*x);
  cuts.push_back(x_hi);

  auto add_root = [&](double r) {
    if (out.roots.empty() || std::fabs(r - out.roots.back()) > 1e-12 * std::max(1.0, r))
      out.roots.push_back(r);
  };
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    double l = cuts[s];
    double r = cuts[s + 1];
    double dl = diff(l);
    const double dr = diff(r);
    if (dl == 0.0) {
      add_root(l);
      continue;
    }
    if (!((dl < 0.0 && dr > 0.0) || (dl > 0.0 && dr < 0.0))) continue;
    for (int it = 0; it < 400 && r - l > 1e-15 * r; ++it) {
      const double m = 0.5 * (l + r);
      const double dm = diff(m);
      if (dm == 0.0) {
        l = r = m;
        break;
      }
      if ((dm < 0.0) == (dl < 0.0)) {
        l = m;
        dl = dm;
      } else {
        r = m;
      }
    }
    add_root(0.5 * (l + r));
  }
  if (diff(x_hi) == 0.0) add_root(x_hi);
  return out;
}

}  // namespace fairaudit
