#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fairaudit/costs.hpp"
#include "fairaudit/learners.hpp"
#include "fairaudit/report.hpp"

namespace fairaudit {

/// Resolved settings for one CLI run. Config-file keys use the same names as
/// the fields below; command-line flags override file values.
struct RunConfig {
  std::string command;
  std::filesystem::path data;
  std::filesystem::path schema;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  ReportFormat format = ReportFormat::Json;

  std::vector<CostKind> kinds;  // empty: defaults for the task
  std::optional<LearnerKind> learner;  // empty: logistic (binary) or ridge (regression)
  LearnerSpec learner_spec;

  double threshold = 0.5;
  double level = 0.05;
  double test_fraction = 0.2;
  double holdout = 0.2;
  std::size_t trials = 10;
  std::vector<std::size_t> grid;
  std::size_t ensemble_size = 50;
  std::size_t n_train = 0;  // 0: whole training split (data) or 200 (synthetic)
  std::size_t k = 5;
  std::size_t folds = 5;
  std::size_t reps = 1000;
  std::optional<std::filesystem::path> topics;
  double min_mass = 10.0;
  bool standardize = false;

  std::string synth;  // "", "discrete" or "regression"
  std::size_t synth_n = 500;
  double sigma_eps = 1.0;
  bool homoskedastic = false;

  /// Applies one key=value setting; throws ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value,
           const std::filesystem::path& base_dir = {});
  /// Flat echo of every setting, as written into reports.
  Json echo() const;
};

/// Reads key=value lines ('#' comments) from a config file into cfg.
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Runs the analyses selected by cfg.command and assembles the report.
AuditReport run_analysis(const RunConfig& cfg);

/// Entry point: parses arguments (without the program name), runs, writes
/// output. Exit status 0 success, 2 config error, 3 data error, 4 analysis error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fairaudit
