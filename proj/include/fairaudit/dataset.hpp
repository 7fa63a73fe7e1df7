#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairaudit/common.hpp"

namespace fairaudit {

enum class Task { BinaryClassification, Regression };

std::string_view to_string(Task task);
Task parse_task(std::string_view text);

/// Feature matrix, protected-group labels and outcomes for n rows.
///
/// Immutable once constructed. Groups are dense indices into group_labels();
/// a loaded dataset has every group populated, while row subsets keep the
/// parent's group labelling so indices stay comparable (a subset may leave a
/// group empty).
class Dataset {
 public:
  Dataset() = default;
  Dataset(Matrix features, std::vector<int> group, std::vector<double> outcome, Task task,
          std::vector<std::string> column_names, std::vector<std::string> group_labels,
          std::map<std::string, std::vector<double>> extra_columns = {},
          std::string group_column = "group", std::string outcome_column = "outcome");

  std::size_t size() const { return group_.size(); }
  std::size_t feature_count() const { return static_cast<std::size_t>(features_.cols()); }
  std::size_t group_count() const { return group_labels_.size(); }

  const Matrix& features() const { return features_; }
  const std::vector<int>& group() const { return group_; }
  const std::vector<double>& outcome() const { return outcome_; }
  Task task() const { return task_; }
  const std::vector<std::string>& column_names() const { return column_names_; }
  const std::vector<std::string>& group_labels() const { return group_labels_; }
  const std::map<std::string, std::vector<double>>& extra_columns() const { return extra_; }
  const std::string& group_column() const { return group_column_; }
  const std::string& outcome_column() const { return outcome_column_; }

  /// Named pass-through column (e.g. a score column); throws DataError if absent.
  const std::vector<double>& column(const std::string& name) const;
  std::size_t feature_index(std::string_view name) const;

  std::size_t group_size(int g) const;

  /// Row subset in the given order (duplicates allowed).
  Dataset rows(std::span<const std::size_t> index) const;

  bool operator==(const Dataset& other) const;

 private:
  Matrix features_;
  std::vector<int> group_;
  std::vector<double> outcome_;
  Task task_ = Task::BinaryClassification;
  std::vector<std::string> column_names_;
  std::vector<std::string> group_labels_;
  std::map<std::string, std::vector<double>> extra_;
  std::string group_column_ = "group";
  std::string outcome_column_ = "outcome";
};

/// Column roles read from a key=value schema file.
struct Schema {
  std::string group;
  std::string outcome;
  Task task = Task::BinaryClassification;
  std::vector<std::string> ignore;
  std::vector<std::string> scores;
  std::vector<std::string> categorical;
};

Schema parse_schema(std::string_view text);
Schema load_schema(const std::filesystem::path& path);
std::string schema_text(const Schema& schema);

/// Parses CSV with a header row. Categorical columns are one-hot expanded in
/// lexicographic category order, named "<column>=<category>".
Dataset parse_dataset(std::string_view csv_text, const Schema& schema);
Dataset load_dataset(const std::filesystem::path& path, const Schema& schema);

/// Writes the dataset as CSV plus the schema that reloads it unchanged.
void write_dataset(const Dataset& d, const std::filesystem::path& csv_path,
                   const std::filesystem::path& schema_path);
std::string dataset_csv(const Dataset& d);
Schema dataset_schema(const Dataset& d);

struct DataSplit {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_index;
  std::vector<std::size_t> test_index;
  std::uint64_t seed = 0;
};

DataSplit split(const Dataset& d, double test_fraction, std::uint64_t seed,
                bool stratify_by_group = false);

/// m rows without replacement, in draw order.
std::vector<std::size_t> subsample_index(std::size_t n, std::size_t m, std::uint64_t seed);
Dataset subsample(const Dataset& d, std::size_t m, std::uint64_t seed);

/// m rows with replacement.
std::vector<std::size_t> bootstrap_index(std::size_t n, std::size_t m, std::uint64_t seed);
Dataset bootstrap_resample(const Dataset& d, std::size_t m, std::uint64_t seed);

/// Content hash used to check that two result sets refer to the same rows.
std::uint64_t fingerprint(const Dataset& d);

// CSV helpers shared with the membership-file loader and the report writer.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string csv_escape(std::string_view field);
std::string read_text_file(const std::filesystem::path& path);
double parse_real(std::string_view cell, std::string_view context);

}  // namespace fairaudit
