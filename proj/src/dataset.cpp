#include "fairaudit/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "fairaudit/rng.hpp"

namespace fairaudit {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    auto end = value.find(',', start);
    if (end == std::string_view::npos) end = value.size();
    auto item = trim(value.substr(start, end - start));
    if (!item.empty()) out.emplace_back(item);
    start = end + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += items[i];
  }
  return out;
}

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::string_view to_string(Task task) {
  return task == Task::BinaryClassification ? "binary" : "regression";
}

Task parse_task(std::string_view text) {
  if (text == "binary") return Task::BinaryClassification;
  if (text == "regression") return Task::Regression;
  throw ConfigError("unknown task '" + std::string(text) + "' (expected binary|regression)");
}

Dataset::Dataset(Matrix features, std::vector<int> group, std::vector<double> outcome, Task task,
                 std::vector<std::string> column_names, std::vector<std::string> group_labels,
                 std::map<std::string, std::vector<double>> extra_columns, std::string group_column,
                 std::string outcome_column)
    : features_(std::move(features)),
      group_(std::move(group)),
      outcome_(std::move(outcome)),
      task_(task),
      column_names_(std::move(column_names)),
      group_labels_(std::move(group_labels)),
      extra_(std::move(extra_columns)),
      group_column_(std::move(group_column)),
      outcome_column_(std::move(outcome_column)) {
  const auto n = group_.size();
  if (static_cast<std::size_t>(features_.rows()) != n || outcome_.size() != n)
    throw DataError("dataset columns have inconsistent row counts");
  if (column_names_.size() != static_cast<std::size_t>(features_.cols()))
    throw DataError("feature name count does not match feature columns");
  if (group_labels_.empty()) throw DataError("dataset declares no protected groups");
  for (int g : group_)
    if (g < 0 || static_cast<std::size_t>(g) >= group_labels_.size())
      throw DataError("group index " + std::to_string(g) + " out of range");
  if (!features_.allFinite()) throw DataError("feature matrix contains non-finite values");
  for (double y : outcome_) {
    if (!std::isfinite(y)) throw DataError("non-finite outcome");
    if (task_ == Task::BinaryClassification && y != 0.0 && y != 1.0)
      throw DataError("binary task requires outcomes in {0,1}, found " + format_real(y));
  }
  for (const auto& [name, col] : extra_)
    if (col.size() != n) throw DataError("extra column '" + name + "' has wrong length");
}

const std::vector<double>& Dataset::column(const std::string& name) const {
  auto it = extra_.find(name);
  if (it == extra_.end()) throw DataError("no column named '" + name + "'");
  return it->second;
}

std::size_t Dataset::feature_index(std::string_view name) const {
  for (std::size_t j = 0; j < column_names_.size(); ++j)
    if (column_names_[j] == name) return j;
  throw DataError("no feature named '" + std::string(name) + "'");
}

std::size_t Dataset::group_size(int g) const {
  return static_cast<std::size_t>(std::count(group_.begin(), group_.end(), g));
}

Dataset Dataset::rows(std::span<const std::size_t> index) const {
  Matrix x(static_cast<Eigen::Index>(index.size()), features_.cols());
  std::vector<int> g(index.size());
  std::vector<double> y(index.size());
  std::map<std::string, std::vector<double>> extra;
  for (const auto& [name, col] : extra_) extra[name].resize(index.size());
  for (std::size_t r = 0; r < index.size(); ++r) {
    const auto i = index[r];
    if (i >= size()) throw DataError("row index out of range");
    x.row(static_cast<Eigen::Index>(r)) = features_.row(static_cast<Eigen::Index>(i));
    g[r] = group_[i];
    y[r] = outcome_[i];
    for (const auto& [name, col] : extra_) extra[name][r] = col[i];
  }
  return Dataset(std::move(x), std::move(g), std::move(y), task_, column_names_, group_labels_,
                 std::move(extra), group_column_, outcome_column_);
}

bool Dataset::operator==(const Dataset& o) const {
  return features_.rows() == o.features_.rows() && features_.cols() == o.features_.cols() &&
         features_ == o.features_ && group_ == o.group_ && outcome_ == o.outcome_ &&
         task_ == o.task_ && column_names_ == o.column_names_ &&
         group_labels_ == o.group_labels_ && extra_ == o.extra_ &&
         group_column_ == o.group_column_ && outcome_column_ == o.outcome_column_;
}

// --- schema -----------------------------------------------------------------

Schema parse_schema(std::string_view text) {
  Schema schema;
  bool have_task = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("schema line " + std::to_string(line_no) + ": expected key=value");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key == "group") {
      schema.group = value;
    } else if (key == "outcome") {
      schema.outcome = value;
    } else if (key == "task") {
      schema.task = parse_task(value);
      have_task = true;
    } else if (key == "ignore") {
      for (auto& c : split_list(value)) schema.ignore.push_back(c);
    } else if (key == "score") {
      for (auto& c : split_list(value)) schema.scores.push_back(c);
    } else if (key == "categorical") {
      for (auto& c : split_list(value)) schema.categorical.push_back(c);
    } else {
      throw ConfigError("schema line " + std::to_string(line_no) + ": unknown key '" +
                        std::string(key) + "'");
    }
  }
  if (schema.group.empty()) throw ConfigError("schema does not name a group column");
  if (schema.outcome.empty()) throw ConfigError("schema does not name an outcome column");
  if (!have_task) throw ConfigError("schema does not declare task=binary|regression");
  return schema;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Schema load_schema(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("schema file not found: " + path.string());
  return parse_schema(read_text_file(path));
}

std::string schema_text(const Schema& s) {
  std::string out = "group=" + s.group + "\noutcome=" + s.outcome + "\ntask=" +
                    std::string(to_string(s.task)) + "\n";
  if (!s.ignore.empty()) out += "ignore=" + join(s.ignore) + "\n";
  if (!s.scores.empty()) out += "score=" + join(s.scores) + "\n";
  if (!s.categorical.empty()) out += "categorical=" + join(s.categorical) + "\n";
  return out;
}

// --- CSV --------------------------------------------------------------------

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  bool any = false;
  auto end_field = [&] {
    row.push_back(field_was_quoted ? field : std::string(trim(field)));
    field.clear();
    field_was_quoted = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    any = true;
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && trim(field).empty()) {
      field.clear();
      quoted = true;
      field_was_quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else {
      field += c;
    }
  }
  if (quoted) throw DataError("unterminated quoted CSV field");
  if (any && (!field.empty() || !row.empty())) end_row();
  return rows;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos && trim(field) == field)
    return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double parse_real(std::string_view cell, std::string_view context) {
  cell = trim(cell);
  if (cell.empty()) throw DataError("missing value in " + std::string(context));
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
    throw DataError("non-numeric cell '" + std::string(cell) + "' in " + std::string(context));
  return v;
}

Dataset parse_dataset(std::string_view csv_text, const Schema& schema) {
  auto table = parse_csv(csv_text);
  if (table.empty()) throw DataError("CSV has no header row");
  const auto& header = table.front();
  const std::size_t width = header.size();
  const std::size_t n = table.size() - 1;
  if (n == 0) throw DataError("CSV has no data rows");

  std::map<std::string, std::size_t> position;
  for (std::size_t j = 0; j < width; ++j) {
    if (header[j].empty()) throw DataError("empty column name at position " + std::to_string(j));
    if (!position.emplace(header[j], j).second)
      throw DataError("duplicate column '" + header[j] + "'");
  }
  auto require = [&](const std::string& name, const char* role) {
    auto it = position.find(name);
    if (it == position.end())
      throw DataError(std::string(role) + " column '" + name + "' not found");
    return it->second;
  };
  const auto group_col = require(schema.group, "group");
  const auto outcome_col = require(schema.outcome, "outcome");
  std::set<std::size_t> reserved{group_col, outcome_col};
  for (const auto& c : schema.ignore) reserved.insert(require(c, "ignored"));
  std::map<std::string, std::size_t> score_cols;
  for (const auto& c : schema.scores) {
    score_cols[c] = require(c, "score");
    reserved.insert(score_cols[c]);
  }
  std::set<std::size_t> categorical;
  for (const auto& c : schema.categorical) categorical.insert(require(c, "categorical"));

  for (std::size_t r = 1; r <= n; ++r) {
    if (table[r].size() != width)
      throw DataError("row " + std::to_string(r) + " has " + std::to_string(table[r].size()) +
                      " fields, expected " + std::to_string(width));
    for (std::size_t j = 0; j < width; ++j)
      if (table[r][j].empty())
        throw DataError("missing value at row " + std::to_string(r) + ", column '" + header[j] +
                        "'");
  }

  // Feature layout: original column order, categoricals expanded in place.
  struct Source {
    std::size_t column;
    std::vector<std::string> levels;  // empty for numeric
  };
  std::vector<Source> sources;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < width; ++j) {
    if (reserved.count(j)) continue;
    Source src{j, {}};
    if (categorical.count(j)) {
      std::set<std::string> levels;
      for (std::size_t r = 1; r <= n; ++r) levels.insert(table[r][j]);
      src.levels.assign(levels.begin(), levels.end());
      for (const auto& lv : src.levels) names.push_back(header[j] + "=" + lv);
    } else {
      names.push_back(header[j]);
    }
    sources.push_back(std::move(src));
  }
  if (names.empty()) throw DataError("schema leaves no feature columns");

  std::set<std::string> group_values;
  for (std::size_t r = 1; r <= n; ++r) group_values.insert(table[r][group_col]);
  std::vector<std::string> group_labels(group_values.begin(), group_values.end());

  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(names.size()));
  std::vector<int> group(n);
  std::vector<double> outcome(n);
  std::map<std::string, std::vector<double>> extra;
  for (auto& [name, col] : score_cols) extra[name].resize(n);

  for (std::size_t r = 1; r <= n; ++r) {
    const auto& row = table[r];
    const auto i = static_cast<Eigen::Index>(r - 1);
    Eigen::Index out = 0;
    for (const auto& src : sources) {
      if (src.levels.empty()) {
        x(i, out++) = parse_real(row[src.column], "column '" + header[src.column] + "' row " +
                                                      std::to_string(r));
      } else {
        auto hit = std::lower_bound(src.levels.begin(), src.levels.end(), row[src.column]);
        for (std::size_t l = 0; l < src.levels.size(); ++l)
          x(i, out++) = (static_cast<std::size_t>(hit - src.levels.begin()) == l) ? 1.0 : 0.0;
      }
    }
    group[r - 1] = static_cast<int>(
        std::lower_bound(group_labels.begin(), group_labels.end(), row[group_col]) -
        group_labels.begin());
    outcome[r - 1] = parse_real(row[outcome_col], "outcome row " + std::to_string(r));
    if (schema.task == Task::BinaryClassification && outcome[r - 1] != 0.0 &&
        outcome[r - 1] != 1.0)
      throw DataError("binary task: outcome '" + row[outcome_col] + "' at row " +
                      std::to_string(r) + " is not 0 or 1");
    for (auto& [name, col] : score_cols)
      extra[name][r - 1] = parse_real(row[col], "score column '" + name + "'");
  }
  return Dataset(std::move(x), std::move(group), std::move(outcome), schema.task,
                 std::move(names), std::move(group_labels), std::move(extra), schema.group,
                 schema.outcome);
}

Dataset load_dataset(const std::filesystem::path& path, const Schema& schema) {
  if (!std::filesystem::exists(path)) throw DataError("data file not found: " + path.string());
  return parse_dataset(read_text_file(path), schema);
}

Schema dataset_schema(const Dataset& d) {
  Schema s;
  s.group = d.group_column();
  s.outcome = d.outcome_column();
  s.task = d.task();
  for (const auto& [name, col] : d.extra_columns()) s.scores.push_back(name);
  return s;
}

std::string dataset_csv(const Dataset& d) {
  std::string out;
  for (const auto& name : d.column_names()) out += csv_escape(name) + ",";
  for (const auto& [name, col] : d.extra_columns()) out += csv_escape(name) + ",";
  out += csv_escape(d.group_column()) + "," + csv_escape(d.outcome_column()) + "\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (Eigen::Index j = 0; j < d.features().cols(); ++j)
      out += format_real(d.features()(static_cast<Eigen::Index>(i), j)) + ",";
    for (const auto& [name, col] : d.extra_columns()) out += format_real(col[i]) + ",";
    out += csv_escape(d.group_labels()[static_cast<std::size_t>(d.group()[i])]) + "," +
           format_real(d.outcome()[i]) + "\n";
  }
  return out;
}

void write_dataset(const Dataset& d, const std::filesystem::path& csv_path,
                   const std::filesystem::path& schema_path) {
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw DataError("cannot write " + csv_path.string());
  csv << dataset_csv(d);
  std::ofstream schema(schema_path, std::ios::binary);
  if (!schema) throw DataError("cannot write " + schema_path.string());
  schema << schema_text(dataset_schema(d));
}

// --- resampling -------------------------------------------------------------

DataSplit split(const Dataset& d, double test_fraction, std::uint64_t seed,
                bool stratify_by_group) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw DataError("test fraction must lie in (0,1)");
  const auto n = d.size();
  const double nd = static_cast<double>(n);
  if (nd * test_fraction < 1.0 || nd * (1.0 - test_fraction) < 1.0)
    throw DataError("split leaves an empty train or test side");

  Rng rng(seed);
  std::vector<std::size_t> test;
  std::vector<std::size_t> train;
  auto take = [&](std::vector<std::size_t> pool, std::size_t n_test) {
    std::shuffle(pool.begin(), pool.end(), rng);
    test.insert(test.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_test));
    train.insert(train.end(), pool.begin() + static_cast<std::ptrdiff_t>(n_test), pool.end());
  };
  if (stratify_by_group) {
    std::vector<std::vector<std::size_t>> by_group(d.group_count());
    for (std::size_t i = 0; i < n; ++i) by_group[static_cast<std::size_t>(d.group()[i])].push_back(i);
    for (std::size_t g = 0; g < by_group.size(); ++g) {
      const auto m = by_group[g].size();
      if (m == 0) continue;
      if (m < 2)
        throw DataError("stratified split: group '" + d.group_labels()[g] +
                        "' has fewer than 2 rows");
      auto k = static_cast<std::size_t>(std::llround(static_cast<double>(m) * test_fraction));
      k = std::clamp<std::size_t>(k, 1, m - 1);
      take(std::move(by_group[g]), k);
    }
  } else {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    auto k = static_cast<std::size_t>(std::llround(nd * test_fraction));
    take(std::move(all), std::clamp<std::size_t>(k, 1, n - 1));
  }
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
#ifndef NDEBUG
  {
    std::vector<std::size_t> all(train);
    all.insert(all.end(), test.begin(), test.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i)
      if (all[i] != i) throw DataError("internal: split is not a partition");
  }
#endif
  DataSplit out{d.rows(train), d.rows(test), std::move(train), std::move(test), seed};
  return out;
}

std::vector<std::size_t> subsample_index(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m < 1 || m > n)
    throw DataError("subsample size " + std::to_string(m) + " outside [1, " + std::to_string(n) +
                    "]");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(m);
  return idx;
}

Dataset subsample(const Dataset& d, std::size_t m, std::uint64_t seed) {
  auto idx = subsample_index(d.size(), m, seed);
  return d.rows(idx);
}

std::vector<std::size_t> bootstrap_index(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m < 1) throw DataError("bootstrap size must be at least 1");
  if (n == 0) throw DataError("cannot bootstrap an empty dataset");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(m);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Dataset bootstrap_resample(const Dataset& d, std::size_t m, std::uint64_t seed) {
  auto idx = bootstrap_index(d.size(), m, seed);
  return d.rows(idx);
}

std::uint64_t fingerprint(const Dataset& d) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const auto n = d.size();
  feed(&n, sizeof n);
  feed(d.features().data(), sizeof(double) * static_cast<std::size_t>(d.features().size()));
  feed(d.group().data(), sizeof(int) * n);
  feed(d.outcome().data(), sizeof(double) * n);
  return h;
}

}  // namespace fairaudit
