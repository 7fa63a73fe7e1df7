#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fairaudit/dataset.hpp"

namespace fixtures {

/// Binary dataset with one feature column holding the row index.
inline fairaudit::Dataset binary(const std::vector<int>& group, const std::vector<double>& y,
                                 std::size_t groups = 2) {
  fairaudit::Matrix x(static_cast<Eigen::Index>(y.size()), 1);
  for (std::size_t i = 0; i < y.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
  std::vector<std::string> labels;
  for (std::size_t g = 0; g < groups; ++g) labels.push_back("g" + std::to_string(g));
  return {x, group, y, fairaudit::Task::BinaryClassification, {"x"}, labels};
}

inline fairaudit::Dataset regression(const std::vector<int>& group, const std::vector<double>& y) {
  fairaudit::Matrix x(static_cast<Eigen::Index>(y.size()), 1);
  for (std::size_t i = 0; i < y.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
  return {x, group, y, fairaudit::Task::Regression, {"x"}, {"g0", "g1"}};
}

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fairaudit_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string data_dir() { return FAIRAUDIT_DATA_DIR; }

}  // namespace fixtures
