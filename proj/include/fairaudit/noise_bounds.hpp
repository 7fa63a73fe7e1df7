#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/parallel.hpp"

namespace fairaudit {

enum class BoundMethod { Mahalanobis, Bhattacharyya, NearestNeighbor };

std::string_view to_string(BoundMethod method);

struct NoiseBoundEstimate {
  BoundMethod method = BoundMethod::Mahalanobis;
  int group = 0;
  std::string label;
  std::optional<double> lower;  // Mahalanobis gives an upper bound only
  double upper = 0.5;
  double prior0 = 0.5;  // p(Y=0 | A=a)
  double prior1 = 0.5;  // p(Y=1 | A=a)
  std::map<std::string, double> auxiliary;
  std::vector<std::string> warnings;
};

struct NoiseBoundOptions {
  bool standardize = false;    // z-score features within the group first
  double ridge_factor = 1e-3;  // covariance ridge = ridge_factor * trace / k
};

// Closed forms, exposed for direct use and testing.
double mahalanobis_upper_bound(double p1, double p2, double delta);
/// Returns (E_low, E_up) for Bhattacharyya distance b.
std::pair<double, double> bhattacharyya_bound_pair(double p1, double p2, double b);
/// Cover-Hart inversion of an asymptotic nearest-neighbour error rate.
double cover_hart_lower(double nn_error);

NoiseBoundEstimate mahalanobis_upper(const Dataset& d, int group,
                                     const NoiseBoundOptions& options = {});
NoiseBoundEstimate bhattacharyya_bounds(const Dataset& d, int group,
                                        const NoiseBoundOptions& options = {});
/// Cross-validated k-NN error within the group gives E_up; its Cover-Hart
/// inversion gives E_low.
NoiseBoundEstimate nn_bounds(const Dataset& d, int group, std::size_t k, std::size_t folds,
                             std::uint64_t seed, const NoiseBoundOptions& options = {},
                             Execution exec = Execution::Parallel);

}  // namespace fairaudit
