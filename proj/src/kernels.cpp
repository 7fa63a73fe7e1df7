#include "fairaudit/kernels.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <utility>

namespace fairaudit {

namespace {

void check_shapes(const Matrix& reference, const Matrix& queries, std::size_t k) {
  if (k == 0) throw ConfigError("neighbour count k must be at least 1");
  if (reference.rows() == 0) throw AnalysisError("nearest neighbours: empty reference set");
  if (reference.cols() != queries.cols())
    throw AnalysisError("nearest neighbours: reference and query dimensions differ");
}

using Candidate = std::pair<double, std::size_t>;  // (squared distance, index)

void search_one(const Matrix& reference, const double* q, std::size_t kk, std::size_t* out) {
  const auto n = static_cast<std::size_t>(reference.rows());
  const auto dim = static_cast<std::size_t>(reference.cols());
  // Max-heap on (distance, index): top is the current worst neighbour.
  std::priority_queue<Candidate> heap;
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = reference.data() + r * dim;
    const bool full = heap.size() == kk;
    const double bound = full ? heap.top().first : 0.0;
    double acc = 0.0;
    std::size_t j = 0;
    for (; j < dim; ++j) {
      const double diff = q[j] - x[j];
      acc += diff * diff;
      // A later index at equal distance never displaces the incumbent.
      if (full && acc >= bound) break;
    }
    if (j < dim) continue;
    if (!full) {
      heap.emplace(acc, r);
    } else if (Candidate(acc, r) < heap.top()) {
      heap.pop();
      heap.emplace(acc, r);
    }
  }
  for (std::size_t s = heap.size(); s-- > 0;) {
    out[s] = heap.top().second;
    heap.pop();
  }
}

}  // namespace

std::vector<std::size_t> nearest_neighbors(const Matrix& reference, const Matrix& queries,
                                           std::size_t k, Execution exec) {
  check_shapes(reference, queries, k);
  const std::size_t kk = std::min(k, static_cast<std::size_t>(reference.rows()));
  const auto m = static_cast<std::size_t>(queries.rows());
  std::vector<std::size_t> out(m * kk);
  for_each_index(m, exec, [&](std::size_t i) {
    search_one(reference, queries.data() + i * static_cast<std::size_t>(queries.cols()), kk,
               out.data() + i * kk);
  });
  return out;
}

std::vector<std::size_t> nearest_neighbors_reference(const Matrix& reference,
                                                     const Matrix& queries, std::size_t k) {
  check_shapes(reference, queries, k);
  const auto n = static_cast<std::size_t>(reference.rows());
  const auto dim = static_cast<std::size_t>(reference.cols());
  const std::size_t kk = std::min(k, n);
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(queries.rows()) * kk);
  std::vector<Candidate> all(n);
  for (Eigen::Index i = 0; i < queries.rows(); ++i) {
    for (std::size_t r = 0; r < n; ++r) {
      double acc = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double diff = queries(i, static_cast<Eigen::Index>(j)) -
                            reference(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
        acc += diff * diff;
      }
      all[r] = {acc, r};
    }
    std::sort(all.begin(), all.end());
    for (std::size_t s = 0; s < kk; ++s) out.push_back(all[s].second);
  }
  return out;
}

}  // namespace fairaudit
