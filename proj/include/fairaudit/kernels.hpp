#pragma once

#include <cstddef>
#include <vector>

#include "fairaudit/common.hpp"
#include "fairaudit/parallel.hpp"

namespace fairaudit {

/// k nearest reference rows for every query row, by squared Euclidean
/// distance, ordered by (distance, reference index). Result is
/// queries × min(k, reference rows), row-major.
///
/// The parallel path prunes candidates with a partial-distance bound; it
/// accumulates coordinates in the same order as the brute-force path, so
/// both return identical neighbour lists.
std::vector<std::size_t> nearest_neighbors(const Matrix& reference, const Matrix& queries,
                                           std::size_t k, Execution exec = Execution::Parallel);

/// Brute-force reference: full distance to every row, then a stable sort.
std::vector<std::size_t> nearest_neighbors_reference(const Matrix& reference,
                                                     const Matrix& queries, std::size_t k);

}  // namespace fairaudit
