#pragma once

#include <cstddef>
#include <vector>

#include "repute/common/matrix.hpp"

namespace repute::kernels {

using NeighbourLists = std::vector<std::vector<std::size_t>>;

namespace serial {

/// out(i, j) = ||a_i - b_j||^2.
Matrix pairwise_sq_distances(const Matrix& a, const Matrix& b);

/// Indices of the k nearest rows of `refs` for each query row, nearest first,
/// ties broken by lower index. With `exclude_self`, query i never returns ref i
/// (queries and refs are the same set).
NeighbourLists knn(const Matrix& queries, const Matrix& refs, std::size_t k, bool exclude_self);

}  // namespace serial

namespace omp {

Matrix pairwise_sq_distances(const Matrix& a, const Matrix& b);
NeighbourLists knn(const Matrix& queries, const Matrix& refs, std::size_t k, bool exclude_self);

}  // namespace omp

}  // namespace repute::kernels
