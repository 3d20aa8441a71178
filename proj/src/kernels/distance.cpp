#include "repute/kernels/distance.hpp"

#include <algorithm>
#include <numeric>

namespace repute::kernels {
namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

void check(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("pairwise distances: dimension mismatch");
}

std::vector<std::size_t> nearest(const Matrix& queries, const Matrix& refs, std::size_t i, std::size_t k,
                                 bool exclude_self) {
  std::vector<std::pair<double, std::size_t>> cand;
  cand.reserve(refs.rows());
  for (std::size_t j = 0; j < refs.rows(); ++j) {
    if (exclude_self && j == i) continue;
    cand.emplace_back(sq_dist(queries.row(i), refs.row(j)), j);
  }
  const std::size_t take = std::min(k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end());
  std::vector<std::size_t> out(take);
  for (std::size_t t = 0; t < take; ++t) out[t] = cand[t].second;
  return out;
}

}  // namespace

namespace serial {

Matrix pairwise_sq_distances(const Matrix& a, const Matrix& b) {
  check(a, b);
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = sq_dist(a.row(i), b.row(j));
  }
  return out;
}

NeighbourLists knn(const Matrix& queries, const Matrix& refs, std::size_t k, bool exclude_self) {
  check(queries, refs);
  NeighbourLists out(queries.rows());
  for (std::size_t i = 0; i < queries.rows(); ++i) out[i] = nearest(queries, refs, i, k, exclude_self);
  return out;
}

}  // namespace serial

namespace omp {

Matrix pairwise_sq_distances(const Matrix& a, const Matrix& b) {
  check(a, b);
  Matrix out(a.rows(), b.rows());
  const auto n = static_cast<long long>(a.rows());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < b.rows(); ++j) out(r, j) = sq_dist(a.row(r), b.row(j));
  }
  return out;
}

NeighbourLists knn(const Matrix& queries, const Matrix& refs, std::size_t k, bool exclude_self) {
  check(queries, refs);
  NeighbourLists out(queries.rows());
  const auto n = static_cast<long long>(queries.rows());
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    out[r] = nearest(queries, refs, r, k, exclude_self);
  }
  return out;
}

}  // namespace omp

}  // namespace repute::kernels
