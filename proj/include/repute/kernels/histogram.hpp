#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace repute::kernels {

/// Feature matrix quantized to bin ids, stored column-major for per-feature scans.
struct BinnedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint16_t> bins;  // bins[c * rows + r]

  std::uint16_t at(std::size_t r, std::size_t c) const { return bins[c * rows + r]; }
};

/// Gradient/hessian sums per bin for one feature.
struct FeatureHistogram {
  std::vector<double> grad;
  std::vector<double> hess;
  std::vector<std::uint32_t> count;
};

namespace serial {

/// One histogram per feature over the listed rows, accumulated in row-list order.
std::vector<FeatureHistogram> build_histograms(const BinnedMatrix& x, std::span<const std::size_t> rows,
                                               std::span<const double> grad, std::span<const double> hess,
                                               std::size_t n_bins);

}  // namespace serial

namespace omp {

/// Parallel over features; each feature is summed in row-list order so results
/// are bit-identical to the serial kernel.
std::vector<FeatureHistogram> build_histograms(const BinnedMatrix& x, std::span<const std::size_t> rows,
                                               std::span<const double> grad, std::span<const double> hess,
                                               std::size_t n_bins);

}  // namespace omp

}  // namespace repute::kernels
