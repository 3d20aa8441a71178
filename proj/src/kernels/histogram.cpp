#include "repute/kernels/histogram.hpp"

namespace repute::kernels {
namespace {

FeatureHistogram build_one(const BinnedMatrix& x, std::size_t feature, std::span<const std::size_t> rows,
                           std::span<const double> grad, std::span<const double> hess, std::size_t n_bins) {
  FeatureHistogram h{std::vector<double>(n_bins, 0.0), std::vector<double>(n_bins, 0.0),
                     std::vector<std::uint32_t>(n_bins, 0)};
  const std::uint16_t* col = x.bins.data() + feature * x.rows;
  for (std::size_t r : rows) {
    const std::uint16_t b = col[r];
    h.grad[b] += grad[r];
    h.hess[b] += hess[r];
    ++h.count[b];
  }
  return h;
}

}  // namespace

namespace serial {

std::vector<FeatureHistogram> build_histograms(const BinnedMatrix& x, std::span<const std::size_t> rows,
                                               std::span<const double> grad, std::span<const double> hess,
                                               std::size_t n_bins) {
  std::vector<FeatureHistogram> out(x.cols);
  for (std::size_t f = 0; f < x.cols; ++f) out[f] = build_one(x, f, rows, grad, hess, n_bins);
  return out;
}

}  // namespace serial

namespace omp {

std::vector<FeatureHistogram> build_histograms(const BinnedMatrix& x, std::span<const std::size_t> rows,
                                               std::span<const double> grad, std::span<const double> hess,
                                               std::size_t n_bins) {
  std::vector<FeatureHistogram> out(x.cols);
  const auto cols = static_cast<long long>(x.cols);
#pragma omp parallel for schedule(static)
  for (long long f = 0; f < cols; ++f) {
    out[static_cast<std::size_t>(f)] = build_one(x, static_cast<std::size_t>(f), rows, grad, hess, n_bins);
  }
  return out;
}

}  // namespace omp

}  // namespace repute::kernels
