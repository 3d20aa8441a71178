#pragma once

#include <cstddef>
#include <exception>
#include <type_traits>
#include <vector>

namespace repute::kernels {

namespace serial {

/// out[i] = fn(i) for i in [0, n).
template <typename F>
auto map_indexed(std::size_t n, F&& fn) -> std::vector<std::invoke_result_t<F&, std::size_t>> {
  std::vector<std::invoke_result_t<F&, std::size_t>> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
  return out;
}

}  // namespace serial

namespace omp {

/// Same contract as serial::map_indexed; `fn` must be safe to call concurrently.
/// Each slot is written by exactly one iteration, so results match the serial kernel.
/// The first exception thrown by any iteration is rethrown after the loop.
template <typename F>
auto map_indexed(std::size_t n, F&& fn) -> std::vector<std::invoke_result_t<F&, std::size_t>> {
  std::vector<std::invoke_result_t<F&, std::size_t>> out(n);
  std::exception_ptr error;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(repute_map_indexed_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace omp

}  // namespace repute::kernels
