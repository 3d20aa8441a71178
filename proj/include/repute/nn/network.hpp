#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "repute/nn/layers.hpp"

namespace repute::nn {

/// Sequential stack of layers with a fixed per-sample input shape.
class Network {
 public:
  Network() = default;
  explicit Network(Shape input_shape) : input_shape_(std::move(input_shape)) {}
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  /// Appends a layer; throws ShapeError if it cannot accept the current output shape.
  Network& add(std::unique_ptr<Layer> layer);
  template <typename L, typename... Args>
  Network& emplace(Args&&... args) {
    return add(std::make_unique<L>(std::forward<Args>(args)...));
  }

  /// Glorot-uniform weights, zero biases, from a generator seeded with `seed`.
  void init(std::uint64_t seed);

  const Shape& input_shape() const { return input_shape_; }
  Shape output_shape() const;
  /// Input shape expected by layer i.
  const Shape& layer_input_shape(std::size_t i) const { return shapes_.at(i); }
  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  /// Caching forward pass. Throws ShapeError naming the layer on mismatch and
  /// Error when a layer emits a non-finite value.
  Tensor forward(const Tensor& x);
  /// Cache-free forward, safe to call concurrently on a shared network.
  Tensor infer(const Tensor& x) const;
  /// Output of layer `last` (inclusive) without caching.
  Tensor infer_prefix(const Tensor& x, std::size_t last) const;

  /// Accumulates parameter gradients for the last forward; returns dL/dinput.
  Tensor backward(const Tensor& grad_out);

  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  std::size_t parameter_count() const;
  void zero_grad();

 private:
  void check_input(const Tensor& x) const;

  Shape input_shape_;
  std::vector<Shape> shapes_;
  std::vector<std::unique_ptr<Layer>> layers_;
  bool forward_done_ = false;
};

}  // namespace repute::nn
