#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "repute/nn/tensor.hpp"

namespace repute::nn {

using Rng = std::mt19937_64;

/// Trainable parameter with its accumulated gradient.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
};

enum class LayerKind { Dense, Conv1D, ReLU, Sigmoid, Tanh, Flatten, Reshape, Upsample1D };

std::string_view layer_kind_name(LayerKind k);

/// A layer maps one sample to one sample. `forward` caches what `backward` needs;
/// `infer` is the cache-free const path used for concurrent scoring.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  /// Throws ShapeError if `in` is not an acceptable input.
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual Tensor infer(const Tensor& x) const = 0;
  virtual Tensor forward(const Tensor& x) {
    cached_input_ = x;
    return infer(x);
  }
  /// Accumulates parameter gradients and returns dL/dinput. Requires a prior forward.
  virtual Tensor backward(const Tensor& grad_out) = 0;

  virtual std::vector<Param*> params() { return {}; }
  virtual void init(Rng&) {}
  virtual nlohmann::ordered_json spec() const = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;

  bool has_cache() const { return cached_input_.has_value(); }

 protected:
  const Tensor& cached_input() const;
  std::optional<Tensor> cached_input_;
};

/// y = W x + b with W shaped [out, in].
class Dense final : public Layer {
 public:
  Dense(std::size_t in, std::size_t out, bool bias = true);

  LayerKind kind() const override { return LayerKind::Dense; }
  Shape output_shape(const Shape& in) const override;
  Tensor infer(const Tensor& x) const override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override;
  void init(Rng& rng) override;
  nlohmann::ordered_json spec() const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

  std::size_t in() const { return in_; }
  std::size_t out() const { return out_; }
  bool has_bias() const { return bias_enabled_; }
  Param& weight() { return weight_; }
  const Param& weight() const { return weight_; }
  Param& bias() { return bias_; }
  const Param& bias() const { return bias_; }

 private:
  std::size_t in_, out_;
  bool bias_enabled_;
  Param weight_;
  Param bias_;
};

/// 1-D convolution over [length, channels] with zero padding.
/// Weight is [out_channels, kernel, in_channels].
class Conv1D final : public Layer {
 public:
  Conv1D(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride = 1,
         std::size_t padding = 0);

  LayerKind kind() const override { return LayerKind::Conv1D; }
  Shape output_shape(const Shape& in) const override;
  Tensor infer(const Tensor& x) const override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  void init(Rng& rng) override;
  nlohmann::ordered_json spec() const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv1D>(*this); }

  /// floor((length + 2*padding - kernel)/stride) + 1, or 0 when the kernel does not fit.
  std::size_t output_length(std::size_t length) const;
  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  std::size_t in_ch_, out_ch_, kernel_, stride_, padding_;
  Param weight_;
  Param bias_;
};

class ReLU final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::ReLU; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor infer(const Tensor& x) const override;
  Tensor backward(const Tensor& grad_out) override;
  nlohmann::ordered_json spec() const override { return {{"kind", "ReLU"}}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<ReLU>(*this); }
};

class Sigmoid final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::Sigmoid; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor infer(const Tensor& x) const override;
  Tensor backward(const Tensor& grad_out) override;
  nlohmann::ordered_json spec() const override { return {{"kind", "Sigmoid"}}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Sigmoid>(*this); }
};

class Tanh final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::Tanh; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor infer(const Tensor& x) const override;
  Tensor backward(const Tensor& grad_out) override;
  nlohmann::ordered_json spec() const override { return {{"kind", "Tanh"}}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Tanh>(*this); }
};

/// Any shape -> [size].
class Flatten final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::Flatten; }
  Shape output_shape(const Shape& in) const override { return {shape_size(in)}; }
  Tensor infer(const Tensor& x) const override { return x.reshaped({x.size()}); }
  Tensor backward(const Tensor& grad_out) override { return grad_out.reshaped(cached_input().shape()); }
  nlohmann::ordered_json spec() const override { return {{"kind", "Flatten"}}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }
};

/// [size] -> target shape with the same element count; the decoder's inverse of Flatten.
class Reshape final : public Layer {
 public:
  explicit Reshape(Shape target) : target_(std::move(target)) {}
  LayerKind kind() const override { return LayerKind::Reshape; }
  Shape output_shape(const Shape& in) const override;
  Tensor infer(const Tensor& x) const override { return x.reshaped(target_); }
  Tensor backward(const Tensor& grad_out) override { return grad_out.reshaped(cached_input().shape()); }
  nlohmann::ordered_json spec() const override { return {{"kind", "Reshape"}, {"target", target_}}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Reshape>(*this); }

 private:
  Shape target_;
};

/// Nearest-neighbour repeat along time: [L, C] -> [L*factor, C].
class Upsample1D final : public Layer {
 public:
  explicit Upsample1D(std::size_t factor) : factor_(factor) {}
  LayerKind kind() const override { return LayerKind::Upsample1D; }
  Shape output_shape(const Shape& in) const override;
  Tensor infer(const Tensor& x) const override;
  Tensor backward(const Tensor& grad_out) override;
  nlohmann::ordered_json spec() const override { return {{"kind", "Upsample1D"}, {"factor", factor_}}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Upsample1D>(*this); }

 private:
  std::size_t factor_;
};

/// Rebuilds a layer (with zeroed parameters) from its spec().
std::unique_ptr<Layer> layer_from_spec(const nlohmann::json& spec);

}  // namespace repute::nn
