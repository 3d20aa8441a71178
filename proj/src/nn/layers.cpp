#include "repute/nn/layers.hpp"

#include <cmath>

namespace repute::nn {
namespace {

void glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : t.data()) v = dist(rng);
}

void expect_shape(const char* who, const Shape& expected, const Shape& actual) {
  if (expected != actual) {
    throw ShapeError(std::string(who) + ": expected input shape " + shape_string(expected) + ", got " +
                     shape_string(actual));
  }
}

Param make_param(std::string name, Shape shape) {
  Tensor value(shape);
  Tensor grad(std::move(shape));
  return Param{std::move(name), std::move(value), std::move(grad)};
}

}  // namespace

std::string_view layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Dense:
      return "Dense";
    case LayerKind::Conv1D:
      return "Conv1D";
    case LayerKind::ReLU:
      return "ReLU";
    case LayerKind::Sigmoid:
      return "Sigmoid";
    case LayerKind::Tanh:
      return "Tanh";
    case LayerKind::Flatten:
      return "Flatten";
    case LayerKind::Reshape:
      return "Reshape";
    case LayerKind::Upsample1D:
      return "Upsample1D";
  }
  return "?";
}

const Tensor& Layer::cached_input() const {
  if (!cached_input_) throw Error(std::string(layer_kind_name(kind())) + ": backward called before forward");
  return *cached_input_;
}

// ---- Dense ----

Dense::Dense(std::size_t in, std::size_t out, bool bias)
    : in_(in),
      out_(out),
      bias_enabled_(bias),
      weight_(make_param("weight", {out, in})),
      bias_(make_param("bias", {out})) {
  if (in == 0 || out == 0) throw ShapeError("Dense: dimensions must be positive");
}

Shape Dense::output_shape(const Shape& in) const {
  expect_shape("Dense", {in_}, in);
  return {out_};
}

Tensor Dense::infer(const Tensor& x) const {
  expect_shape("Dense", {in_}, x.shape());
  Tensor y({out_});
  const auto& w = weight_.value.data();
  for (std::size_t o = 0; o < out_; ++o) {
    double acc = bias_enabled_ ? bias_.value[o] : 0.0;
    const double* wr = w.data() + o * in_;
    for (std::size_t i = 0; i < in_; ++i) acc += wr[i] * x[i];
    y[o] = acc;
  }
  return y;
}

Tensor Dense::backward(const Tensor& grad_out) {
  const Tensor& x = cached_input();
  expect_shape("Dense backward", {out_}, grad_out.shape());
  Tensor dx({in_});
  auto& gw = weight_.grad.data();
  const auto& w = weight_.value.data();
  for (std::size_t o = 0; o < out_; ++o) {
    const double g = grad_out[o];
    if (bias_enabled_) bias_.grad[o] += g;
    double* gwr = gw.data() + o * in_;
    const double* wr = w.data() + o * in_;
    for (std::size_t i = 0; i < in_; ++i) {
      gwr[i] += g * x[i];
      dx[i] += wr[i] * g;
    }
  }
  return dx;
}

std::vector<Param*> Dense::params() {
  if (bias_enabled_) return {&weight_, &bias_};
  return {&weight_};
}

void Dense::init(Rng& rng) {
  glorot(weight_.value, in_, out_, rng);
  bias_.value.fill(0.0);
}

nlohmann::ordered_json Dense::spec() const {
  return {{"kind", "Dense"}, {"in", in_}, {"out", out_}, {"bias", bias_enabled_}};
}

// ---- Conv1D ----

Conv1D::Conv1D(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
               std::size_t padding)
    : in_ch_(in_channels),
      out_ch_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding),
      weight_(make_param("weight", {out_channels, kernel, in_channels})),
      bias_(make_param("bias", {out_channels})) {
  if (in_ch_ == 0 || out_ch_ == 0 || kernel_ == 0 || stride_ == 0) {
    throw ShapeError("Conv1D: channels, kernel and stride must be positive");
  }
}

std::size_t Conv1D::output_length(std::size_t length) const {
  const std::size_t padded = length + 2 * padding_;
  if (padded < kernel_) return 0;
  return (padded - kernel_) / stride_ + 1;
}

Shape Conv1D::output_shape(const Shape& in) const {
  if (in.size() != 2 || in[1] != in_ch_) {
    throw ShapeError("Conv1D: expected input shape [length, " + std::to_string(in_ch_) + "], got " +
                     shape_string(in));
  }
  const std::size_t len = output_length(in[0]);
  if (len == 0) throw ShapeError("Conv1D: kernel larger than padded input " + shape_string(in));
  return {len, out_ch_};
}

Tensor Conv1D::infer(const Tensor& x) const {
  const Shape out_shape = output_shape(x.shape());
  const std::size_t len_in = x.dim(0);
  const std::size_t len_out = out_shape[0];
  Tensor y(out_shape);
  const auto& w = weight_.value.data();
  for (std::size_t t = 0; t < len_out; ++t) {
    for (std::size_t o = 0; o < out_ch_; ++o) {
      double acc = bias_.value[o];
      for (std::size_t k = 0; k < kernel_; ++k) {
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * stride_ + k) - static_cast<std::ptrdiff_t>(padding_);
        if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len_in)) continue;
        const double* xr = x.data().data() + static_cast<std::size_t>(pos) * in_ch_;
        const double* wr = w.data() + (o * kernel_ + k) * in_ch_;
        for (std::size_t c = 0; c < in_ch_; ++c) acc += wr[c] * xr[c];
      }
      y[t * out_ch_ + o] = acc;
    }
  }
  return y;
}

Tensor Conv1D::backward(const Tensor& grad_out) {
  const Tensor& x = cached_input();
  const Shape out_shape = output_shape(x.shape());
  expect_shape("Conv1D backward", out_shape, grad_out.shape());
  const std::size_t len_in = x.dim(0);
  Tensor dx(x.shape());
  const auto& w = weight_.value.data();
  auto& gw = weight_.grad.data();
  for (std::size_t t = 0; t < out_shape[0]; ++t) {
    for (std::size_t o = 0; o < out_ch_; ++o) {
      const double g = grad_out[t * out_ch_ + o];
      bias_.grad[o] += g;
      for (std::size_t k = 0; k < kernel_; ++k) {
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * stride_ + k) - static_cast<std::ptrdiff_t>(padding_);
        if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len_in)) continue;
        const std::size_t xoff = static_cast<std::size_t>(pos) * in_ch_;
        const std::size_t woff = (o * kernel_ + k) * in_ch_;
        for (std::size_t c = 0; c < in_ch_; ++c) {
          gw[woff + c] += g * x[xoff + c];
          dx[xoff + c] += w[woff + c] * g;
        }
      }
    }
  }
  return dx;
}

void Conv1D::init(Rng& rng) {
  glorot(weight_.value, in_ch_ * kernel_, out_ch_ * kernel_, rng);
  bias_.value.fill(0.0);
}

nlohmann::ordered_json Conv1D::spec() const {
  return {{"kind", "Conv1D"}, {"in_channels", in_ch_}, {"out_channels", out_ch_},
          {"kernel", kernel_}, {"stride", stride_},    {"padding", padding_}};
}

// ---- activations ----

Tensor ReLU::infer(const Tensor& x) const {
  Tensor y = x;
  for (auto& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor ReLU::backward(const Tensor& grad_out) {
  const Tensor& x = cached_input();
  Tensor dx = grad_out;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(x[i] > 0.0)) dx[i] = 0.0;
  }
  return dx;
}

Tensor Sigmoid::infer(const Tensor& x) const {
  Tensor y = x;
  for (auto& v : y.data()) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  return y;
}

Tensor Sigmoid::backward(const Tensor& grad_out) {
  Tensor s = infer(cached_input());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = grad_out[i] * s[i] * (1.0 - s[i]);
  return s;
}

Tensor Tanh::infer(const Tensor& x) const {
  Tensor y = x;
  for (auto& v : y.data()) v = std::tanh(v);
  return y;
}

Tensor Tanh::backward(const Tensor& grad_out) {
  Tensor t = infer(cached_input());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = grad_out[i] * (1.0 - t[i] * t[i]);
  return t;
}

// ---- shape layers ----

Shape Reshape::output_shape(const Shape& in) const {
  if (shape_size(in) != shape_size(target_)) {
    throw ShapeError("Reshape: cannot reshape " + shape_string(in) + " to " + shape_string(target_));
  }
  return target_;
}

Shape Upsample1D::output_shape(const Shape& in) const {
  if (in.size() != 2) throw ShapeError("Upsample1D: expected [length, channels], got " + shape_string(in));
  return {in[0] * factor_, in[1]};
}

Tensor Upsample1D::infer(const Tensor& x) const {
  const Shape out = output_shape(x.shape());
  const std::size_t ch = x.dim(1);
  Tensor y(out);
  for (std::size_t t = 0; t < x.dim(0); ++t) {
    for (std::size_t r = 0; r < factor_; ++r) {
      for (std::size_t c = 0; c < ch; ++c) y[(t * factor_ + r) * ch + c] = x[t * ch + c];
    }
  }
  return y;
}

Tensor Upsample1D::backward(const Tensor& grad_out) {
  const Tensor& x = cached_input();
  const std::size_t ch = x.dim(1);
  Tensor dx(x.shape());
  for (std::size_t t = 0; t < x.dim(0); ++t) {
    for (std::size_t r = 0; r < factor_; ++r) {
      for (std::size_t c = 0; c < ch; ++c) dx[t * ch + c] += grad_out[(t * factor_ + r) * ch + c];
    }
  }
  return dx;
}

std::unique_ptr<Layer> layer_from_spec(const nlohmann::json& spec) {
  const auto kind = spec.at("kind").get<std::string>();
  if (kind == "Dense") {
    return std::make_unique<Dense>(spec.at("in").get<std::size_t>(), spec.at("out").get<std::size_t>(),
                                   spec.value("bias", true));
  }
  if (kind == "Conv1D") {
    return std::make_unique<Conv1D>(spec.at("in_channels").get<std::size_t>(),
                                    spec.at("out_channels").get<std::size_t>(), spec.at("kernel").get<std::size_t>(),
                                    spec.value("stride", std::size_t{1}), spec.value("padding", std::size_t{0}));
  }
  if (kind == "ReLU") return std::make_unique<ReLU>();
  if (kind == "Sigmoid") return std::make_unique<Sigmoid>();
  if (kind == "Tanh") return std::make_unique<Tanh>();
  if (kind == "Flatten") return std::make_unique<Flatten>();
  if (kind == "Reshape") return std::make_unique<Reshape>(spec.at("target").get<Shape>());
  if (kind == "Upsample1D") return std::make_unique<Upsample1D>(spec.at("factor").get<std::size_t>());
  throw Error("unknown layer kind '" + kind + "'");
}

}  // namespace repute::nn
