#include "repute/nn/network.hpp"

namespace repute::nn {

Network::Network(const Network& other) : input_shape_(other.input_shape_), shapes_(other.shapes_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Network& Network::add(std::unique_ptr<Layer> layer) {
  const Shape in = layers_.empty() ? input_shape_ : output_shape();
  try {
    (void)layer->output_shape(in);
  } catch (const ShapeError& e) {
    throw ShapeError("layer " + std::to_string(layers_.size()) + " (" + std::string(layer_kind_name(layer->kind())) +
                     "): " + e.what());
  }
  shapes_.push_back(in);
  layers_.push_back(std::move(layer));
  return *this;
}

Shape Network::output_shape() const {
  if (layers_.empty()) return input_shape_;
  return layers_.back()->output_shape(shapes_.back());
}

void Network::init(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : layers_) l->init(rng);
  zero_grad();
}

void Network::check_input(const Tensor& x) const {
  if (x.shape() != input_shape_) {
    throw ShapeError("layer 0 (" +
                     std::string(layers_.empty() ? "input" : layer_kind_name(layers_.front()->kind())) +
                     "): expected shape " + shape_string(input_shape_) + ", got " + shape_string(x.shape()));
  }
  if (!x.all_finite()) throw Error("network input contains non-finite values");
}

Tensor Network::forward(const Tensor& x) {
  check_input(x);
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i]->forward(h);
    if (!h.all_finite()) {
      throw Error("layer " + std::to_string(i) + " (" + std::string(layer_kind_name(layers_[i]->kind())) +
                  ") produced a non-finite value");
    }
  }
  forward_done_ = true;
  return h;
}

Tensor Network::infer(const Tensor& x) const {
  if (layers_.empty()) return x;
  return infer_prefix(x, layers_.size() - 1);
}

Tensor Network::infer_prefix(const Tensor& x, std::size_t last) const {
  check_input(x);
  Tensor h = x;
  for (std::size_t i = 0; i <= last && i < layers_.size(); ++i) {
    h = layers_[i]->infer(h);
    if (!h.all_finite()) {
      throw Error("layer " + std::to_string(i) + " (" + std::string(layer_kind_name(layers_[i]->kind())) +
                  ") produced a non-finite value");
    }
  }
  return h;
}

Tensor Network::backward(const Tensor& grad_out) {
  if (!forward_done_) throw Error("Network::backward called before forward");
  Tensor g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g);
  return g;
}

std::vector<Param*> Network::params() {
  std::vector<Param*> out;
  for (auto& l : layers_) {
    for (Param* p : l->params()) out.push_back(p);
  }
  return out;
}

std::vector<const Param*> Network::params() const {
  std::vector<const Param*> out;
  for (const auto& l : layers_) {
    for (Param* p : l->params()) out.push_back(p);
  }
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Param* p : params()) n += p->value.size();
  return n;
}

void Network::zero_grad() {
  for (Param* p : params()) p->grad.fill(0.0);
}

}  // namespace repute::nn
