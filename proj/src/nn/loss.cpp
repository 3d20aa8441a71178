#include "repute/nn/loss.hpp"

#include <algorithm>
#include <cmath>

namespace repute::nn {
namespace {

constexpr double kProbClip = 1e-12;

void check_same(const char* who, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(who) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
  if (a.size() == 0) throw ShapeError(std::string(who) + ": empty tensors");
}

}  // namespace

double mse_loss(const Tensor& x, const Tensor& x_hat) {
  check_same("mse_loss", x, x_hat);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - x_hat[i];
    sum += d * d;
  }
  return sum / static_cast<double>(x.size());
}

Tensor mse_grad(const Tensor& x, const Tensor& x_hat) {
  check_same("mse_grad", x, x_hat);
  Tensor g(x_hat.shape());
  const double scale = 2.0 / static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = scale * (x_hat[i] - x[i]);
  return g;
}

double bce_loss(const Tensor& target, const Tensor& p) {
  check_same("bce_loss", target, p);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kProbClip, 1.0 - kProbClip);
    sum -= target[i] * std::log(q) + (1.0 - target[i]) * std::log(1.0 - q);
  }
  return sum / static_cast<double>(p.size());
}

Tensor bce_grad(const Tensor& target, const Tensor& p) {
  check_same("bce_grad", target, p);
  Tensor g(p.shape());
  const double n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < kProbClip || p[i] > 1.0 - kProbClip) continue;  // clipped region is flat
    g[i] = (p[i] - target[i]) / (p[i] * (1.0 - p[i]) * n);
  }
  return g;
}

double loss_value(LossKind kind, const Tensor& target, const Tensor& output) {
  return kind == LossKind::MSE ? mse_loss(target, output) : bce_loss(target, output);
}

Tensor loss_grad(LossKind kind, const Tensor& target, const Tensor& output) {
  return kind == LossKind::MSE ? mse_grad(target, output) : bce_grad(target, output);
}

}  // namespace repute::nn
