#pragma once

#include "repute/nn/tensor.hpp"

namespace repute::nn {

enum class LossKind { MSE, BinaryCrossEntropy };

/// (1/n) * sum (x_i - x_hat_i)^2 over all n elements.
double mse_loss(const Tensor& x, const Tensor& x_hat);
/// d mse / d x_hat.
Tensor mse_grad(const Tensor& x, const Tensor& x_hat);

/// Mean binary cross-entropy of probabilities `p` against 0/1 `target`; p is clipped to [1e-12, 1-1e-12].
double bce_loss(const Tensor& target, const Tensor& p);
Tensor bce_grad(const Tensor& target, const Tensor& p);

double loss_value(LossKind kind, const Tensor& target, const Tensor& output);
Tensor loss_grad(LossKind kind, const Tensor& target, const Tensor& output);

}  // namespace repute::nn
