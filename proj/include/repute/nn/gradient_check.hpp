#pragma once

#include <functional>
#include <vector>

#include "repute/nn/loss.hpp"
#include "repute/nn/network.hpp"

namespace repute::nn {

/// A scalar objective over some parameters: `value` evaluates the loss at the current
/// parameter values; `accumulate_gradients` adds the analytic gradient into Param::grad.
struct Objective {
  std::function<double()> value;
  std::function<void()> accumulate_gradients;
};

/// Max over every parameter element of |g_a - g_n| / max(|g_a|, |g_n|, 1e-12), where g_n
/// is the central finite difference with step `eps`.
double gradient_check(const std::vector<Param*>& params, const Objective& objective, double eps = 1e-5);

/// Convenience wrapper: loss(kind, target, net(input)).
double gradient_check(Network& net, LossKind kind, const Tensor& input, const Tensor& target, double eps = 1e-5);

}  // namespace repute::nn
