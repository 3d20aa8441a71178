#include "repute/nn/gradient_check.hpp"

#include <algorithm>
#include <cmath>

namespace repute::nn {

double gradient_check(const std::vector<Param*>& params, const Objective& objective, double eps) {
  for (Param* p : params) p->grad.fill(0.0);
  objective.accumulate_gradients();
  double worst = 0.0;
  for (Param* p : params) {
    auto& w = p->value.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + eps;
      const double up = objective.value();
      w[i] = saved - eps;
      const double down = objective.value();
      w[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p->grad[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

double gradient_check(Network& net, LossKind kind, const Tensor& input, const Tensor& target, double eps) {
  Objective obj{
      [&] { return loss_value(kind, target, net.infer(input)); },
      [&] {
        const Tensor out = net.forward(input);
        net.backward(loss_grad(kind, target, out));
      },
  };
  return gradient_check(net.params(), obj, eps);
}

}  // namespace repute::nn
