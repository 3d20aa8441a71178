#pragma once

#include <memory>
#include <vector>

#include "repute/nn/layers.hpp"

namespace repute::nn {

enum class OptimizerKind { SGD, Adam };

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Applies one update from each parameter's accumulated gradient.
  virtual void step(const std::vector<Param*>& params) = 0;
};

class Sgd final : public Optimizer {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(const std::vector<Param*>& params) override;

 private:
  double lr_;
};

/// Adam with bias correction. Moment buffers are keyed by position in `params`,
/// so the same parameter list must be passed on every step.
class Adam final : public Optimizer {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(const std::vector<Param*>& params) override;

 private:
  double lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double lr);

}  // namespace repute::nn
