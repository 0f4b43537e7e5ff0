#pragma once

#include <vector>

#include "clkcrec/tape.hpp"

namespace clk {

// Adam with bias correction. State accumulators are created lazily on the
// first step and must keep matching the parameter shapes afterwards.
class AdamState {
 public:
  explicit AdamState(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                     double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // applies one update from Param::grad, then leaves grads untouched
  void step(std::vector<Param*>& params);

  long step_count() const { return step_; }
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long step_ = 0;
  std::vector<DenseMatrix> m_, v_;
};

}  // namespace clk
